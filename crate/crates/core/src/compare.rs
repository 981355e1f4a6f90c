//! Instrumented key comparison.
//!
//! Every key comparison performed by the tree goes through a [`Comparator`],
//! which keeps a monotone count. Nothing else in the crate calls `Ord::cmp`
//! on keys directly.

use std::cell::Cell;
use std::cmp::Ordering;

/// Total order on keys with a comparison counter.
#[derive(Debug, Default)]
pub struct Comparator {
    count: Cell<u64>,
}

impl Comparator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Three-way comparison; counts as one comparison.
    #[inline]
    pub fn cmp<K: Ord>(&self, a: &K, b: &K) -> Ordering {
        self.count.set(self.count.get() + 1);
        a.cmp(b)
    }

    #[inline]
    pub fn le<K: Ord>(&self, a: &K, b: &K) -> bool {
        self.cmp(a, b) != Ordering::Greater
    }

    #[inline]
    pub fn lt<K: Ord>(&self, a: &K, b: &K) -> bool {
        self.cmp(a, b) == Ordering::Less
    }

    #[inline]
    pub fn eq<K: Ord>(&self, a: &K, b: &K) -> bool {
        self.cmp(a, b) == Ordering::Equal
    }

    /// Comparisons performed so far.
    pub fn count(&self) -> u64 {
        self.count.get()
    }

    /// Compare `key` against an optional upper bound, where `None` is +∞.
    /// Costs nothing when the bound is infinite.
    #[inline]
    pub fn cmp_upper<K: Ord>(&self, key: &K, bound: Option<&K>) -> Ordering {
        match bound {
            Some(b) => self.cmp(key, b),
            None => Ordering::Less,
        }
    }

    /// Compare `key` against an optional lower bound, where `None` is −∞.
    #[inline]
    pub fn cmp_lower<K: Ord>(&self, key: &K, bound: Option<&K>) -> Ordering {
        match bound {
            Some(b) => self.cmp(key, b),
            None => Ordering::Greater,
        }
    }
}

impl Clone for Comparator {
    /// A clone starts with a fresh counter.
    fn clone(&self) -> Self {
        Self::new()
    }
}
