//! Partitioning and selection over slices of record ids.
//!
//! All routines take a `key` accessor mapping an id to its key and count
//! every key comparison through the [`Comparator`]. Partitions are three-way,
//! so runs of equal keys are always kept together and reported.

use std::cmp::Ordering;

use rand::Rng;

use crate::compare::Comparator;

/// Three-way partition around `pivot`. Returns `(lt, gt)` with
/// `items[..lt] < pivot`, `items[lt..gt] == pivot`, `items[gt..] > pivot`.
/// One comparison per element.
pub fn partition3<'a, K, F>(items: &mut [u32], pivot: &K, key: &F, cmp: &Comparator) -> (usize, usize)
where
    K: Ord + 'a,
    F: Fn(u32) -> &'a K,
{
    let mut lt = 0;
    let mut i = 0;
    let mut gt = items.len();
    while i < gt {
        match cmp.cmp(key(items[i]), pivot) {
            Ordering::Less => {
                items.swap(lt, i);
                lt += 1;
                i += 1;
            }
            Ordering::Greater => {
                gt -= 1;
                items.swap(i, gt);
            }
            Ordering::Equal => i += 1,
        }
    }
    (lt, gt)
}

fn insertion_sort<'a, K, F>(items: &mut [u32], key: &F, cmp: &Comparator)
where
    K: Ord + 'a,
    F: Fn(u32) -> &'a K,
{
    for i in 1..items.len() {
        let mut j = i;
        while j > 0 && cmp.lt(key(items[j]), key(items[j - 1])) {
            items.swap(j, j - 1);
            j -= 1;
        }
    }
}

/// Median-of-medians pivot. Reorders `items`; returns the id of the pivot.
fn mom_pivot<'a, K, F>(items: &mut [u32], key: &F, cmp: &Comparator) -> u32
where
    K: Ord + 'a,
    F: Fn(u32) -> &'a K,
{
    let n = items.len();
    if n <= 5 {
        insertion_sort(items, key, cmp);
        return items[n / 2];
    }
    let mut m = 0;
    for g in (0..n).step_by(5) {
        let end = (g + 5).min(n);
        insertion_sort(&mut items[g..end], key, cmp);
        items.swap(m, g + (end - g) / 2);
        m += 1;
    }
    let (lo, _) = select_deterministic(&mut items[..m], m / 2, key, cmp);
    items[lo]
}

fn select_deterministic<'a, K, F>(items: &mut [u32], k: usize, key: &F, cmp: &Comparator) -> (usize, usize)
where
    K: Ord + 'a,
    F: Fn(u32) -> &'a K,
{
    let (mut a, mut b) = (0, items.len());
    loop {
        let p = mom_pivot(&mut items[a..b], key, cmp);
        let (lt, gt) = partition3(&mut items[a..b], key(p), key, cmp);
        if k < a + lt {
            b = a + lt;
        } else if k >= a + gt {
            a += gt;
        } else {
            return (a + lt, a + gt);
        }
    }
}

/// Rearrange `items` so that position `k` holds the element of rank `k + 1`.
///
/// Returns `(lo, hi)` with `lo <= k < hi`: `items[lo..hi]` are exactly the
/// elements whose key equals that of `items[k]`, everything before is
/// smaller and everything after larger. Random pivots; after
/// `2·log₂(len) + 4` rounds without finishing it falls back to
/// median-of-medians, which bounds the worst case linearly.
pub fn select_at<'a, K, F, R>(items: &mut [u32], k: usize, key: &F, cmp: &Comparator, rng: &mut R) -> (usize, usize)
where
    K: Ord + 'a,
    F: Fn(u32) -> &'a K,
    R: Rng + ?Sized,
{
    assert!(k < items.len(), "select index out of range");
    let (mut a, mut b) = (0, items.len());
    let mut budget = 2 * (usize::BITS - items.len().leading_zeros()) as usize + 4;
    loop {
        if budget == 0 {
            let (lo, hi) = select_deterministic(&mut items[a..b], k - a, key, cmp);
            return (a + lo, a + hi);
        }
        budget -= 1;
        let p = items[rng.gen_range(a..b)];
        let (lt, gt) = partition3(&mut items[a..b], key(p), key, cmp);
        if k < a + lt {
            b = a + lt;
        } else if k >= a + gt {
            a += gt;
        } else {
            return (a + lt, a + gt);
        }
    }
}

/// Outcome of cutting a slice in two around a separator element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cut {
    /// Size of the left part.
    pub at: usize,
    /// Index of an element whose key is the separator.
    pub sep: usize,
    /// Copies of the separator key in the left part.
    pub eq_left: usize,
    /// Copies of the separator key in the right part.
    pub eq_right: usize,
}

/// Exact cut: the left part receives the `at` smallest elements.
/// Requires `0 < at <= items.len()`.
pub fn cut_exact<'a, K, F, R>(items: &mut [u32], at: usize, key: &F, cmp: &Comparator, rng: &mut R) -> Cut
where
    K: Ord + 'a,
    F: Fn(u32) -> &'a K,
    R: Rng + ?Sized,
{
    let (lo, hi) = select_at(items, at - 1, key, cmp, rng);
    Cut {
        at,
        sep: at - 1,
        eq_left: at - lo,
        eq_right: hi - at,
    }
}

/// Random cut around a uniformly chosen pivot element. The outer part
/// (left if `outer_left`, else right) receives everything strictly beyond
/// the pivot on its side plus `j` copies of the pivot key, `j` uniform in
/// `1..=copies`, so the outer part's size is uniform over `1..=len`.
pub fn cut_random<'a, K, F, R>(items: &mut [u32], outer_left: bool, key: &F, cmp: &Comparator, rng: &mut R) -> Cut
where
    K: Ord + 'a,
    F: Fn(u32) -> &'a K,
    R: Rng + ?Sized,
{
    assert!(!items.is_empty());
    let p = items[rng.gen_range(0..items.len())];
    let (lt, gt) = partition3(items, key(p), key, cmp);
    let copies = gt - lt;
    let j = rng.gen_range(1..=copies);
    let (eq_left, eq_right) = if outer_left { (j, copies - j) } else { (copies - j, j) };
    Cut {
        at: lt + eq_left,
        sep: lt,
        eq_left,
        eq_right,
    }
}
