//! Reference dictionary: a plain sorted vector. Slow but obviously correct,
//! used to check the tree's answers.

use crate::error::{Error, Result};
use crate::tree::{Observation, Outcome, QueryKind};

#[derive(Clone, Debug, Default)]
pub struct OracleDict<K, V> {
    /// Sorted by key, then by id. Ids grow with insertion order.
    items: Vec<(K, V, u64)>,
    next_id: u64,
}

impl<K: Ord + Clone, V: Clone> OracleDict<K, V> {
    pub fn new() -> Self {
        OracleDict {
            items: Vec::new(),
            next_id: 0,
        }
    }

    /// Ids are returned in input order.
    pub fn from_items(items: impl IntoIterator<Item = (K, V)>) -> (Self, Vec<u64>) {
        let mut d = Self::new();
        let ids = items.into_iter().map(|(k, v)| d.insert(k, v)).collect();
        (d, ids)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn keys(&self) -> Vec<K> {
        self.items.iter().map(|(k, _, _)| k.clone()).collect()
    }

    pub fn get(&self, id: u64) -> Option<(&K, &V)> {
        self.items.iter().find(|it| it.2 == id).map(|(k, v, _)| (k, v))
    }

    fn place(&mut self, key: K, value: V, id: u64) {
        let at = self.items.partition_point(|(k, _, i)| (k, *i) < (&key, id));
        self.items.insert(at, (key, value, id));
    }

    pub fn insert(&mut self, key: K, value: V) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        self.place(key, value, id);
        id
    }

    /// Insert under a caller-chosen id, which must not be in use.
    pub fn insert_with_id(&mut self, key: K, value: V, id: u64) {
        self.next_id = self.next_id.max(id + 1);
        self.place(key, value, id);
    }

    pub fn delete(&mut self, id: u64) -> Result<(K, V)> {
        let at = self.items.iter().position(|it| it.2 == id).ok_or(Error::StaleHandle)?;
        let (k, v, _) = self.items.remove(at);
        Ok((k, v))
    }

    pub fn change_key(&mut self, id: u64, key: K) -> Result<()> {
        let (_, v) = self.delete(id)?;
        self.place(key, v, id);
        Ok(())
    }

    fn count_lt(&self, key: &K) -> usize {
        self.items.partition_point(|(k, _, _)| k < key)
    }

    fn count_le(&self, key: &K) -> usize {
        self.items.partition_point(|(k, _, _)| k <= key)
    }

    fn key_at(&self, rank: usize) -> K {
        self.items[rank - 1].0.clone()
    }

    /// Id of the element of the given rank.
    pub fn id_at(&self, rank: usize) -> Option<u64> {
        rank.checked_sub(1).and_then(|i| self.items.get(i)).map(|it| it.2)
    }

    pub fn query(&self, kind: &QueryKind<K>) -> Result<Observation<K>> {
        let n = self.items.len();
        let found = |k: Option<K>, r: usize| Observation {
            outcome: Outcome::Element(k),
            effective_rank: r,
        };
        Ok(match kind {
            QueryKind::Select(r) => {
                if n == 0 {
                    return Err(Error::EmptyTree);
                }
                if *r == 0 || *r > n {
                    return Err(Error::RankOutOfRange { rank: *r, len: n });
                }
                found(Some(self.key_at(*r)), *r)
            }
            QueryKind::Minimum | QueryKind::Maximum if n == 0 => return Err(Error::EmptyTree),
            QueryKind::Minimum => found(Some(self.key_at(1)), 1),
            QueryKind::Maximum => found(Some(self.key_at(n)), n),
            QueryKind::Rank(k) => {
                let c = self.count_lt(k);
                Observation {
                    outcome: Outcome::Rank(c + 1),
                    effective_rank: (c + 1).min(n),
                }
            }
            QueryKind::Contains(_) | QueryKind::Successor(_) | QueryKind::Predecessor(_) if n == 0 => found(None, 0),
            QueryKind::Contains(k) => {
                let c = self.count_lt(k);
                let hit = c < n && self.items[c].0 == *k;
                found(hit.then(|| k.clone()), (c + 1).min(n))
            }
            QueryKind::Successor(k) => {
                let c = self.count_le(k);
                if c < n {
                    found(Some(self.key_at(c + 1)), c + 1)
                } else {
                    found(None, n)
                }
            }
            QueryKind::Predecessor(k) => {
                let c = self.count_lt(k);
                if c >= 1 {
                    found(Some(self.key_at(c)), c)
                } else {
                    found(None, 1)
                }
            }
        })
    }

    /// The `r` smallest elements and the rest.
    pub fn split(mut self, r: usize) -> Result<(Self, Self)> {
        if r > self.items.len() {
            return Err(Error::RankOutOfRange {
                rank: r,
                len: self.items.len(),
            });
        }
        let right = self.items.split_off(r);
        let next_id = self.next_id;
        Ok((self, OracleDict { items: right, next_id }))
    }

    pub fn merge(mut a: Self, b: Self) -> Result<Self> {
        if let (Some(x), Some(y)) = (a.items.last(), b.items.first()) {
            if x.0 > y.0 {
                return Err(Error::OrderViolation);
            }
        }
        a.next_id = a.next_id.max(b.next_id);
        for (k, v, id) in b.items {
            a.place(k, v, id);
        }
        Ok(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn queries_on_small_set() {
        let (d, _) = OracleDict::from_items([(5, 'a'), (1, 'b'), (5, 'c'), (9, 'd')]);
        let q = |k| d.query(&k).unwrap();
        assert_eq!(q(QueryKind::Rank(5)).outcome, Outcome::Rank(2));
        assert_eq!(q(QueryKind::Rank(10)).outcome, Outcome::Rank(5));
        assert_eq!(q(QueryKind::Rank(10)).effective_rank, 4);
        assert_eq!(q(QueryKind::Select(3)).outcome, Outcome::Element(Some(5)));
        assert_eq!(q(QueryKind::Contains(4)).outcome, Outcome::Element(None));
        assert_eq!(q(QueryKind::Successor(5)).outcome, Outcome::Element(Some(9)));
        assert_eq!(q(QueryKind::Successor(9)).effective_rank, 4);
        assert_eq!(q(QueryKind::Predecessor(5)).outcome, Outcome::Element(Some(1)));
        assert_eq!(q(QueryKind::Predecessor(1)).outcome, Outcome::Element(None));
    }

    #[test]
    fn split_merge_roundtrip() {
        let (d, _) = OracleDict::from_items((0..10).map(|i| (i, ())));
        let (a, b) = d.split(4).unwrap();
        assert_eq!(a.keys(), vec![0, 1, 2, 3]);
        let m = OracleDict::merge(a, b).unwrap();
        assert_eq!(m.keys(), (0..10).collect::<Vec<_>>());
        let (a, b) = m.split(5).unwrap();
        assert_eq!(OracleDict::merge(b, a).unwrap_err(), Error::OrderViolation);
    }

    #[test]
    fn change_key_keeps_id() {
        let (mut d, ids) = OracleDict::from_items([(1, 'x'), (2, 'y')]);
        d.change_key(ids[0], 7).unwrap();
        assert_eq!(d.get(ids[0]), Some((&7, &'x')));
        assert_eq!(d.keys(), vec![2, 7]);
    }
}
