//! The lazy search tree: a sorted dictionary that only orders its elements
//! as far as the queries asked so far require.

use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;

use crate::compare::Comparator;
use crate::error::{Error, Result};
use crate::gap_index::{Detached, GapId, GapIndex};
use crate::interval::{interval_bound, IntervalId, RecordId, SplitMode, Store};
use crate::stats::compute_b;

static NEXT_HANDLE: AtomicU64 = AtomicU64::new(1);

fn fresh_handle() -> u64 {
    NEXT_HANDLE.fetch_add(1, AtomicOrdering::Relaxed)
}

/// Stable reference to one stored element. Valid from insertion until the
/// element is deleted, across every internal restructuring and across
/// split and merge of trees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Handle(u64);

impl Handle {
    pub fn id(self) -> u64 {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QueryKind<K> {
    /// One plus the number of keys smaller than the given key.
    Rank(K),
    /// The element of the given rank (1-based).
    Select(usize),
    /// An element with the given key, if any.
    Contains(K),
    /// The first element with key strictly greater.
    Successor(K),
    /// The last element with key strictly smaller.
    Predecessor(K),
    Minimum,
    Maximum,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry<K, V> {
    pub key: K,
    pub value: V,
    pub handle: Handle,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Answer<K, V> {
    Rank(usize),
    Element(Option<Entry<K, V>>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryResult<K, V> {
    pub answer: Answer<K, V>,
    /// Rank at which the tree was split to answer the query; 0 for an
    /// empty tree.
    pub effective_rank: usize,
}

/// Answer reduced to what two correct implementations must agree on.
/// Elements are compared by key, since equal keys may resolve to
/// different elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome<K> {
    Rank(usize),
    Element(Option<K>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observation<K> {
    pub outcome: Outcome<K>,
    pub effective_rank: usize,
}

impl<K: Clone, V> QueryResult<K, V> {
    pub fn observe(&self) -> Observation<K> {
        let outcome = match &self.answer {
            Answer::Rank(r) => Outcome::Rank(*r),
            Answer::Element(e) => Outcome::Element(e.as_ref().map(|e| e.key.clone())),
        };
        Observation {
            outcome,
            effective_rank: self.effective_rank,
        }
    }

    pub fn entry(&self) -> Option<&Entry<K, V>> {
        match &self.answer {
            Answer::Element(e) => e.as_ref(),
            Answer::Rank(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Config {
    pub mode: SplitMode,
    pub seed: u64,
}

impl Config {
    pub fn new(mode: SplitMode, seed: u64) -> Self {
        Config { mode, seed }
    }
}

/// Per-gap state stored in the gap index.
#[derive(Debug, Default)]
pub struct GapData {
    intervals: Vec<IntervalId>,
    /// Number of left-side intervals; insertion searches start here.
    split: usize,
    left_queried: bool,
    right_queried: bool,
    /// A record whose key equals the gap's lower bound, when known.
    min_rec: Option<RecordId>,
    /// A record whose key equals the gap's upper bound, when known.
    max_rec: Option<RecordId>,
}

/// Read-only description of one gap, in key order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GapView {
    pub size: usize,
    /// Interval sizes, left to right.
    pub intervals: Vec<usize>,
    /// Number of intervals assigned to the left side.
    pub left_side: usize,
    pub left_queried: bool,
    pub right_queried: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Stats {
    /// Comparisons made by this tree since it was created.
    pub comparisons: u64,
    /// Comparisons made by the trees this one was split or merged from.
    pub parent_comparisons: u64,
    pub n: usize,
    pub gaps: usize,
    pub intervals: usize,
    pub chunks_created: u64,
    /// Chunks created by construction or by inserting into an empty tree.
    pub base_chunks: u64,
    pub queries: u64,
    pub inserts: u64,
    pub deletes: u64,
    pub change_keys: u64,
    pub rotations: u64,
    /// Σ |Δᵢ| log₂(n / |Δᵢ|) over the current gaps.
    pub b_bound: f64,
    pub wall_time: Duration,
}

impl Stats {
    pub fn total_comparisons(&self) -> u64 {
        self.comparisons + self.parent_comparisons
    }
}

#[derive(Clone, Debug, Default)]
struct Counters {
    queries: u64,
    inserts: u64,
    deletes: u64,
    change_keys: u64,
    base_chunks: u64,
    parent_comparisons: u64,
    elapsed: Duration,
}

pub struct LazySearchTree<K, V> {
    gaps: GapIndex<K, GapData>,
    store: Store<K, V>,
    handles: FxHashMap<u64, RecordId>,
    n: usize,
    cmp: Comparator,
    rng: ChaCha8Rng,
    mode: SplitMode,
    counters: Counters,
}

impl<K, V> std::fmt::Debug for LazySearchTree<K, V> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LazySearchTree")
            .field("n", &self.n)
            .field("gaps", &self.gaps.len())
            .field("mode", &self.mode)
            .field("comparisons", &self.cmp.count())
            .finish()
    }
}

impl<K: Ord + Clone, V> Default for LazySearchTree<K, V> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K: Ord + Clone, V> LazySearchTree<K, V> {
    pub fn new() -> Self {
        Self::with_config(Config::default())
    }

    pub fn with_config(config: Config) -> Self {
        LazySearchTree {
            gaps: GapIndex::new(),
            store: Store::new(),
            handles: FxHashMap::default(),
            n: 0,
            cmp: Comparator::new(),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            mode: config.mode,
            counters: Counters::default(),
        }
    }

    /// Build a tree holding `items` in a single unsorted interval. Performs
    /// no comparisons. Handles are returned in input order.
    pub fn construct(items: impl IntoIterator<Item = (K, V)>, config: Config) -> (Self, Vec<Handle>) {
        let start = Instant::now();
        let mut tree = Self::with_config(config);
        let mut handles = Vec::new();
        let mut ids = Vec::new();
        for (k, v) in items {
            let h = fresh_handle();
            let rid = tree.store.add_record(k, v, h);
            tree.handles.insert(h, rid);
            handles.push(Handle(h));
            ids.push(rid);
        }
        if !ids.is_empty() {
            tree.n = ids.len();
            tree.seed_gap(ids);
        }
        tree.counters.elapsed += start.elapsed();
        (tree, handles)
    }

    fn seed_gap(&mut self, ids: Vec<RecordId>) {
        let g = self.gaps.insert_only(ids.len(), None, None, GapData::default());
        let iv = self.store.new_interval(ids, None, None, 0, 0, g, true);
        let d = self.gaps.data_mut(g);
        d.intervals = vec![iv];
        d.split = 1;
        self.counters.base_chunks += 1;
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn mode(&self) -> SplitMode {
        self.mode
    }

    /// Comparisons performed by this tree so far.
    pub fn comparisons(&self) -> u64 {
        self.cmp.count()
    }

    pub fn contains_handle(&self, h: Handle) -> bool {
        self.handles.contains_key(&h.0)
    }

    /// Key and value behind a handle.
    pub fn get(&self, h: Handle) -> Option<(&K, &V)> {
        let rid = *self.handles.get(&h.0)?;
        let r = self.store.record(rid);
        Some((&r.key, &r.value))
    }

    pub fn insert(&mut self, key: K, value: V) -> Handle {
        let start = Instant::now();
        let h = fresh_handle();
        self.insert_record(key, value, h);
        self.counters.inserts += 1;
        self.counters.elapsed += start.elapsed();
        Handle(h)
    }

    fn insert_record(&mut self, key: K, value: V, h: u64) {
        let rid = self.store.add_record(key, value, h);
        self.handles.insert(h, rid);
        self.n += 1;
        if self.gaps.is_empty() {
            self.seed_gap(vec![rid]);
            return;
        }
        let key = &self.store.record(rid).key;
        let hit = self.gaps.find_by_key(key, false, &self.cmp).expect("non-empty index");
        let g = hit.gap;
        if hit.beyond {
            self.gaps.set_high(g, Some(key.clone()));
            self.gaps.data_mut(g).max_rec = Some(rid);
        } else if let Some(lo) = self.gaps.low(g) {
            // Only the first gap can receive a key below its lower bound.
            if self.cmp.lt(key, lo) && self.gaps.prev(g).is_none() {
                let key = key.clone();
                self.gaps.set_low(g, Some(key));
                self.gaps.data_mut(g).min_rec = Some(rid);
            }
        }
        let d = self.gaps.data(g);
        self.store.insert_into(&d.intervals, d.split, rid, &self.cmp);
        self.gaps.add_size(g, 1);
    }

    fn gap_of(&mut self, rid: RecordId) -> (IntervalId, GapId) {
        let iv = self.store.owner(rid);
        (iv, self.store.interval(iv).gap)
    }

    /// Remove an element. Returns its key and value.
    pub fn delete(&mut self, h: Handle) -> Result<(K, V)> {
        let start = Instant::now();
        let rid = self.handles.remove(&h.0).ok_or(Error::StaleHandle)?;
        let out = self.delete_record(rid);
        self.counters.deletes += 1;
        self.counters.elapsed += start.elapsed();
        Ok(out)
    }

    fn delete_record(&mut self, rid: RecordId) -> (K, V) {
        let (_, g) = self.gap_of(rid);
        let (_, rec) = self.store.remove(rid, &self.cmp);
        self.n -= 1;
        self.gaps.add_size(g, -1);
        let d = self.gaps.data_mut(g);
        if d.min_rec == Some(rid) {
            d.min_rec = None;
        }
        if d.max_rec == Some(rid) {
            d.max_rec = None;
        }
        let size = self.gaps.size(g);
        if size == 0 {
            self.remove_gap(g);
        } else if self.gaps.data(g).intervals.len() as f64 > interval_bound(size) {
            self.rebalance(g);
        }
        (rec.key, rec.value)
    }

    fn remove_gap(&mut self, g: GapId) {
        let prev = self.gaps.prev(g);
        let next = self.gaps.next(g);
        if let (Some(p), Some(_)) = (prev, next) {
            // The predecessor takes over the removed key range.
            let high = self.gaps.high(g).cloned();
            self.gaps.set_high(p, high);
            self.gaps.data_mut(p).max_rec = None;
        }
        let d = self.gaps.remove(g);
        for iv in d.data.intervals {
            self.store.dissolve(iv);
        }
    }

    fn rebalance(&mut self, g: GapId) {
        let d = self.gaps.data_mut(g);
        let mut dir = std::mem::take(&mut d.intervals);
        let (lq, rq) = (d.left_queried, d.right_queried);
        let split = self.store.rule_b(&mut dir, lq, rq, &self.cmp);
        let d = self.gaps.data_mut(g);
        d.intervals = dir;
        d.split = split;
    }

    /// Change the key of an element.
    pub fn change_key(&mut self, h: Handle, new_key: K) -> Result<()> {
        let start = Instant::now();
        let rid = *self.handles.get(&h.0).ok_or(Error::StaleHandle)?;
        let (iv, g) = self.gap_of(rid);
        let below = self.gaps.low(g).is_some_and(|lo| self.cmp.lt(&new_key, lo));
        let above = !below && self.gaps.high(g).is_some_and(|hi| self.cmp.lt(hi, &new_key));
        if below || above {
            let (_, v) = self.delete_record(rid);
            self.insert_record(new_key, v, h.0);
        } else {
            self.store.unlink(rid, &self.cmp);
            self.store.record_mut(rid).key = new_key;
            let start_pos = self.store.interval(iv).pos as usize;
            let d = self.gaps.data_mut(g);
            if d.min_rec == Some(rid) {
                d.min_rec = None;
            }
            if d.max_rec == Some(rid) {
                d.max_rec = None;
            }
            let d = self.gaps.data(g);
            self.store.insert_into(&d.intervals, start_pos, rid, &self.cmp);
        }
        self.counters.change_keys += 1;
        self.counters.elapsed += start.elapsed();
        Ok(())
    }
}

impl<K: Ord + Clone, V: Clone> LazySearchTree<K, V> {
    fn entry(&self, rid: RecordId) -> Entry<K, V> {
        let r = self.store.record(rid);
        Entry {
            key: r.key.clone(),
            value: r.value.clone(),
            handle: Handle(r.handle),
        }
    }

    pub fn query(&mut self, kind: QueryKind<K>) -> Result<QueryResult<K, V>> {
        let start = Instant::now();
        let out = self.query_inner(kind);
        if out.is_ok() {
            self.counters.queries += 1;
        }
        self.counters.elapsed += start.elapsed();
        out
    }

    pub fn select(&mut self, rank: usize) -> Result<Entry<K, V>> {
        self.query(QueryKind::Select(rank)).map(|r| r.entry().cloned().expect("element"))
    }

    pub fn min(&mut self) -> Result<Entry<K, V>> {
        self.query(QueryKind::Minimum).map(|r| r.entry().cloned().expect("element"))
    }

    pub fn max(&mut self) -> Result<Entry<K, V>> {
        self.query(QueryKind::Maximum).map(|r| r.entry().cloned().expect("element"))
    }

    pub fn pop_min(&mut self) -> Result<(K, V)> {
        let e = self.min()?;
        self.delete(e.handle)
    }

    pub fn pop_max(&mut self) -> Result<(K, V)> {
        let e = self.max()?;
        self.delete(e.handle)
    }

    fn element(&self, rid: Option<RecordId>, r: usize) -> QueryResult<K, V> {
        QueryResult {
            answer: Answer::Element(rid.map(|x| self.entry(x))),
            effective_rank: r,
        }
    }

    fn query_inner(&mut self, kind: QueryKind<K>) -> Result<QueryResult<K, V>> {
        let n = self.n;
        match kind {
            QueryKind::Select(r) => {
                if n == 0 {
                    return Err(Error::EmptyTree);
                }
                if r == 0 || r > n {
                    return Err(Error::RankOutOfRange { rank: r, len: n });
                }
                let rid = self.restructure(r, false);
                Ok(self.element(Some(rid), r))
            }
            QueryKind::Minimum => {
                if n == 0 {
                    return Err(Error::EmptyTree);
                }
                let rid = self.restructure(1, false);
                Ok(self.element(Some(rid), 1))
            }
            QueryKind::Maximum => {
                if n == 0 {
                    return Err(Error::EmptyTree);
                }
                let rid = self.restructure(n, true);
                Ok(self.element(Some(rid), n))
            }
            QueryKind::Rank(k) => {
                if n == 0 {
                    return Ok(QueryResult {
                        answer: Answer::Rank(1),
                        effective_rank: 0,
                    });
                }
                let c = self.count(&k, false);
                let r = (c + 1).min(n);
                self.restructure(r, false);
                Ok(QueryResult {
                    answer: Answer::Rank(c + 1),
                    effective_rank: r,
                })
            }
            QueryKind::Contains(k) => {
                if n == 0 {
                    return Ok(self.element(None, 0));
                }
                let c = self.count(&k, false);
                let r = (c + 1).min(n);
                let rid = self.restructure(r, false);
                let hit = c < n && self.cmp.eq(self.store.key(rid), &k);
                Ok(self.element(hit.then_some(rid), r))
            }
            QueryKind::Successor(k) => {
                if n == 0 {
                    return Ok(self.element(None, 0));
                }
                let c = self.count(&k, true);
                if c < n {
                    let rid = self.restructure(c + 1, false);
                    Ok(self.element(Some(rid), c + 1))
                } else {
                    self.restructure(n, false);
                    Ok(self.element(None, n))
                }
            }
            QueryKind::Predecessor(k) => {
                if n == 0 {
                    return Ok(self.element(None, 0));
                }
                let c = self.count(&k, false);
                if c >= 1 {
                    let rid = self.restructure(c, false);
                    Ok(self.element(Some(rid), c))
                } else {
                    self.restructure(1, false);
                    Ok(self.element(None, 1))
                }
            }
        }
    }
}

impl<K: Ord + Clone, V> LazySearchTree<K, V> {
    /// Number of elements with key `< key` (`<= key` when `inclusive`).
    fn count(&mut self, key: &K, inclusive: bool) -> usize {
        let hit = self.gaps.find_by_key(key, inclusive, &self.cmp).expect("non-empty index");
        if hit.beyond {
            return self.n;
        }
        let prefix = self.gaps.offset(hit.gap);
        let d = self.gaps.data(hit.gap);
        prefix + self.store.count_in(&d.intervals, key, inclusive, d.split, &self.cmp)
    }

    /// Make sure a gap boundary sits next to rank `r` and return the record
    /// of rank `r`. The boundary goes right after `r`, except when `below`
    /// is set or `r == n`, where it goes right before `r`.
    fn restructure(&mut self, r: usize, below: bool) -> RecordId {
        let below = below || r == self.n;
        let (g, local) = self.gaps.find_by_rank(r).expect("rank in range");
        let gsize = self.gaps.size(g);
        let t = if below { local - 1 } else { local };
        if t == 0 || t == gsize {
            return self.gap_extreme(g, !below);
        }

        let old = std::mem::take(self.gaps.data_mut(g));
        let old_high = self.gaps.high(g).cloned();
        let (pos, rho) = self.store.locate_rank(&old.intervals, local);
        let left_len = t - (local - rho);
        let gr = self.gaps.insert_after(g, gsize - t, None, None, GapData::default());
        self.gaps.add_size(g, t as isize - gsize as isize);
        let split = self.store.split_for_query(
            old.intervals[pos],
            rho,
            left_len,
            g,
            gr,
            self.mode,
            &self.cmp,
            &mut self.rng,
        );
        let mut left_dir: Vec<IntervalId> = old.intervals[..pos].to_vec();
        left_dir.extend(&split.left);
        let mut right_dir = split.right;
        for &iv in &old.intervals[pos + 1..] {
            self.store.interval_mut(iv).gap = gr;
            right_dir.push(iv);
        }
        self.store.normalize_edges(&left_dir);
        self.store.normalize_edges(&right_dir);
        let ls = self.store.rule_b(&mut left_dir, old.left_queried, true, &self.cmp);
        let rs = self.store.rule_b(&mut right_dir, true, old.right_queried, &self.cmp);

        // With equal keys a cached extreme may have crossed to the other side.
        let min_rec = old.min_rec.filter(|&x| self.gap_of(x).1 == g);
        let max_rec = old.max_rec.filter(|&x| self.gap_of(x).1 == gr);
        self.gaps.set_high(g, Some(split.sep.clone()));
        self.gaps.set_low(gr, Some(split.sep));
        self.gaps.set_high(gr, old_high);
        *self.gaps.data_mut(g) = GapData {
            intervals: left_dir,
            split: ls,
            left_queried: old.left_queried,
            right_queried: true,
            min_rec,
            max_rec: (!below).then_some(split.answer),
        };
        *self.gaps.data_mut(gr) = GapData {
            intervals: right_dir,
            split: rs,
            left_queried: true,
            right_queried: old.right_queried,
            min_rec: below.then_some(split.answer),
            max_rec,
        };
        split.answer
    }

    /// Largest (or smallest) record of a gap whose edge already sits at a
    /// query boundary. Uses the cached record when there is one; otherwise
    /// scans the edge interval and tightens the gap bound to the found key.
    fn gap_extreme(&mut self, g: GapId, max: bool) -> RecordId {
        let d = self.gaps.data(g);
        let cached = if max { d.max_rec } else { d.min_rec };
        if let Some(rid) = cached {
            return rid;
        }
        let edge = if max {
            d.intervals.iter().rev().find(|&&iv| self.store.size(iv) > 0)
        } else {
            d.intervals.iter().find(|&&iv| self.store.size(iv) > 0)
        };
        let edge = *edge.expect("non-empty gap");
        if self.gaps.size(g) == 1 {
            return self.store.records_of(edge)[0];
        }
        let rid = self.store.extreme(edge, max, &self.cmp).expect("non-empty interval");
        let key = self.store.key(rid).clone();
        let bound = if max { self.gaps.high(g) } else { self.gaps.low(g) };
        let tight = bound.is_some_and(|b| self.cmp.eq(b, &key));
        if !tight {
            if max {
                if let Some(nx) = self.gaps.next(g) {
                    self.gaps.set_low(nx, Some(key.clone()));
                    self.gaps.data_mut(nx).min_rec = None;
                }
                self.gaps.set_high(g, Some(key));
            } else {
                if let Some(pv) = self.gaps.prev(g) {
                    self.gaps.set_high(pv, Some(key.clone()));
                    self.gaps.data_mut(pv).max_rec = None;
                }
                self.gaps.set_low(g, Some(key));
            }
        }
        let d = self.gaps.data_mut(g);
        if max {
            d.max_rec = Some(rid);
        } else {
            d.min_rec = Some(rid);
        }
        rid
    }

    // ---- split and merge ----

    fn empty_like(&mut self) -> Self {
        let seed = self.rng.gen();
        Self::with_config(Config::new(self.mode, seed))
    }

    fn restart_counter(&mut self, parent_total: u64) {
        self.cmp = Comparator::new();
        self.counters.parent_comparisons = parent_total;
    }

    fn total_comparisons(&self) -> u64 {
        self.cmp.count() + self.counters.parent_comparisons
    }

    /// Move whole gaps from `from` into this tree's store, keeping handles.
    fn adopt(&mut self, from: &mut Self, gaps: Vec<Detached<K, GapData>>) -> Vec<Detached<K, GapData>> {
        let mut out = Vec::with_capacity(gaps.len());
        for mut gap in gaps {
            let mut dir = Vec::with_capacity(gap.data.intervals.len());
            for &iv in &gap.data.intervals {
                let (meta, recs) = from.store.extract(iv);
                let ids: Vec<RecordId> = recs
                    .into_iter()
                    .map(|rec| {
                        from.handles.remove(&rec.handle);
                        let rid = self.store.add_record(rec.key, rec.value, rec.handle);
                        self.handles.insert(rec.handle, rid);
                        rid
                    })
                    .collect();
                let new_iv = self
                    .store
                    .new_interval(ids, meta.lo, meta.hi, meta.dup_lo, meta.dup_hi, 0, false);
                self.store.interval_mut(new_iv).pos = meta.pos;
                dir.push(new_iv);
            }
            from.n -= gap.size;
            self.n += gap.size;
            gap.data.intervals = dir;
            gap.data.min_rec = None;
            gap.data.max_rec = None;
            out.push(gap);
        }
        out
    }

    fn claim_gaps(&mut self, ids: &[GapId]) {
        for &g in ids {
            for &iv in &self.gaps.data(g).intervals {
                self.store.interval_mut(iv).gap = g;
            }
        }
    }

    /// Split into the `r` smallest elements and the rest. Both trees start
    /// fresh comparison counters. The tree that keeps this one's storage
    /// also keeps its query and chunk counters and records this tree's
    /// comparison total as its parent count; the other starts from zero, so
    /// totals summed over live trees never double count. Elements on the
    /// smaller side are moved.
    pub fn split(mut self, r: usize) -> Result<(Self, Self)> {
        if r > self.n {
            return Err(Error::RankOutOfRange { rank: r, len: self.n });
        }
        let start = Instant::now();
        let n = self.n;
        let mut other = self.empty_like();
        // Whether `self` ends up as the left tree.
        let self_left = if r == 0 {
            false
        } else if r == n {
            true
        } else {
            self.restructure(r, false);
            self.counters.queries += 1;
            let (g, local) = self.gaps.find_by_rank(r).expect("rank in range");
            debug_assert_eq!(local, self.gaps.size(g));
            let self_left = r > n - r;
            let moved = if self_left {
                self.gaps.drain_after(g)
            } else {
                self.gaps.drain_through(g)
            };
            let moved = other.adopt(&mut self, moved);
            let ids = other.gaps.extend_back(moved);
            other.claim_gaps(&ids);
            self_left
        };
        let total = self.total_comparisons();
        self.restart_counter(total);
        self.counters.elapsed += start.elapsed();
        Ok(if self_left { (self, other) } else { (other, self) })
    }

    /// Append every element of `other` (all keys at least this tree's
    /// largest) to this tree, leaving `other` empty. Order is checked on
    /// the stored gap bounds; when those are inconclusive, by scanning the
    /// two facing edge intervals for their extremes. No gaps are split. On
    /// `OrderViolation` neither tree loses elements.
    pub fn append(&mut self, other: &mut Self) -> Result<()> {
        let start = Instant::now();
        if other.n == 0 {
            return Ok(());
        }
        if self.n == 0 {
            std::mem::swap(self, other);
            return Ok(());
        }
        let last = self.gaps.last().expect("non-empty");
        let first = other.gaps.first().expect("non-empty");
        let fits = match (self.gaps.high(last), other.gaps.low(first)) {
            (Some(h), Some(l)) => self.cmp.le(h, l),
            _ => false,
        };
        let boundary = if fits {
            self.gaps.high(last).cloned().expect("bounded")
        } else {
            // Scan the facing edge intervals for the exact extremes.
            let last = self.gaps.last().expect("non-empty");
            let a = self.gap_extreme(last, true);
            let first = other.gaps.first().expect("non-empty");
            let b = other.gap_extreme(first, false);
            let ka = self.store.key(a).clone();
            if !self.cmp.le(&ka, other.store.key(b)) {
                return Err(Error::OrderViolation);
            }
            ka
        };
        let last = self.gaps.last().expect("non-empty");
        self.gaps.set_high(last, Some(boundary.clone()));
        let first = other.gaps.first().expect("non-empty");
        other.gaps.set_low(first, Some(boundary));
        other.gaps.data_mut(first).min_rec = None;

        let parent = self.total_comparisons() + other.total_comparisons();
        if self.n >= other.n {
            let moved = other.gaps.drain_all();
            let moved = self.adopt(other, moved);
            let ids = self.gaps.extend_back(moved);
            self.claim_gaps(&ids);
        } else {
            let moved = self.gaps.drain_all();
            let moved = other.adopt(self, moved);
            let ids = other.gaps.extend_front(moved);
            other.claim_gaps(&ids);
            std::mem::swap(self, other);
        }
        let c = std::mem::take(&mut other.counters);
        self.counters.queries += c.queries;
        self.counters.inserts += c.inserts;
        self.counters.deletes += c.deletes;
        self.counters.change_keys += c.change_keys;
        self.counters.base_chunks += c.base_chunks;
        self.store.chunks_created += other.store.chunks_created;
        self.restart_counter(parent);
        *other = other.empty_like();
        self.counters.elapsed += c.elapsed + start.elapsed();
        Ok(())
    }

    /// Merge two trees; every key of `a` must be at most every key of `b`.
    pub fn merge(mut a: Self, mut b: Self) -> Result<Self> {
        a.append(&mut b)?;
        Ok(a)
    }

    // ---- inspection ----

    pub fn gap_sizes(&self) -> Vec<usize> {
        self.gaps.sizes()
    }

    pub fn gap_views(&self) -> Vec<GapView> {
        self.gaps
            .ids()
            .into_iter()
            .map(|g| {
                let d = self.gaps.data(g);
                GapView {
                    size: self.gaps.size(g),
                    intervals: d.intervals.iter().map(|&iv| self.store.size(iv)).collect(),
                    left_side: d.split,
                    left_queried: d.left_queried,
                    right_queried: d.right_queried,
                }
            })
            .collect()
    }

    /// Gaps whose interval count exceeds 4·max(log₂|Δ|, 1).
    pub fn interval_bound_violations(&self) -> usize {
        self.gaps
            .ids()
            .into_iter()
            .filter(|&g| self.gaps.data(g).intervals.len() as f64 > interval_bound(self.gaps.size(g)))
            .count()
    }

    pub fn stats(&self) -> Stats {
        let sizes = self.gaps.sizes();
        let intervals = self.gaps.ids().iter().map(|&g| self.gaps.data(g).intervals.len()).sum();
        Stats {
            comparisons: self.cmp.count(),
            parent_comparisons: self.counters.parent_comparisons,
            n: self.n,
            gaps: sizes.len(),
            intervals,
            chunks_created: self.store.chunks_created,
            base_chunks: self.counters.base_chunks,
            queries: self.counters.queries,
            inserts: self.counters.inserts,
            deletes: self.counters.deletes,
            change_keys: self.counters.change_keys,
            rotations: self.gaps.rotations(),
            b_bound: compute_b(&sizes, self.n).unwrap_or(f64::NAN),
            wall_time: self.counters.elapsed,
        }
    }

    /// Walk the whole structure and report every broken invariant. Uses its
    /// own comparator, so the tree's count is unaffected.
    pub fn check_invariants(&mut self) -> Vec<String> {
        let cmp = Comparator::new();
        let mut errs = self.gaps.check(&cmp);
        if self.gaps.total() != self.n {
            errs.push(format!("gap sizes sum to {} but n = {}", self.gaps.total(), self.n));
        }
        if self.handles.len() != self.n || self.store.live_records() != self.n {
            errs.push(format!(
                "{} handles, {} records, n = {}",
                self.handles.len(),
                self.store.live_records(),
                self.n
            ));
        }
        let mut intervals_seen = 0;
        for g in self.gaps.ids() {
            let gsize = self.gaps.size(g);
            if gsize == 0 {
                errs.push(format!("gap {g} is empty"));
            }
            let d = self.gaps.data(g);
            let dir = d.intervals.clone();
            let (split, min_rec, max_rec) = (d.split, d.min_rec, d.max_rec);
            intervals_seen += dir.len();
            if split > dir.len() {
                errs.push(format!("gap {g}: side split {split} beyond {} intervals", dir.len()));
            }
            let (glo, ghi) = (self.gaps.low(g).cloned(), self.gaps.high(g).cloned());
            let mut sum = 0;
            for (p, &iv) in dir.iter().enumerate() {
                let i = self.store.interval(iv).clone();
                sum += i.size;
                if i.gap != g || i.pos as usize != p {
                    errs.push(format!("interval {iv}: gap/pos ({}, {}) != ({g}, {p})", i.gap, i.pos));
                }
                if self.store.stored_size(iv) != i.size {
                    errs.push(format!("interval {iv}: size {} != stored {}", i.size, self.store.stored_size(iv)));
                }
                if !self.store.owner_consistent(iv) {
                    errs.push(format!("interval {iv}: chunk ownership broken"));
                }
                if (p == 0) != i.lo.is_none() || (p + 1 == dir.len()) != i.hi.is_none() {
                    errs.push(format!("interval {iv}: edge bounds wrong at position {p}"));
                }
                if p + 1 < dir.len() {
                    let next = self.store.interval(dir[p + 1]);
                    match (&i.hi, &next.lo) {
                        (Some(a), Some(b)) if cmp.eq(a, b) => {}
                        _ => errs.push(format!("interval {iv}: separator not shared with next")),
                    }
                }
                let (mut dl, mut dh) = (0, 0);
                for r in self.store.records_of(iv) {
                    let k = self.store.key(r);
                    if i.lo.as_ref().is_some_and(|lo| cmp.lt(k, lo)) || i.hi.as_ref().is_some_and(|hi| cmp.lt(hi, k)) {
                        errs.push(format!("record {r} outside interval {iv} bounds"));
                    }
                    if glo.as_ref().is_some_and(|lo| cmp.lt(k, lo)) || ghi.as_ref().is_some_and(|hi| cmp.lt(hi, k)) {
                        errs.push(format!("record {r} outside gap {g} bounds"));
                    }
                    dl += usize::from(i.lo.as_ref().is_some_and(|lo| cmp.eq(k, lo)));
                    dh += usize::from(i.hi.as_ref().is_some_and(|hi| cmp.eq(k, hi)));
                    let h = self.store.record(r).handle;
                    if self.handles.get(&h) != Some(&r) {
                        errs.push(format!("record {r}: handle {h} does not resolve to it"));
                    }
                }
                if dl != i.dup_lo || dh != i.dup_hi {
                    errs.push(format!("interval {iv}: dup counts ({}, {}) != recount ({dl}, {dh})", i.dup_lo, i.dup_hi));
                }
            }
            if sum != gsize {
                errs.push(format!("gap {g}: size {gsize} != interval sum {sum}"));
            }
            for (rid, bound, what) in [(min_rec, &glo, "min"), (max_rec, &ghi, "max")] {
                if let Some(rid) = rid {
                    let owner_gap = self.gap_of(rid).1;
                    let ok = owner_gap == g && bound.as_ref().is_some_and(|b| cmp.eq(b, self.store.key(rid)));
                    if !ok {
                        errs.push(format!("gap {g}: cached {what} record is stale"));
                    }
                }
            }
        }
        if intervals_seen != self.store.live_intervals() {
            errs.push(format!(
                "{} intervals in directories but {} allocated",
                intervals_seen,
                self.store.live_intervals()
            ));
        }
        errs
    }
}
