//! Comparison against conventional structures on the same scripts.

use std::cell::Cell;
use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use lazy_search_tree::compare::Comparator;
use lazy_search_tree::gap_index::GapIndex;
use lazy_search_tree::{Config, Handle, LazySearchTree, QueryKind, SplitMode};

use crate::script::{Op, Script};

pub const BENCH_HEADER: &str = "scenario,structure,n,q,reps,median_ns,comparisons";

/// Something that can replay a script. Returns `None` from `apply` for
/// operations it does not support; popped or selected keys otherwise.
pub trait Subject {
    fn name(&self) -> &'static str;
    fn apply(&mut self, op: &Op) -> Option<Option<i64>>;
    fn comparisons(&self) -> u64;
}

pub struct Lazy {
    tree: LazySearchTree<i64, usize>,
    handles: Vec<Handle>,
}

impl Lazy {
    pub fn new(mode: SplitMode, seed: u64) -> Self {
        Lazy {
            tree: LazySearchTree::with_config(Config::new(mode, seed)),
            handles: Vec::new(),
        }
    }
}

fn key_of<V>(r: lazy_search_tree::Result<lazy_search_tree::QueryResult<i64, V>>) -> Option<i64> {
    r.ok().and_then(|r| r.entry().map(|e| e.key))
}

impl Subject for Lazy {
    fn name(&self) -> &'static str {
        "lazy"
    }

    fn apply(&mut self, op: &Op) -> Option<Option<i64>> {
        let t = &mut self.tree;
        Some(match op {
            Op::Insert(k) => {
                let h = t.insert(*k, self.handles.len());
                self.handles.push(h);
                None
            }
            Op::Construct(keys) => {
                let base = self.handles.len();
                let items = keys.iter().enumerate().map(|(i, &k)| (k, base + i));
                let (tree, hs) = LazySearchTree::construct(items, Config::new(t.mode(), 1));
                *t = tree;
                self.handles.extend(hs);
                None
            }
            Op::Select(r) => key_of(t.query(QueryKind::Select(*r))),
            Op::Min => key_of(t.query(QueryKind::Minimum)),
            Op::Max => key_of(t.query(QueryKind::Maximum)),
            Op::PopMin => t.pop_min().ok().map(|p| p.0),
            Op::PopMax => t.pop_max().ok().map(|p| p.0),
            Op::Delete(i) => t.delete(self.handles[*i]).ok().map(|p| p.0),
            Op::ChangeKey(i, k) => {
                t.change_key(self.handles[*i], *k).ok()?;
                None
            }
            Op::Rank(k) => {
                t.query(QueryKind::Rank(*k)).ok()?;
                None
            }
            Op::Contains(k) => key_of(t.query(QueryKind::Contains(*k))),
            Op::Succ(k) => key_of(t.query(QueryKind::Successor(*k))),
            Op::Pred(k) => key_of(t.query(QueryKind::Predecessor(*k))),
            Op::Split(_) | Op::Merge(..) | Op::Use(_) => return None,
        })
    }

    fn comparisons(&self) -> u64 {
        self.tree.comparisons()
    }
}

/// Fully sorted order-statistic splay tree: every element is its own gap.
pub struct Splay {
    index: GapIndex<i64, usize>,
    keys: Vec<i64>,
    cmp: Comparator,
}

impl Default for Splay {
    fn default() -> Self {
        Splay {
            index: GapIndex::new(),
            keys: Vec::new(),
            cmp: Comparator::new(),
        }
    }
}

impl Splay {
    fn insert(&mut self, k: i64, idx: usize) {
        if self.index.is_empty() {
            self.index.insert_only(1, Some(k), Some(k), idx);
            return;
        }
        let hit = self.index.find_by_key(&k, true, &self.cmp).expect("non-empty");
        if hit.beyond {
            self.index.insert_after(hit.gap, 1, Some(k), Some(k), idx);
        } else {
            self.index.insert_before(hit.gap, 1, Some(k), Some(k), idx);
        }
    }

    fn remove_rank(&mut self, r: usize) -> Option<i64> {
        let (g, _) = self.index.find_by_rank(r).ok()?;
        let d = self.index.remove(g);
        d.high
    }

    fn select(&mut self, r: usize) -> Option<i64> {
        let (g, _) = self.index.find_by_rank(r).ok()?;
        self.index.high(g).copied()
    }

    fn find_idx(&mut self, idx: usize) -> Option<u32> {
        let k = self.keys[idx];
        let hit = self.index.find_by_key(&k, false, &self.cmp).ok()?;
        let mut g = Some(hit.gap);
        while let Some(x) = g {
            if *self.index.data(x) == idx {
                return Some(x);
            }
            g = self.index.next(x);
        }
        None
    }
}

impl Subject for Splay {
    fn name(&self) -> &'static str {
        "splay"
    }

    fn apply(&mut self, op: &Op) -> Option<Option<i64>> {
        let n = self.index.total();
        Some(match op {
            Op::Insert(k) => {
                self.insert(*k, self.keys.len());
                self.keys.push(*k);
                None
            }
            Op::Construct(keys) => {
                for &k in keys {
                    self.insert(k, self.keys.len());
                    self.keys.push(k);
                }
                None
            }
            Op::Select(r) => self.select(*r),
            Op::Min => self.select(1),
            Op::Max => self.select(n),
            Op::PopMin => self.remove_rank(1),
            Op::PopMax => self.remove_rank(n),
            Op::Delete(i) => {
                let g = self.find_idx(*i)?;
                self.index.remove(g).high
            }
            Op::ChangeKey(i, k) => {
                let g = self.find_idx(*i)?;
                self.index.remove(g);
                self.insert(*k, *i);
                self.keys[*i] = *k;
                None
            }
            _ => return None,
        })
    }

    fn comparisons(&self) -> u64 {
        self.cmp.count()
    }
}

thread_local! {
    static HEAP_COMPARISONS: Cell<u64> = const { Cell::new(0) };
}

#[derive(PartialEq, Eq)]
struct Counted(i64, usize);

impl PartialOrd for Counted {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Counted {
    fn cmp(&self, other: &Self) -> Ordering {
        HEAP_COMPARISONS.with(|c| c.set(c.get() + 1));
        (self.0, self.1).cmp(&(other.0, other.1))
    }
}

/// Binary min-heap. Decrease-key pushes a fresh entry and skips stale ones
/// on pop.
#[derive(Default)]
pub struct Heap {
    heap: BinaryHeap<Reverse<Counted>>,
    current: Vec<Option<i64>>,
    start: u64,
}

impl Heap {
    pub fn new() -> Self {
        Heap {
            start: HEAP_COMPARISONS.with(Cell::get),
            ..Heap::default()
        }
    }
}

impl Subject for Heap {
    fn name(&self) -> &'static str {
        "heap"
    }

    fn apply(&mut self, op: &Op) -> Option<Option<i64>> {
        Some(match op {
            Op::Insert(k) => {
                let idx = self.current.len();
                self.current.push(Some(*k));
                self.heap.push(Reverse(Counted(*k, idx)));
                None
            }
            Op::ChangeKey(i, k) => {
                self.current[*i].as_ref()?;
                self.current[*i] = Some(*k);
                self.heap.push(Reverse(Counted(*k, *i)));
                None
            }
            Op::PopMin => loop {
                let Reverse(Counted(k, i)) = self.heap.pop()?;
                if self.current[i] == Some(k) {
                    self.current[i] = None;
                    break Some(k);
                }
            },
            _ => return None,
        })
    }

    fn comparisons(&self) -> u64 {
        HEAP_COMPARISONS.with(Cell::get) - self.start
    }
}

/// Outcome of replaying one script on one structure.
#[derive(Clone, Debug)]
pub struct Replay {
    pub supported: bool,
    pub outputs: Vec<Option<i64>>,
    pub comparisons: u64,
    pub elapsed: Duration,
}

pub fn replay(subject: &mut dyn Subject, script: &Script) -> Replay {
    let start = Instant::now();
    let mut outputs = Vec::new();
    for (_, op) in &script.ops {
        match subject.apply(op) {
            Some(out) => {
                if op.is_query() {
                    outputs.push(out);
                }
            }
            None => {
                return Replay {
                    supported: false,
                    outputs,
                    comparisons: subject.comparisons(),
                    elapsed: start.elapsed(),
                }
            }
        }
    }
    Replay {
        supported: true,
        outputs,
        comparisons: subject.comparisons(),
        elapsed: start.elapsed(),
    }
}

pub struct BenchRow {
    pub scenario: String,
    pub structure: &'static str,
    pub n: usize,
    pub q: usize,
    pub reps: usize,
    pub median: Duration,
    pub comparisons: u64,
}

/// Replay `script` `reps` times on each structure. Structures that cannot
/// run the script are skipped.
pub fn bench(label: &str, script: &Script, n: usize, reps: usize, mode: SplitMode) -> Vec<BenchRow> {
    let q = script.ops.iter().filter(|o| o.1.is_query()).count();
    let makers: [fn(SplitMode) -> Box<dyn Subject>; 3] = [
        |m| Box::new(Lazy::new(m, 7)),
        |_| Box::new(Splay::default()),
        |_| Box::new(Heap::new()),
    ];
    let mut rows = Vec::new();
    for make in makers {
        let mut times = Vec::new();
        let mut comparisons = 0;
        let mut name = "";
        for _ in 0..reps.max(1) {
            let mut s = make(mode);
            name = s.name();
            let r = replay(s.as_mut(), script);
            if !r.supported {
                times.clear();
                break;
            }
            times.push(r.elapsed);
            comparisons = r.comparisons;
        }
        if times.is_empty() {
            continue;
        }
        times.sort();
        rows.push(BenchRow {
            scenario: label.to_string(),
            structure: name,
            n,
            q,
            reps: times.len(),
            median: times[times.len() / 2],
            comparisons,
        });
    }
    rows
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut s = format!("{BENCH_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.scenario,
            r.structure,
            r.n,
            r.q,
            r.reps,
            r.median.as_nanos(),
            r.comparisons
        );
    }
    s
}
