//! Script execution against the lazy search tree, optionally shadowed by
//! the oracle.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use lazy_search_tree::{
    BoundReport, Config, Error as TreeError, Handle, LazySearchTree, Observation, OracleDict, Outcome, QueryKind, SplitMode,
    Stats,
};
use thiserror::Error;

use crate::script::{Op, Script};

pub const CSV_HEADER: &str = "n,q,comparisons,B,uniform_bound,gaps,intervals,chunks,time_ns";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub mode: SplitMode,
    pub seed: u64,
    /// Shadow every operation on the oracle and compare answers.
    pub verify: bool,
    /// Keep every query outcome in the report.
    pub record_answers: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            mode: SplitMode::default(),
            seed: 0,
            verify: false,
            record_answers: false,
        }
    }
}

#[derive(Debug, Error)]
#[error("line {line}: {message}")]
pub struct RunError {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct TreeReport {
    pub id: usize,
    pub stats: Stats,
    pub bound: BoundReport,
}

#[derive(Clone, Debug, Default)]
pub struct RunReport {
    /// Trees still alive at the end, by id.
    pub trees: Vec<TreeReport>,
    pub mismatches: usize,
    /// Descriptions of the first few mismatches.
    pub mismatch_log: Vec<String>,
    /// Query outcomes in execution order, when recorded.
    pub answers: Vec<Outcome<i64>>,
    /// Informational lines, such as the ids assigned by `split`.
    pub log: Vec<String>,
    pub ops: usize,
    pub inserts: u64,
    pub insert_comparisons: u64,
    /// Inserts into a tree that had already answered a query.
    pub post_query_inserts: u64,
    pub post_query_insert_comparisons: u64,
    pub wall: Duration,
}

impl RunReport {
    pub fn comparisons(&self) -> u64 {
        self.trees.iter().map(|t| t.stats.total_comparisons()).sum()
    }

    pub fn insert_mean(&self) -> f64 {
        ratio(self.insert_comparisons, self.inserts)
    }

    pub fn post_query_insert_mean(&self) -> f64 {
        ratio(self.post_query_insert_comparisons, self.post_query_inserts)
    }

    /// `key=value` lines. Per-tree values are prefixed with `tree<id>.`.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for t in &self.trees {
            let st = &t.stats;
            let p = format!("tree{}.", t.id);
            for (k, v) in [
                ("n", st.n.to_string()),
                ("q", st.queries.to_string()),
                ("comparisons", st.total_comparisons().to_string()),
                ("B", format!("{:.2}", t.bound.b)),
                ("uniform_bound", format!("{:.2}", t.bound.uniform_bound)),
                ("gaps", st.gaps.to_string()),
                ("intervals", st.intervals.to_string()),
                ("chunks", st.chunks_created.to_string()),
                ("rotations", st.rotations.to_string()),
            ] {
                let _ = writeln!(s, "{p}{k}={v}");
            }
        }
        let n: usize = self.trees.iter().map(|t| t.stats.n).sum();
        let _ = writeln!(s, "trees={}", self.trees.len());
        let _ = writeln!(s, "ops={}", self.ops);
        let _ = writeln!(s, "n={n}");
        let _ = writeln!(s, "comparisons={}", self.comparisons());
        let _ = writeln!(s, "insert_mean={:.4}", self.insert_mean());
        let _ = writeln!(s, "post_query_insert_mean={:.4}", self.post_query_insert_mean());
        let _ = writeln!(s, "mismatches={}", self.mismatches);
        let _ = writeln!(s, "time_ns={}", self.wall.as_nanos());
        s
    }

    pub fn csv(&self) -> String {
        let mut s = format!("{CSV_HEADER}\n");
        for t in &self.trees {
            let st = &t.stats;
            let _ = writeln!(
                s,
                "{},{},{},{:.3},{:.3},{},{},{},{}",
                st.n,
                st.queries,
                st.total_comparisons(),
                t.bound.b,
                t.bound.uniform_bound,
                st.gaps,
                st.intervals,
                st.chunks_created,
                st.wall_time.as_nanos()
            );
        }
        s
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

struct Slot {
    tree: LazySearchTree<i64, usize>,
    oracle: Option<OracleDict<i64, usize>>,
    queried: bool,
}

struct Runner {
    opts: RunOptions,
    trees: Vec<Option<Slot>>,
    cur: usize,
    handles: Vec<Option<Handle>>,
    report: RunReport,
    line: usize,
}

type Step<T> = Result<T, RunError>;

impl Runner {
    fn err<T>(&self, message: impl Into<String>) -> Step<T> {
        Err(RunError {
            line: self.line,
            message: message.into(),
        })
    }

    fn tree_err<T>(&self, e: TreeError) -> Step<T> {
        self.err(e.to_string())
    }

    fn slot(&mut self) -> Step<&mut Slot> {
        let cur = self.cur;
        match self.trees.get_mut(cur).and_then(Option::as_mut) {
            Some(s) => Ok(s),
            None => Err(RunError {
                line: self.line,
                message: format!("tree {cur} does not exist"),
            }),
        }
    }

    fn take(&mut self, id: usize) -> Step<Slot> {
        match self.trees.get_mut(id).and_then(Option::take) {
            Some(s) => Ok(s),
            None => self.err(format!("tree {id} does not exist")),
        }
    }

    fn mismatch(&mut self, what: String) {
        self.report.mismatches += 1;
        if self.report.mismatch_log.len() < 20 {
            self.report.mismatch_log.push(format!("line {}: {what}", self.line));
        }
    }

    fn record(&mut self, o: &Observation<i64>) {
        if self.opts.record_answers {
            self.report.answers.push(o.outcome.clone());
        }
    }

    fn handle(&self, idx: usize) -> Step<Handle> {
        match self.handles.get(idx) {
            Some(Some(h)) => Ok(*h),
            Some(None) => self.err(format!("element @{idx} was already removed")),
            None => self.err(format!("element @{idx} was never inserted")),
        }
    }

    fn query(&mut self, kind: QueryKind<i64>) -> Step<()> {
        let slot = self.slot()?;
        slot.queried = true;
        let got = slot.tree.query(kind.clone());
        let want = slot.oracle.as_ref().map(|o| o.query(&kind));
        let got = match got {
            Ok(r) => r.observe(),
            Err(e) => return self.tree_err(e),
        };
        if let Some(want) = want {
            match want {
                Ok(w) if w == got => {}
                w => self.mismatch(format!("{kind:?}: tree {got:?}, oracle {w:?}")),
            }
        }
        self.record(&got);
        Ok(())
    }

    fn pop(&mut self, max: bool) -> Step<()> {
        let slot = self.slot()?;
        slot.queried = true;
        let e = match if max { slot.tree.max() } else { slot.tree.min() } {
            Ok(e) => e,
            Err(e) => return self.tree_err(e),
        };
        slot.tree.delete(e.handle).expect("live handle");
        let mut bad = None;
        if let Some(o) = slot.oracle.as_mut() {
            let kind = if max { QueryKind::Maximum } else { QueryKind::Minimum };
            let want = o.query(&kind).ok().and_then(|w| match w.outcome {
                Outcome::Element(k) => k,
                Outcome::Rank(_) => None,
            });
            if want != Some(e.key) {
                bad = Some(format!("pop: tree {}, oracle {want:?}", e.key));
            }
            let _ = o.delete(e.value as u64);
        }
        if let Some(b) = bad {
            self.mismatch(b);
        }
        self.handles[e.value] = None;
        let o = Observation {
            outcome: Outcome::Element(Some(e.key)),
            effective_rank: 0,
        };
        self.record(&o);
        Ok(())
    }

    fn fresh_slot(&self, tree: LazySearchTree<i64, usize>) -> Slot {
        Slot {
            tree,
            oracle: self.opts.verify.then(OracleDict::new),
            queried: false,
        }
    }

    fn step(&mut self, op: &Op) -> Step<()> {
        match op {
            Op::Insert(k) => {
                let idx = self.handles.len();
                let slot = self.slot()?;
                let c0 = slot.tree.comparisons();
                let h = slot.tree.insert(*k, idx);
                let cost = slot.tree.comparisons() - c0;
                let queried = slot.queried;
                if let Some(o) = slot.oracle.as_mut() {
                    o.insert_with_id(*k, idx, idx as u64);
                }
                self.handles.push(Some(h));
                self.report.inserts += 1;
                self.report.insert_comparisons += cost;
                if queried {
                    self.report.post_query_inserts += 1;
                    self.report.post_query_insert_comparisons += cost;
                }
            }
            Op::Construct(keys) => {
                let slot = self.slot()?;
                let st = slot.tree.stats();
                if st.n > 0 || st.total_comparisons() > 0 || st.inserts > 0 {
                    return self.err("construct needs a fresh, empty tree");
                }
                let base = self.handles.len();
                let items = keys.iter().enumerate().map(|(i, &k)| (k, base + i));
                let config = Config::new(self.opts.mode, self.opts.seed ^ self.cur as u64);
                let (tree, hs) = LazySearchTree::construct(items, config);
                let slot = self.slot()?;
                slot.tree = tree;
                if let Some(o) = slot.oracle.as_mut() {
                    for (i, &k) in keys.iter().enumerate() {
                        o.insert_with_id(k, base + i, (base + i) as u64);
                    }
                }
                self.handles.extend(hs.into_iter().map(Some));
            }
            Op::Select(r) => self.query(QueryKind::Select(*r))?,
            Op::Rank(k) => self.query(QueryKind::Rank(*k))?,
            Op::Contains(k) => self.query(QueryKind::Contains(*k))?,
            Op::Succ(k) => self.query(QueryKind::Successor(*k))?,
            Op::Pred(k) => self.query(QueryKind::Predecessor(*k))?,
            Op::Min => self.query(QueryKind::Minimum)?,
            Op::Max => self.query(QueryKind::Maximum)?,
            Op::PopMin => self.pop(false)?,
            Op::PopMax => self.pop(true)?,
            Op::Delete(i) => {
                let h = self.handle(*i)?;
                let slot = self.slot()?;
                if !slot.tree.contains_handle(h) {
                    return self.err(format!("element @{i} is not in tree {}", self.cur));
                }
                let (k, _) = slot.tree.delete(h).expect("live handle");
                let want = slot.oracle.as_mut().map(|o| o.delete(*i as u64));
                self.handles[*i] = None;
                if let Some(w) = want {
                    if w.as_ref().map(|w| w.0) != Ok(k) {
                        self.mismatch(format!("delete @{i}: tree {k}, oracle {w:?}"));
                    }
                }
            }
            Op::ChangeKey(i, k) => {
                let h = self.handle(*i)?;
                let slot = self.slot()?;
                if !slot.tree.contains_handle(h) {
                    return self.err(format!("element @{i} is not in tree {}", self.cur));
                }
                slot.tree.change_key(h, *k).expect("live handle");
                if let Some(o) = slot.oracle.as_mut() {
                    o.change_key(*i as u64, *k).expect("oracle has the element");
                }
            }
            Op::Split(r) => {
                let id = self.cur;
                let slot = self.take(id)?;
                let (l, r_tree) = match slot.tree.split(*r) {
                    Ok(p) => p,
                    Err(e) => {
                        let message = e.to_string();
                        self.trees[id] = None;
                        return self.err(message);
                    }
                };
                let (ol, or) = match slot.oracle {
                    Some(o) => {
                        let (a, b) = o.split(*r).expect("oracle split");
                        (Some(a), Some(b))
                    }
                    None => (None, None),
                };
                let a = self.trees.len();
                self.trees.push(Some(Slot {
                    tree: l,
                    oracle: ol,
                    queried: true,
                }));
                self.trees.push(Some(Slot {
                    tree: r_tree,
                    oracle: or,
                    queried: true,
                }));
                self.report.log.push(format!("split {id} -> {a} {}", a + 1));
                self.cur = a;
            }
            Op::Merge(a, b) => {
                if a == b {
                    return self.err("cannot merge a tree with itself");
                }
                let sa = self.take(*a)?;
                let sb = match self.take(*b) {
                    Ok(s) => s,
                    Err(e) => {
                        self.trees[*a] = Some(sa);
                        return Err(e);
                    }
                };
                let tree = match LazySearchTree::merge(sa.tree, sb.tree) {
                    Ok(t) => t,
                    Err(e) => return self.tree_err(e),
                };
                let oracle = match (sa.oracle, sb.oracle) {
                    (Some(x), Some(y)) => Some(OracleDict::merge(x, y).expect("oracle merge")),
                    _ => None,
                };
                let id = self.trees.len();
                self.trees.push(Some(Slot {
                    tree,
                    oracle,
                    queried: sa.queried || sb.queried,
                }));
                self.report.log.push(format!("merge {a} {b} -> {id}"));
                self.cur = id;
            }
            Op::Use(t) => {
                if self.trees.get(*t).is_none_or(Option::is_none) {
                    return self.err(format!("tree {t} does not exist"));
                }
                self.cur = *t;
            }
        }
        Ok(())
    }
}

pub fn run(script: &Script, opts: RunOptions) -> Result<RunReport, RunError> {
    let start = Instant::now();
    let mut r = Runner {
        opts,
        trees: Vec::new(),
        cur: 0,
        handles: Vec::new(),
        report: RunReport::default(),
        line: 0,
    };
    let first = r.fresh_slot(LazySearchTree::with_config(Config::new(opts.mode, opts.seed)));
    r.trees.push(Some(first));
    for (line, op) in &script.ops {
        r.line = *line;
        r.step(op)?;
        r.report.ops += 1;
    }
    let mut report = r.report;
    for (id, slot) in r.trees.into_iter().enumerate() {
        if let Some(s) = slot {
            let stats = s.tree.stats();
            let bound = BoundReport::new(&s.tree.gap_sizes(), stats.n, stats.queries as usize, stats.total_comparisons())
                .expect("tree gaps form a partition");
            report.trees.push(TreeReport { id, stats, bound });
        }
    }
    report.wall = start.elapsed();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::script::parse;

    fn verify() -> RunOptions {
        RunOptions {
            verify: true,
            record_answers: true,
            ..RunOptions::default()
        }
    }

    #[test]
    fn empty_script() {
        let r = run(&Script::default(), RunOptions::default()).unwrap();
        assert_eq!((r.trees[0].stats.n, r.comparisons()), (0, 0));
    }

    #[test]
    fn unknown_tree_is_an_error() {
        let e = run(&parse("insert 1\nuse 1\n").unwrap(), RunOptions::default()).unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn stale_index_reports_line() {
        let e = run(&parse("insert 1\ndelete @0\n\ndelete @0\n").unwrap(), RunOptions::default()).unwrap_err();
        assert_eq!(e.line, 4);
        assert!(e.message.contains("@0"));
    }

    #[test]
    fn split_merge_and_answers() {
        let text = "construct 5 3 8 1 9 2\nselect 2\nsplit 3\nmax\nuse 2\nmin\nmerge 1 2\nselect 4\npop_min\n";
        let r = run(&parse(text).unwrap(), verify()).unwrap();
        assert_eq!(r.mismatches, 0);
        let keys: Vec<Option<i64>> = r
            .answers
            .iter()
            .map(|a| match a {
                Outcome::Element(k) => *k,
                Outcome::Rank(_) => None,
            })
            .collect();
        assert_eq!(keys, vec![Some(2), Some(3), Some(5), Some(5), Some(1)]);
        assert_eq!(r.log, vec!["split 0 -> 1 2", "merge 1 2 -> 3"]);
        assert_eq!(r.trees.len(), 1);
        assert_eq!(r.trees[0].id, 3);
    }

    #[test]
    fn merge_out_of_order_fails() {
        let text = "construct 1 2 3 4\nsplit 2\nmerge 2 1\n";
        assert!(run(&parse(text).unwrap(), RunOptions::default()).is_err());
    }

    #[test]
    fn csv_has_fixed_header() {
        let r = run(&parse("insert 1\ninsert 2\nselect 1\n").unwrap(), RunOptions::default()).unwrap();
        let csv = r.csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next().unwrap().split(',').count(), 9);
    }
}
