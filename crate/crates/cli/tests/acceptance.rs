//! One pass/fail line per acceptance criterion. Tolerances are pinned as
//! constants next to each check.

use std::process::ExitCode;
use std::time::Instant;

use lazy_search_tree::stats::n_loglog;
use lazy_search_tree::{
    preview_split, uniform_bound, Config, Handle, LazySearchTree, OracleDict, Outcome, QueryKind, SplitMode,
};
use lst_cli::{run, RunOptions, RunReport, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const WORKLOADS: u64 = 200;
const OPS: usize = 2000;
const ORACLE_SECONDS: f64 = 60.0;
const PQ_RESIDUAL: f64 = 0.25;
const PQ_MEAN_AT_2_20: f64 = 20.0;
const FEW_QUERIES_BAND: f64 = 0.30;
const UPPER_CONSTANT: f64 = 64.0;
const INCSORT_CONSTANT: f64 = 16.0;
const CHI2_ALPHA: f64 = 0.001;

struct Outcomes {
    lines: Vec<String>,
    failed: usize,
}

impl Outcomes {
    fn report(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        let tag = if pass { "PASS" } else { "FAIL" };
        let line = format!("criterion {id:>2} [{tag}] {name}: {detail}");
        println!("{line}");
        self.lines.push(line);
        if !pass {
            self.failed += 1;
        }
    }
}

/// Totals from one randomized oracle workload.
#[derive(Default)]
struct WorkloadResult {
    mismatches: usize,
    queries: usize,
    interval_violations: usize,
    invariant_errors: usize,
    comparisons: u64,
    b: f64,
    n: usize,
    chunk_excess: i64,
}

fn random_kind(rng: &mut ChaCha8Rng, n: usize) -> QueryKind<i64> {
    let k = rng.gen_range(-10..1010);
    match rng.gen_range(0..7) {
        0 => QueryKind::Rank(k),
        1 => QueryKind::Select(rng.gen_range(0..=n + 1)),
        2 => QueryKind::Contains(k),
        3 => QueryKind::Successor(k),
        4 => QueryKind::Predecessor(k),
        5 => QueryKind::Minimum,
        _ => QueryKind::Maximum,
    }
}

fn oracle_workload(seed: u64, mode: SplitMode) -> WorkloadResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init: Vec<(i64, usize)> = (0..rng.gen_range(0..300)).map(|i| (rng.gen_range(0..1000), i)).collect();
    let mut next_value = init.len();
    let (mut tree, th) = LazySearchTree::construct(init.clone(), Config::new(mode, seed));
    let (mut oracle, oh) = OracleDict::from_items(init);
    let mut live: Vec<(Handle, u64)> = th.into_iter().zip(oh).collect();
    let mut res = WorkloadResult::default();

    let ask = |tree: &mut LazySearchTree<i64, usize>, oracle: &OracleDict<i64, usize>, kind: QueryKind<i64>, res: &mut WorkloadResult| {
        let a = tree.query(kind.clone());
        let b = oracle.query(&kind);
        let same = match (&a, &b) {
            (Ok(a), Ok(b)) => a.observe() == *b,
            (Err(a), Err(b)) => a == b,
            _ => false,
        };
        res.mismatches += usize::from(!same);
        res.queries += 1;
        res.interval_violations += tree.interval_bound_violations();
    };

    for _ in 0..OPS {
        let p = rng.gen_range(0..100);
        if p < 30 {
            let k = rng.gen_range(0..1000);
            let h = tree.insert(k, next_value);
            let o = oracle.insert(k, next_value);
            next_value += 1;
            live.push((h, o));
        } else if p < 45 {
            if live.is_empty() {
                continue;
            }
            let (h, o) = live.swap_remove(rng.gen_range(0..live.len()));
            let a = tree.delete(h).map(|x| x.0);
            let b = oracle.delete(o).map(|x| x.0);
            res.mismatches += usize::from(a != b);
        } else if p < 55 {
            if live.is_empty() {
                continue;
            }
            let (h, o) = live[rng.gen_range(0..live.len())];
            let k = rng.gen_range(0..1000);
            tree.change_key(h, k).expect("live handle");
            oracle.change_key(o, k).expect("live id");
        } else if p < 95 {
            let kind = random_kind(&mut rng, tree.len());
            ask(&mut tree, &oracle, kind, &mut res);
        } else {
            // Split at a random rank, query both halves, merge back.
            let r = rng.gen_range(0..=tree.len());
            let (mut l, mut rt) = std::mem::take(&mut tree).split(r).expect("rank in range");
            let (ol, or) = oracle.split(r).expect("rank in range");
            res.queries += 1;
            res.interval_violations += l.interval_bound_violations() + rt.interval_bound_violations();
            let kl = random_kind(&mut rng, l.len());
            ask(&mut l, &ol, kl, &mut res);
            let kr = random_kind(&mut rng, rt.len());
            ask(&mut rt, &or, kr, &mut res);
            tree = LazySearchTree::merge(l, rt).expect("halves are ordered");
            oracle = OracleDict::merge(ol, or).expect("halves are ordered");
        }
    }
    res.mismatches += usize::from(tree.len() != oracle.len());
    res.invariant_errors = tree.check_invariants().len();
    let st = tree.stats();
    res.comparisons = st.total_comparisons();
    res.b = st.b_bound;
    res.n = st.n;
    res.chunk_excess = st.chunks_created as i64 - (6 * st.queries + st.base_chunks) as i64;
    res
}

fn scenario(name: &str, params: &str, seed: u64, record: bool) -> RunReport {
    let script = Scenario::parse(name, params).expect("valid scenario").generate(seed);
    let opts = RunOptions {
        mode: SplitMode::RandomizedPivot,
        seed,
        verify: false,
        record_answers: record,
    };
    run(&script, opts).expect("scenario runs")
}

/// Lower and upper sandwich check on one (comparisons, B, n) triple.
/// Returns the upper ratio measured / (B + n log log n).
fn sandwich(comparisons: u64, b: f64, n: usize) -> (bool, f64) {
    let lower_ok = comparisons as f64 >= b - 4.0 * n as f64;
    let denom = b + n_loglog(n);
    let ratio = if denom > 0.0 { comparisons as f64 / denom } else { 0.0 };
    (lower_ok, ratio)
}

fn main() -> ExitCode {
    let mut out = Outcomes {
        lines: Vec::new(),
        failed: 0,
    };

    // 1, 2, and the workload half of 7 and 8.
    let start = Instant::now();
    let mut mismatches = 0;
    let mut violations = 0;
    let mut invariant_errors = 0;
    let mut queries = 0;
    let mut lower_failures = 0;
    let mut worst_ratio: f64 = 0.0;
    let mut chunk_failures = 0;
    for mode in [SplitMode::ExactMedian, SplitMode::RandomizedPivot] {
        for seed in 0..WORKLOADS {
            let r = oracle_workload(seed, mode);
            mismatches += r.mismatches;
            violations += r.interval_violations;
            invariant_errors += r.invariant_errors;
            queries += r.queries;
            let (lower_ok, ratio) = sandwich(r.comparisons, r.b, r.n);
            lower_failures += usize::from(!lower_ok);
            worst_ratio = worst_ratio.max(ratio);
            chunk_failures += usize::from(r.chunk_excess > 0);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    out.report(
        1,
        "oracle equivalence",
        mismatches == 0 && invariant_errors == 0 && secs < ORACLE_SECONDS,
        format!(
            "{} workloads x {OPS} ops in both modes, {mismatches} mismatches, {invariant_errors} invariant errors, {secs:.1}s (limit {ORACLE_SECONDS}s)",
            2 * WORKLOADS
        ),
    );
    out.report(
        2,
        "interval count bound",
        violations == 0,
        format!("{queries} queries checked, {violations} gaps over 4*max(log2|gap|,1)"),
    );

    // 3
    let keys: Vec<i64> = (0..19).map(|i| (i * 7) % 19).collect();
    let p = preview_split(&keys, 6, SplitMode::ExactMedian, 0).expect("rank in range");
    let left: Vec<usize> = p.left.iter().map(Vec::len).collect();
    let right: Vec<usize> = p.right.iter().map(Vec::len).collect();
    out.report(
        3,
        "split geometry",
        left == [3, 2, 1] && right == [3, 3, 7],
        format!("19 elements at inner rank 6 -> {left:?} | {right:?}, expected [3, 2, 1] | [3, 3, 7]"),
    );

    // 4
    let n = 1usize << 20;
    let r = scenario("uniform", &format!("n={n},q=0"), 1, false);
    let mean = r.insert_mean();
    out.report(
        4,
        "pre-query insertion",
        mean <= 3.0 && r.comparisons() <= 3 * n as u64,
        format!("n=2^20: {} comparisons, {mean:.3} per insert (limit 3)", r.comparisons()),
    );

    // 5
    let mut pts = Vec::new();
    for e in [12, 14, 16, 18, 20] {
        let n = 1usize << e;
        let r = scenario("pq", &format!("n={n},ops={n}"), 2, false);
        pts.push((n, (n as f64).log2().log2(), r.post_query_insert_mean()));
    }
    let a = pts.iter().map(|p| p.1 * p.2).sum::<f64>() / pts.iter().map(|p| p.1 * p.1).sum::<f64>();
    let worst = pts.iter().map(|p| ((p.2 - a * p.1) / (a * p.1)).abs()).fold(0.0, f64::max);
    let last = pts.last().expect("grid").2;
    out.report(
        5,
        "priority-queue insertion scaling",
        worst < PQ_RESIDUAL && last <= PQ_MEAN_AT_2_20,
        format!(
            "means {:?}, fit a={a:.3} on log2log2n, worst residual {:.1}% (limit {:.0}%), mean at 2^20 {last:.2} (limit {PQ_MEAN_AT_2_20})",
            pts.iter().map(|p| (p.2 * 100.0).round() / 100.0).collect::<Vec<_>>(),
            worst * 100.0,
            PQ_RESIDUAL * 100.0
        ),
    );

    // 6, and the scaling half of 7
    let mut few = Vec::new();
    for q in [16usize, 256, 4096] {
        let r = scenario("uniform", &format!("n={n},q={q}"), 3, false);
        let t = &r.trees[0];
        few.push((q, r.comparisons(), uniform_bound(n, q), t.bound.b, t.stats.n));
    }
    let c = few[1].1 as f64 / few[1].2;
    let spread: Vec<f64> = few.iter().map(|f| f.1 as f64 / (c * f.2)).collect();
    out.report(
        6,
        "few-queries scaling",
        spread.iter().all(|s| (s - 1.0).abs() <= FEW_QUERIES_BAND),
        format!(
            "c={c:.3} fitted at q=2^8; measured/(c*bound) at q=2^4,2^8,2^12: {:?} (band +-{:.0}%)",
            spread.iter().map(|s| (s * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
            FEW_QUERIES_BAND * 100.0
        ),
    );
    for f in &few {
        let (lower_ok, ratio) = sandwich(f.1, f.3, f.4);
        lower_failures += usize::from(!lower_ok);
        worst_ratio = worst_ratio.max(ratio);
    }
    out.report(
        7,
        "B sandwich",
        lower_failures == 0 && worst_ratio <= UPPER_CONSTANT,
        format!(
            "{lower_failures} runs below B-4n; c'={worst_ratio:.2} = max measured/(B + n log2log2n) (limit {UPPER_CONSTANT})"
        ),
    );

    // 8: oracle workloads above plus the scenario runs.
    let mut scenario_chunk_failures = 0;
    for (name, params) in [
        ("uniform", "n=20000,q=500"),
        ("clustered", "n=20000,q=512,k=16"),
        ("pq", "n=5000,ops=20000"),
        ("depq", "n=5000,ops=20000"),
        ("multiselect", "n=20000,ranks=100:5000:9000:15000"),
        ("splitrank", "n=20000,splits=30"),
        ("incsort", "n=20000,q=2000"),
    ] {
        let r = scenario(name, params, 4, false);
        for t in &r.trees {
            let s = &t.stats;
            scenario_chunk_failures += usize::from(s.chunks_created > 6 * s.queries + s.base_chunks);
        }
    }
    out.report(
        8,
        "chunk budget",
        chunk_failures + scenario_chunk_failures == 0,
        format!(
            "{} oracle workloads and 7 scenarios, {} trees over 6q + construction chunks",
            2 * WORKLOADS,
            chunk_failures + scenario_chunk_failures
        ),
    );

    // 9
    let (n9, q9) = (1_000_000usize, 10_000usize);
    let script = Scenario::Incsort { n: n9, q: q9 }.generate(5);
    let mut expect = match &script.ops[0].1 {
        lst_cli::Op::Construct(k) => k.clone(),
        _ => unreachable!("incsort starts with construct"),
    };
    expect.sort_unstable();
    expect.truncate(q9);
    let r = run(
        &script,
        RunOptions {
            seed: 5,
            record_answers: true,
            ..RunOptions::default()
        },
    )
    .expect("incsort runs");
    let got: Vec<i64> = r
        .answers
        .iter()
        .filter_map(|a| match a {
            Outcome::Element(k) => *k,
            Outcome::Rank(_) => None,
        })
        .collect();
    let c9 = r.comparisons() as f64 / (n9 as f64 + q9 as f64 * (n9 as f64).log2());
    out.report(
        9,
        "incremental sort",
        got == expect && c9 <= INCSORT_CONSTANT,
        format!(
            "n=10^6, q=10^4: smallest keys in order: {}, c''={c9:.2} (limit {INCSORT_CONSTANT})",
            got == expect
        ),
    );

    // 10: outer segment sizes over seeds, all keys equal.
    let (len, rank, seeds) = (16usize, 10usize, 1000u64);
    let keys = vec![42i64; len];
    let mut left_hist = vec![0u32; rank];
    let mut right_hist = vec![0u32; len - rank];
    for seed in 0..seeds {
        let p = preview_split(&keys, rank, SplitMode::RandomizedPivot, seed).expect("rank in range");
        left_hist[p.left[0].len() - 1] += 1;
        right_hist[p.right.last().expect("right part").len() - 1] += 1;
    }
    let chi2 = |h: &[u32]| {
        let e = seeds as f64 / h.len() as f64;
        let stat: f64 = h.iter().map(|&o| (o as f64 - e).powi(2) / e).sum();
        let crit = ChiSquared::new((h.len() - 1) as f64).expect("dof").inverse_cdf(1.0 - CHI2_ALPHA);
        (stat, crit)
    };
    let (sl, cl) = chi2(&left_hist);
    let (sr, cr) = chi2(&right_hist);
    out.report(
        10,
        "tie-splitting distribution",
        sl < cl && sr < cr,
        format!("{seeds} seeds, {len} equal keys at rank {rank}: chi2 left {sl:.2} < {cl:.2}, right {sr:.2} < {cr:.2} (alpha {CHI2_ALPHA})"),
    );

    println!("{} of {} criteria passed", out.lines.len() - out.failed, out.lines.len());
    if out.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
