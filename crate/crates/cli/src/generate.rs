//! Deterministic workload generators.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::script::{Op, Script};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Scenario {
    /// `n` inserts interleaved with `q` selects at uniform ranks.
    Uniform { n: usize, q: usize },
    /// `n` inserts, then `q / k` batches of `k` selects at consecutive ranks.
    Clustered { n: usize, q: usize, k: usize },
    /// `n` inserts, then `ops` rounds of pop_min + insert, with an
    /// occasional decrease-key.
    Pq { n: usize, ops: usize },
    /// Like `Pq` but popping from either end.
    Depq { n: usize, ops: usize },
    /// Construct, then select the given ranks in random order.
    Multiselect { n: usize, ranks: Vec<usize> },
    /// Construct, then split the current tree at random ranks.
    Splitrank { n: usize, splits: usize },
    /// Construct, then pop the `q` smallest.
    Incsort { n: usize, q: usize },
}

pub const SCENARIOS: &[&str] = &["uniform", "clustered", "pq", "depq", "multiselect", "splitrank", "incsort"];

fn parse_params(params: &str) -> Result<BTreeMap<String, String>, GenError> {
    params
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| GenError::BadParams(format!("`{p}` is not KEY=VALUE")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn get(map: &BTreeMap<String, String>, key: &str, default: Option<usize>) -> Result<usize, GenError> {
    match map.get(key) {
        Some(v) => v
            .parse()
            .map_err(|_| GenError::BadParams(format!("{key}={v} is not a count"))),
        None => default.ok_or_else(|| GenError::BadParams(format!("missing {key}"))),
    }
}

impl Scenario {
    /// Build from a name and a `K=V,...` parameter list. Ranks are given
    /// colon-separated, e.g. `ranks=4:8:12`.
    pub fn parse(name: &str, params: &str) -> Result<Self, GenError> {
        let p = parse_params(params)?;
        let known: &[&str] = match name {
            "uniform" | "incsort" => &["n", "q"],
            "clustered" => &["n", "q", "k"],
            "pq" | "depq" => &["n", "ops"],
            "multiselect" => &["n", "ranks"],
            "splitrank" => &["n", "splits"],
            _ => return Err(GenError::UnknownScenario(name.to_string())),
        };
        if let Some(k) = p.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(GenError::BadParams(format!("{name} takes no parameter `{k}`")));
        }
        let n = get(&p, "n", None)?;
        let s = match name {
            "uniform" => Scenario::Uniform { n, q: get(&p, "q", Some(0))? },
            "incsort" => Scenario::Incsort { n, q: get(&p, "q", Some(n))? },
            "clustered" => Scenario::Clustered {
                n,
                q: get(&p, "q", None)?,
                k: get(&p, "k", Some(8))?,
            },
            "pq" => Scenario::Pq { n, ops: get(&p, "ops", Some(n))? },
            "depq" => Scenario::Depq { n, ops: get(&p, "ops", Some(n))? },
            "multiselect" => {
                let ranks = p
                    .get("ranks")
                    .ok_or_else(|| GenError::BadParams("missing ranks".into()))?
                    .split(':')
                    .map(|r| r.parse().map_err(|_| GenError::BadParams(format!("bad rank `{r}`"))))
                    .collect::<Result<Vec<usize>, _>>()?;
                Scenario::Multiselect { n, ranks }
            }
            _ => Scenario::Splitrank { n, splits: get(&p, "splits", Some(8))? },
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), GenError> {
        let bad = |m: String| Err(GenError::BadParams(m));
        match self {
            Scenario::Clustered { k: 0, .. } => bad("k must be positive".into()),
            Scenario::Clustered { n: 0, q, .. } | Scenario::Uniform { n: 0, q } if *q > 0 => {
                bad("queries need n > 0".into())
            }
            Scenario::Incsort { n, q } if q > n => bad(format!("q={q} exceeds n={n}")),
            Scenario::Pq { n: 0, ops } | Scenario::Depq { n: 0, ops } if *ops > 0 => bad("ops need n > 0".into()),
            Scenario::Multiselect { n, ranks } => match ranks.iter().find(|&&r| r == 0 || r > *n) {
                Some(r) => bad(format!("rank {r} outside 1..={n}")),
                None => Ok(()),
            },
            Scenario::Pq { n, ops } | Scenario::Depq { n, ops } if n + ops >= 1 << 24 => {
                bad("n + ops must stay below 2^24".into())
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Uniform { .. } => "uniform",
            Scenario::Clustered { .. } => "clustered",
            Scenario::Pq { .. } => "pq",
            Scenario::Depq { .. } => "depq",
            Scenario::Multiselect { .. } => "multiselect",
            Scenario::Splitrank { .. } => "splitrank",
            Scenario::Incsort { .. } => "incsort",
        }
    }

    pub fn generate(&self, seed: u64) -> Script {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ops = Vec::new();
        let key = |rng: &mut ChaCha8Rng| rng.gen_range(0..1i64 << 40);
        match *self {
            Scenario::Uniform { n, q } => {
                // Query i runs after at[i] inserts.
                let mut at: Vec<usize> = (0..q).map(|_| rng.gen_range(1..=n)).collect();
                at.sort_unstable();
                let mut next = at.into_iter().peekable();
                for i in 1..=n {
                    ops.push(Op::Insert(key(&mut rng)));
                    while next.next_if_eq(&i).is_some() {
                        ops.push(Op::Select(rng.gen_range(1..=i)));
                    }
                }
            }
            Scenario::Clustered { n, q, k } => {
                ops.extend((0..n).map(|_| Op::Insert(key(&mut rng))));
                for _ in 0..q / k {
                    let start = rng.gen_range(1..=n.saturating_sub(k - 1).max(1));
                    ops.extend((start..start + k).map(|r| Op::Select(r.min(n))));
                }
            }
            Scenario::Pq { n, ops: rounds } | Scenario::Depq { n, ops: rounds } => {
                let depq = matches!(self, Scenario::Depq { .. });
                gen_queue(&mut rng, n, rounds, depq, &mut ops);
            }
            Scenario::Multiselect { n, ref ranks } => {
                ops.push(Op::Construct((0..n).map(|_| key(&mut rng)).collect()));
                let mut ranks = ranks.clone();
                ranks.shuffle(&mut rng);
                ops.extend(ranks.into_iter().map(Op::Select));
            }
            Scenario::Splitrank { n, splits } => {
                ops.push(Op::Construct((0..n).map(|_| key(&mut rng)).collect()));
                // Tree sizes by id; the current tree is split and the larger
                // half becomes current.
                let mut sizes = vec![n];
                let mut cur = 0;
                for _ in 0..splits {
                    let size = sizes[cur];
                    if size < 2 {
                        break;
                    }
                    let r = rng.gen_range(1..size);
                    ops.push(Op::Split(r));
                    sizes.push(r);
                    sizes.push(size - r);
                    cur = if r >= size - r { sizes.len() - 2 } else { sizes.len() - 1 };
                    ops.push(Op::Use(cur));
                    ops.push(Op::Select(rng.gen_range(1..=sizes[cur])));
                }
            }
            Scenario::Incsort { n, q } => {
                ops.push(Op::Construct((0..n).map(|_| key(&mut rng)).collect()));
                ops.extend((0..q).map(|_| Op::PopMin));
            }
        }
        let mut s = Script::from_ops(ops);
        s.seed = Some(seed);
        s
    }
}

/// Priority-queue traffic with distinct keys, so the generator can track
/// which insertion index every pop removes. The low 24 bits of a key hold
/// its insertion index.
fn gen_queue(rng: &mut ChaCha8Rng, n: usize, rounds: usize, depq: bool, ops: &mut Vec<Op>) {
    let tag = |high: i64, idx: usize| (high << 24) | idx as i64;
    let mut live: BTreeSet<i64> = BTreeSet::new();
    // Current key per insertion index, None once popped.
    let mut keys: Vec<Option<i64>> = Vec::new();
    let insert = |rng: &mut ChaCha8Rng, live: &mut BTreeSet<i64>, keys: &mut Vec<Option<i64>>, ops: &mut Vec<Op>| {
        let k = tag(rng.gen_range(0..1i64 << 36), keys.len());
        keys.push(Some(k));
        live.insert(k);
        ops.push(Op::Insert(k));
    };
    for _ in 0..n {
        insert(rng, &mut live, &mut keys, ops);
    }
    let idx_of = |k: i64| (k & 0xff_ffff) as usize;
    for _ in 0..rounds {
        let popped = if depq && rng.gen_bool(0.5) {
            ops.push(Op::PopMax);
            live.pop_last()
        } else {
            ops.push(Op::PopMin);
            live.pop_first()
        };
        if let Some(k) = popped {
            keys[idx_of(k)] = None;
        }
        insert(rng, &mut live, &mut keys, ops);
        if rng.gen_bool(0.1) {
            let idx = rng.gen_range(0..keys.len());
            if let Some(k) = keys[idx] {
                let nk = tag((k >> 24) - rng.gen_range(1..1i64 << 20), idx);
                live.remove(&k);
                live.insert(nk);
                keys[idx] = Some(nk);
                ops.push(Op::ChangeKey(idx, nk));
            }
        }
    }
}
