//! Workload scripts: one operation per line, `#` starts a comment.
//!
//! Elements are referenced by insertion index (`@i`), counting every
//! `insert` and every key of a `construct` line from 0. Optional header lines
//! `mode exact|random` and `seed N` may precede the first operation.

use std::fmt;

use lazy_search_tree::SplitMode;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Op {
    Insert(i64),
    /// Bulk build of the current (empty) tree from the given keys.
    Construct(Vec<i64>),
    Select(usize),
    Rank(i64),
    Contains(i64),
    Succ(i64),
    Pred(i64),
    Min,
    Max,
    PopMin,
    PopMax,
    Delete(usize),
    ChangeKey(usize, i64),
    Split(usize),
    Merge(usize, usize),
    Use(usize),
}

impl Op {
    pub fn is_query(&self) -> bool {
        matches!(
            self,
            Op::Select(_) | Op::Rank(_) | Op::Contains(_) | Op::Succ(_) | Op::Pred(_) | Op::Min | Op::Max | Op::PopMin | Op::PopMax
        )
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Insert(k) => write!(f, "insert {k}"),
            Op::Construct(keys) => {
                f.write_str("construct")?;
                for k in keys {
                    write!(f, " {k}")?;
                }
                Ok(())
            }
            Op::Select(r) => write!(f, "select {r}"),
            Op::Rank(k) => write!(f, "rank {k}"),
            Op::Contains(k) => write!(f, "contains {k}"),
            Op::Succ(k) => write!(f, "succ {k}"),
            Op::Pred(k) => write!(f, "pred {k}"),
            Op::Min => f.write_str("min"),
            Op::Max => f.write_str("max"),
            Op::PopMin => f.write_str("pop_min"),
            Op::PopMax => f.write_str("pop_max"),
            Op::Delete(i) => write!(f, "delete @{i}"),
            Op::ChangeKey(i, k) => write!(f, "change_key @{i} {k}"),
            Op::Split(r) => write!(f, "split {r}"),
            Op::Merge(a, b) => write!(f, "merge {a} {b}"),
            Op::Use(t) => write!(f, "use {t}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Script {
    pub mode: Option<SplitMode>,
    pub seed: Option<u64>,
    /// Operations with their 1-based source line.
    pub ops: Vec<(usize, Op)>,
}

impl Script {
    pub fn from_ops(ops: impl IntoIterator<Item = Op>) -> Self {
        Script {
            mode: None,
            seed: None,
            ops: ops.into_iter().enumerate().map(|(i, op)| (i + 1, op)).collect(),
        }
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            Some(SplitMode::ExactMedian) => writeln!(f, "mode exact")?,
            Some(SplitMode::RandomizedPivot) => writeln!(f, "mode random")?,
            None => {}
        }
        if let Some(s) = self.seed {
            writeln!(f, "seed {s}")?;
        }
        for (_, op) in &self.ops {
            writeln!(f, "{op}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: unknown operation `{op}`")]
    UnknownOp { line: usize, column: usize, op: String },
    #[error("line {line}: `{op}` takes {expected} argument(s), got {got}")]
    BadArity { line: usize, op: String, expected: &'static str, got: usize },
    #[error("line {line}, column {column}: cannot parse `{token}`: {reason}")]
    BadToken { line: usize, column: usize, token: String, reason: &'static str },
    #[error("line {line}: header `{what}` after the first operation")]
    LateHeader { line: usize, what: String },
}

pub fn parse_mode(s: &str) -> Option<SplitMode> {
    match s {
        "exact" => Some(SplitMode::ExactMedian),
        "random" => Some(SplitMode::RandomizedPivot),
        _ => None,
    }
}

struct Line<'a> {
    no: usize,
    text: &'a str,
    words: Vec<&'a str>,
}

impl Line<'_> {
    fn column(&self, word: usize) -> usize {
        let w = self.words[word];
        w.as_ptr() as usize - self.text.as_ptr() as usize + 1
    }

    fn arity(&self, expected: usize) -> Result<(), ParseError> {
        let got = self.words.len() - 1;
        if got == expected {
            return Ok(());
        }
        Err(ParseError::BadArity {
            line: self.no,
            op: self.words[0].to_string(),
            expected: ["0", "1", "2"][expected],
            got,
        })
    }

    fn bad(&self, word: usize, reason: &'static str) -> ParseError {
        ParseError::BadToken {
            line: self.no,
            column: self.column(word),
            token: self.words[word].to_string(),
            reason,
        }
    }

    fn key(&self, word: usize) -> Result<i64, ParseError> {
        self.words[word].parse().map_err(|_| self.bad(word, "expected a 64-bit integer key"))
    }

    fn count(&self, word: usize) -> Result<usize, ParseError> {
        self.words[word].parse().map_err(|_| self.bad(word, "expected a non-negative integer"))
    }

    fn index(&self, word: usize) -> Result<usize, ParseError> {
        let w = self.words[word];
        w.strip_prefix('@')
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.bad(word, "expected an insertion index like @3"))
    }
}

pub fn parse(text: &str) -> Result<Script, ParseError> {
    let mut script = Script::default();
    for (i, raw) in text.lines().enumerate() {
        let text = raw.split('#').next().unwrap_or("");
        let words: Vec<&str> = text.split_whitespace().collect();
        if words.is_empty() {
            continue;
        }
        let l = Line { no: i + 1, text, words };
        let op = match l.words[0] {
            "mode" | "seed" => {
                if !script.ops.is_empty() {
                    return Err(ParseError::LateHeader {
                        line: l.no,
                        what: l.words[0].to_string(),
                    });
                }
                l.arity(1)?;
                if l.words[0] == "mode" {
                    script.mode = Some(parse_mode(l.words[1]).ok_or_else(|| l.bad(1, "expected exact or random"))?);
                } else {
                    script.seed = Some(l.words[1].parse().map_err(|_| l.bad(1, "expected an unsigned seed"))?);
                }
                continue;
            }
            "insert" => {
                l.arity(1)?;
                Op::Insert(l.key(1)?)
            }
            "construct" => Op::Construct((1..l.words.len()).map(|w| l.key(w)).collect::<Result<_, _>>()?),
            "select" => {
                l.arity(1)?;
                Op::Select(l.count(1)?)
            }
            "rank" | "contains" | "succ" | "pred" => {
                l.arity(1)?;
                let k = l.key(1)?;
                match l.words[0] {
                    "rank" => Op::Rank(k),
                    "contains" => Op::Contains(k),
                    "succ" => Op::Succ(k),
                    _ => Op::Pred(k),
                }
            }
            "min" | "max" | "pop_min" | "pop_max" => {
                l.arity(0)?;
                match l.words[0] {
                    "min" => Op::Min,
                    "max" => Op::Max,
                    "pop_min" => Op::PopMin,
                    _ => Op::PopMax,
                }
            }
            "delete" => {
                l.arity(1)?;
                Op::Delete(l.index(1)?)
            }
            "change_key" => {
                l.arity(2)?;
                Op::ChangeKey(l.index(1)?, l.key(2)?)
            }
            "split" => {
                l.arity(1)?;
                Op::Split(l.count(1)?)
            }
            "merge" => {
                l.arity(2)?;
                Op::Merge(l.count(1)?, l.count(2)?)
            }
            "use" => {
                l.arity(1)?;
                Op::Use(l.count(1)?)
            }
            other => {
                return Err(ParseError::UnknownOp {
                    line: l.no,
                    column: l.column(0),
                    op: other.to_string(),
                })
            }
        };
        script.ops.push((l.no, op));
    }
    Ok(script)
}
