//! Comparison lower bounds for a gap partition.

use crate::error::{Error, Result};

/// B = Σ |Δᵢ| log₂(n / |Δᵢ|): comparisons any algorithm needs, up to O(n),
/// to arrange `n` elements into gaps of the given sizes.
pub fn compute_b(gap_sizes: &[usize], n: usize) -> Result<f64> {
    let sum: usize = gap_sizes.iter().sum();
    if sum != n {
        return Err(Error::InvalidPartition(format!("sizes sum to {sum}, expected {n}")));
    }
    if gap_sizes.contains(&0) {
        return Err(Error::InvalidPartition("empty gap".into()));
    }
    let nf = n as f64;
    Ok(gap_sizes.iter().map(|&s| s as f64 * (nf / s as f64).log2()).sum())
}

/// B for selecting the given ranks (strictly increasing, within 1..n) out of
/// `n` elements: gaps are the differences between consecutive ranks, with
/// 0 and `n` added at the ends.
pub fn multiselect_bound(n: usize, ranks: &[usize]) -> Result<f64> {
    let mut sizes = Vec::with_capacity(ranks.len() + 1);
    let mut prev = 0;
    for &r in ranks {
        if r <= prev || r >= n {
            return Err(Error::InvalidPartition(format!("rank {r} out of order or outside 1..{n}")));
        }
        sizes.push(r - prev);
        prev = r;
    }
    if n > 0 {
        sizes.push(n - prev);
    }
    compute_b(&sizes, n)
}

/// n·log₂q + q·log₂n, the cost of `q` uniformly spread queries over `n`
/// elements. Zero when there are no queries.
pub fn uniform_bound(n: usize, q: usize) -> f64 {
    if q == 0 || n == 0 {
        return 0.0;
    }
    n as f64 * (q as f64).log2() + q as f64 * (n as f64).log2()
}

/// n·log₂log₂n, clamped at zero for tiny n.
pub fn n_loglog(n: usize) -> f64 {
    if n < 4 {
        return 0.0;
    }
    n as f64 * (n as f64).log2().log2()
}

/// Measured comparisons set against the bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    pub queries: usize,
    pub b: f64,
    pub uniform_bound: f64,
    pub measured: u64,
    /// measured / (B + n·log₂log₂n)
    pub upper_ratio: f64,
    /// measured − (B − 4n); non-negative when the lower-bound check holds.
    pub lower_slack: f64,
}

impl BoundReport {
    pub fn new(gap_sizes: &[usize], n: usize, queries: usize, measured: u64) -> Result<Self> {
        let b = compute_b(gap_sizes, n)?;
        let denom = b + n_loglog(n);
        Ok(BoundReport {
            n,
            queries,
            b,
            uniform_bound: uniform_bound(n, queries),
            measured,
            upper_ratio: if denom > 0.0 { measured as f64 / denom } else { 0.0 },
            lower_slack: measured as f64 - (b - 4.0 * n as f64),
        })
    }
}
