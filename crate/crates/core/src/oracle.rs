//! Brute-force references. Nothing here touches the tile engine, the
//! distance kernels or the grid index.

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Largest dataset the quadratic oracle accepts without `force`.
pub const ORACLE_GUARD: usize = 50_000;

/// Canonically sorted `(i, j)` pairs with `sq_dist <= epsilon^2`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OraclePairSet {
    pub pairs: Vec<(u32, u32)>,
}

impl OraclePairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Squared Euclidean distance summed in ascending dimension order.
pub fn direct_sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        let diff = x - y;
        sum += diff * diff;
    }
    sum
}

/// Evaluates every ordered pair directly.
pub fn brute_force_join(dataset: &Dataset, epsilon: f64, force: bool) -> Result<OraclePairSet> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::validation(format!("invalid epsilon {epsilon}")));
    }
    let n = dataset.len();
    if n > ORACLE_GUARD && !force {
        return Err(Error::Resource(format!(
            "brute-force join over {n} points exceeds the guard of {ORACLE_GUARD}; force to override"
        )));
    }
    let eps_sq = epsilon * epsilon;
    let rows: Vec<Vec<(u32, u32)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = dataset.point(i);
            (0..n)
                .filter(|&j| direct_sq_dist(a, dataset.point(j)) <= eps_sq)
                .map(|j| (i as u32, j as u32))
                .collect()
        })
        .collect();
    Ok(OraclePairSet {
        pairs: rows.into_iter().flatten().collect(),
    })
}

/// Squared distances of all unordered pairs `i < j`, sorted ascending.
pub fn sorted_pair_sq_dists(dataset: &Dataset) -> Vec<f64> {
    let n = dataset.len();
    let mut out: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let a = dataset.point(i);
            (i + 1..n).map(move |j| direct_sq_dist(a, dataset.point(j)))
        })
        .collect();
    out.par_sort_unstable_by(f64::total_cmp);
    out
}

/// Selectivity produced by `epsilon` given [`sorted_pair_sq_dists`].
pub fn selectivity_at(sorted_sq: &[f64], n: usize, epsilon: f64) -> f64 {
    let eps_sq = epsilon * epsilon;
    let within = sorted_sq.partition_point(|&v| v <= eps_sq);
    2.0 * within as f64 / n as f64
}

/// Bisects for an epsilon reaching `target` selectivity, then moves it to
/// the middle of the surrounding gap between consecutive pair distances.
/// Gaps narrower than `2 * guard_rel * epsilon` are rejected in favour of
/// the next wider one, so no pair lies within `guard_rel * epsilon` of the
/// shell. Returns `None` if no gap qualifies.
pub fn epsilon_for_selectivity(
    sorted_sq: &[f64],
    n: usize,
    target: f64,
    guard_rel: f64,
) -> Option<f64> {
    let max = sorted_sq.last()?.sqrt();
    let (mut lo, mut hi) = (0.0f64, max.max(f64::MIN_POSITIVE) * 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if selectivity_at(sorted_sq, n, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut k = sorted_sq.partition_point(|&v| v <= hi * hi);
    while k < sorted_sq.len() {
        let below = if k == 0 { 0.0 } else { sorted_sq[k - 1].sqrt() };
        let above = sorted_sq[k].sqrt();
        let eps = 0.5 * (below + above);
        if eps > 0.0 && above - eps >= guard_rel * eps && eps - below >= guard_rel * eps {
            return Some(eps);
        }
        k += 1;
    }
    None
}

/// True when no pair distance lies within `guard_rel * epsilon` of epsilon.
pub fn boundary_guard_holds(sorted_sq: &[f64], epsilon: f64, guard_rel: f64) -> bool {
    let lo = (epsilon * (1.0 - guard_rel)).powi(2);
    let hi = (epsilon * (1.0 + guard_rel)).powi(2);
    let start = sorted_sq.partition_point(|&v| v < lo);
    sorted_sq.get(start).is_none_or(|&v| v > hi)
}

/// Textbook `A x B + C` on plain arrays: ascending `k`, `C` added last.
pub fn naive_mma(a: &[[f64; 4]; 8], b: &[[f64; 8]; 4], c: &[[f64; 8]; 8]) -> [[f64; 8]; 8] {
    let mut d = [[0.0; 8]; 8];
    for i in 0..8 {
        for j in 0..8 {
            let mut s = a[i][0] * b[0][j];
            for k in 1..4 {
                s += a[i][k] * b[k][j];
            }
            d[i][j] = s + c[i][j];
        }
    }
    d
}
