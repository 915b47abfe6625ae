//! Agreement between estimates and a known truth.

use crate::error::{Error, Result};
use crate::math::permutations;
use crate::params::ProfileTables;

/// Adjusted Rand index of two labelings of the same elements.
///
/// When both partitions are trivial (all one cluster or all singletons) the
/// index is undefined; it is reported as 1 for identical partitions and 0
/// otherwise.
pub fn ari(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let la = a.iter().max().map_or(0, |m| m + 1);
    let lb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![0u64; la * lb];
    let mut ra = vec![0u64; la];
    let mut rb = vec![0u64; lb];
    for (&x, &y) in a.iter().zip(b) {
        table[x * lb + y] += 1;
        ra[x] += 1;
        rb[y] += 1;
    }
    let pairs = |n: u64| (n * n.saturating_sub(1) / 2) as f64;
    let index: f64 = table.iter().map(|&n| pairs(n)).sum();
    let sa: f64 = ra.iter().map(|&n| pairs(n)).sum();
    let sb: f64 = rb.iter().map(|&n| pairs(n)).sum();
    let total = pairs(a.len() as u64);
    let expected = if total > 0.0 { sa * sb / total } else { 0.0 };
    let max = 0.5 * (sa + sb);
    let denom = max - expected;
    if denom == 0.0 {
        return Ok(if same_partition(a, b) { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / denom)
}

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    let mut forward = std::collections::HashMap::new();
    let mut backward = std::collections::HashMap::new();
    a.iter()
        .zip(b)
        .all(|(&x, &y)| *forward.entry(x).or_insert(y) == y && *backward.entry(y).or_insert(x) == x)
}

/// Aligned recovery error of the response tables and concentrations.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedRmse {
    pub lambda: f64,
    pub alpha: f64,
    /// Estimate profile `perm[k]` is matched to true profile `k`.
    pub perm: Vec<usize>,
}

/// Root mean squared entrywise error of the response tables under the best
/// profile matching; the same matching is applied to `alpha`.
pub fn aligned_rmse(
    est_lambda: &ProfileTables,
    est_alpha: &[f64],
    true_lambda: &ProfileTables,
    true_alpha: &[f64],
) -> Result<AlignedRmse> {
    let k_n = true_lambda.n_profiles();
    if est_lambda.n_profiles() != k_n {
        return Err(Error::dims("estimated profiles", k_n, est_lambda.n_profiles()));
    }
    if est_lambda.categories() != true_lambda.categories() {
        return Err(Error::dims(
            "estimated table rows",
            true_lambda.as_slice().len(),
            est_lambda.as_slice().len(),
        ));
    }
    if est_alpha.len() != k_n || true_alpha.len() != k_n {
        return Err(Error::dims("alpha", k_n, est_alpha.len().min(true_alpha.len())));
    }
    if k_n > 8 {
        return Err(Error::GuardExceeded {
            size: (1..=k_n as u128).product(),
            limit: 40_320,
        });
    }
    let (est, truth) = (est_lambda.as_slice(), true_lambda.as_slice());
    // cost[k * K + k2]: squared error of matching true profile k with estimate k2
    let mut cost = vec![0.0; k_n * k_n];
    for (er, tr) in est.chunks_exact(k_n).zip(truth.chunks_exact(k_n)) {
        for k in 0..k_n {
            for k2 in 0..k_n {
                cost[k * k_n + k2] += (er[k2] - tr[k]).powi(2);
            }
        }
    }
    let mut best = (f64::INFINITY, Vec::new());
    for perm in permutations(k_n) {
        let c: f64 = (0..k_n).map(|k| cost[k * k_n + perm[k]]).sum();
        if c < best.0 {
            best = (c, perm);
        }
    }
    let (sse, perm) = best;
    let alpha_sse: f64 = (0..k_n).map(|k| (est_alpha[perm[k]] - true_alpha[k]).powi(2)).sum();
    Ok(AlignedRmse {
        lambda: (sse / truth.len() as f64).sqrt(),
        alpha: (alpha_sse / k_n as f64).sqrt(),
        perm,
    })
}
