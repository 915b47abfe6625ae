//! Likelihood arithmetic for the blockwise mixture.
//!
//! Everything accumulates in log space. Blocks without observations (a group
//! with no items, or a period past a subject's last visit) contribute exactly
//! zero.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::math::log_sum_exp;
use crate::params::{LatentState, ProfileTables};
use crate::structure::{BlockStructure, PeriodMap};

/// Largest `K^(G R)` the enumeration oracle will attempt.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

/// Reusable evaluator of the per-subject likelihood given `pi_i`.
///
/// Caches `ln lambda` and the period map so that evaluating many subjects
/// against one parameter draw stays cheap.
pub struct BlockLikelihood<'a> {
    dataset: &'a Dataset,
    groups: &'a [usize],
    n_groups: usize,
    n_periods: usize,
    n_subpops: usize,
    periods: PeriodMap,
    lambda: &'a ProfileTables,
    log_lambda: Vec<f64>,
}

impl<'a> BlockLikelihood<'a> {
    pub fn new(dataset: &'a Dataset, blocks: &'a BlockStructure, lambda: &'a ProfileTables) -> Self {
        BlockLikelihood {
            dataset,
            groups: &blocks.groups,
            n_groups: blocks.n_groups,
            n_periods: blocks.n_periods,
            n_subpops: blocks.n_subpops,
            periods: blocks.period_map(),
            lambda,
            log_lambda: lambda.log_values(),
        }
    }

    /// `ln prod_{g,r} sum_k pi_k prod_{(j,t) in block} lambda[j, y, k]` for subject `i`.
    pub fn subject(&self, i: usize, pi: &[f64]) -> f64 {
        let k_n = self.lambda.n_profiles();
        let n_blocks = self.n_groups * self.n_periods;
        let mut acc = vec![0.0; n_blocks * k_n];
        let mut seen = vec![false; n_blocks];
        let c = self.dataset.subpop[i];
        for t in 0..self.dataset.visits[i] {
            let row = self.dataset.visit_row(i, t);
            for (j, &y) in row.iter().enumerate() {
                let g = self.groups[j];
                let r = self.periods.slot(g * self.n_subpops + c)[t] as usize;
                let b = g * self.n_periods + r;
                seen[b] = true;
                let base = self.lambda.index(j, y as usize, 0);
                let logs = &self.log_lambda[base..base + k_n];
                for (a, l) in acc[b * k_n..(b + 1) * k_n].iter_mut().zip(logs) {
                    *a += l;
                }
            }
        }
        let log_pi: Vec<f64> = pi.iter().map(|p| p.ln()).collect();
        let mut total = 0.0;
        let mut terms = vec![0.0; k_n];
        for b in (0..n_blocks).filter(|&b| seen[b]) {
            for k in 0..k_n {
                terms[k] = log_pi[k] + acc[b * k_n + k];
            }
            total += log_sum_exp(&terms);
        }
        total
    }
}

/// Log-likelihood of subject `i` given its membership scores, with the
/// blockwise memberships summed out.
pub fn cond_loglik_given_pi(
    dataset: &Dataset,
    blocks: &BlockStructure,
    lambda: &ProfileTables,
    pi: &[f64],
    i: usize,
) -> f64 {
    BlockLikelihood::new(dataset, blocks, lambda).subject(i, pi)
}

/// Enumeration oracle for [`cond_loglik_given_pi`]: sums over every joint
/// assignment of the `G R` memberships without exchanging sum and product.
pub fn brute_force_loglik(
    dataset: &Dataset,
    blocks: &BlockStructure,
    lambda: &ProfileTables,
    pi: &[f64],
    i: usize,
) -> Result<f64> {
    let k_n = lambda.n_profiles();
    let n_blocks = blocks.n_groups * blocks.n_periods;
    let size = (k_n as u128).checked_pow(n_blocks as u32).unwrap_or(u128::MAX);
    if size > BRUTE_FORCE_LIMIT {
        return Err(Error::GuardExceeded {
            size,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let c = dataset.subpop[i];
    let mut cells = Vec::new();
    for t in 0..dataset.visits[i] {
        for j in 0..dataset.p() {
            let g = blocks.groups[j];
            let r = blocks.period_of(g, c, t);
            let y = dataset.response(i, j, t).expect("within visits");
            cells.push((j, y, g * blocks.n_periods + r));
        }
    }

    let mut assignment = vec![0usize; n_blocks];
    let mut terms = Vec::with_capacity(size as usize);
    loop {
        let mut log_joint: f64 = assignment.iter().map(|&k| pi[k].ln()).sum();
        for &(j, y, b) in &cells {
            log_joint += lambda.get(j, y, assignment[b]).ln();
        }
        terms.push(log_joint);

        let mut pos = 0;
        while pos < n_blocks {
            assignment[pos] += 1;
            if assignment[pos] < k_n {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
        if pos == n_blocks {
            break;
        }
    }
    Ok(log_sum_exp(&terms))
}

/// Joint log-likelihood of all responses given the blockwise memberships.
pub fn complete_data_loglik(
    dataset: &Dataset,
    blocks: &BlockStructure,
    lambda: &ProfileTables,
    state: &LatentState,
) -> f64 {
    let log_lambda = lambda.log_values();
    let periods = blocks.period_map();
    let mut total = 0.0;
    for i in 0..dataset.n() {
        let c = dataset.subpop[i];
        let z = state.z_subject(i);
        for t in 0..dataset.visits[i] {
            for (j, &y) in dataset.visit_row(i, t).iter().enumerate() {
                let g = blocks.groups[j];
                let r = periods.slot(g * blocks.n_subpops + c)[t] as usize;
                let k = z[g * blocks.n_periods + r];
                total += log_lambda[lambda.index(j, y as usize, k)];
            }
        }
    }
    total
}
