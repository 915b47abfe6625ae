use rayon::prelude::*;
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::likelihood::BlockLikelihood;
use crate::math::{log_sum_exp, sample_variance};
use crate::sampler::DrawStore;

/// WAIC and its two components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Waic {
    pub waic: f64,
    /// Log pointwise predictive density.
    pub lppd: f64,
    /// Sum of per-subject posterior variances of the log-likelihood.
    pub penalty: f64,
}

/// Per-draw, per-subject log-likelihoods `ll[l][i]`, each draw using its own
/// membership scores, groups, cut-points and response tables.
pub fn pointwise_loglik(store: &DrawStore, dataset: &Dataset) -> Vec<Vec<f64>> {
    store
        .draws
        .par_iter()
        .map(|draw| {
            let lik = BlockLikelihood::new(dataset, &draw.blocks, &draw.params.lambda);
            (0..dataset.n()).map(|i| lik.subject(i, draw.state.pi_of(i))).collect()
        })
        .collect()
}

/// `-2 (lppd - penalty)` from a draws-by-subjects log-likelihood matrix.
pub fn waic_from_loglik(ll: &[Vec<f64>]) -> Result<Waic> {
    if ll.len() < 2 {
        return Err(Error::InsufficientDraws {
            required: 2,
            found: ll.len(),
        });
    }
    let n = ll[0].len();
    let draws = ll.len() as f64;
    let mut lppd = 0.0;
    let mut penalty = 0.0;
    let mut column = vec![0.0; ll.len()];
    for i in 0..n {
        for (c, row) in column.iter_mut().zip(ll) {
            *c = row[i];
        }
        lppd += log_sum_exp(&column) - draws.ln();
        penalty += sample_variance(&column);
    }
    Ok(Waic {
        waic: -2.0 * (lppd - penalty),
        lppd,
        penalty,
    })
}

pub fn waic(store: &DrawStore, dataset: &Dataset) -> Result<Waic> {
    if store.len() < 2 {
        return Err(Error::InsufficientDraws {
            required: 2,
            found: store.len(),
        });
    }
    waic_from_loglik(&pointwise_loglik(store, dataset))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_draws_have_no_penalty() {
        let ll = vec![vec![-3.0, -4.5, -1.0]; 2];
        let w = waic_from_loglik(&ll).unwrap();
        assert_eq!(w.penalty, 0.0);
        assert!((w.waic - 2.0 * 8.5).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_two_draws() {
        // subject 1: ln((e^-1 + e^-3)/2), var = 2; subject 2: -2, var 0
        let ll = vec![vec![-1.0, -2.0], vec![-3.0, -2.0]];
        let w = waic_from_loglik(&ll).unwrap();
        let lppd = ((-1.0f64).exp() + (-3.0f64).exp()).ln() - 2f64.ln() - 2.0;
        assert!((w.lppd - lppd).abs() < 1e-12);
        assert!((w.penalty - 2.0).abs() < 1e-12);
        assert!((w.waic - (-2.0 * (lppd - 2.0))).abs() < 1e-12);
    }

    #[test]
    fn subject_order_is_irrelevant() {
        let ll = vec![vec![-1.0, -2.0, -7.0], vec![-3.0, -2.5, -6.0], vec![-1.5, -2.2, -6.6]];
        let rev: Vec<Vec<f64>> = ll.iter().map(|r| r.iter().rev().copied().collect()).collect();
        let a = waic_from_loglik(&ll).unwrap().waic;
        let b = waic_from_loglik(&rev).unwrap().waic;
        assert!((a - b).abs() < 1e-12 * a.abs());
    }

    #[test]
    fn single_draw_is_rejected() {
        assert!(matches!(
            waic_from_loglik(&[vec![-1.0]]),
            Err(Error::InsufficientDraws { .. })
        ));
    }
}
