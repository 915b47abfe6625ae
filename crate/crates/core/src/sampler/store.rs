use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::likelihood::complete_data_loglik;
use crate::params::{LatentState, ParamSet};
use crate::structure::BlockStructure;
use crate::validate::{validate, validate_state};

/// One retained posterior draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub params: ParamSet,
    pub blocks: BlockStructure,
    pub state: LatentState,
}

impl Draw {
    pub fn complete_loglik(&self, dataset: &Dataset) -> f64 {
        complete_data_loglik(dataset, &self.blocks, &self.params.lambda, &self.state)
    }
}

/// Shape information shared by every draw of a store.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoreDims {
    pub n: usize,
    pub categories: Vec<usize>,
    pub t_max: usize,
    pub n_subpops: usize,
    pub groups: usize,
    pub periods: usize,
    pub profiles: usize,
    pub catalog_size: usize,
}

impl StoreDims {
    pub fn p(&self) -> usize {
        self.categories.len()
    }
}

/// Post-burn-in, thinned draws of one chain plus per-iteration traces.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawStore {
    pub dims: StoreDims,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub chain: usize,
    /// Proposal scale in effect after burn-in.
    pub sigma_alpha: f64,
    pub draws: Vec<Draw>,
    /// Metropolis-Hastings acceptance of the concentration update, every iteration.
    pub accepted: Vec<bool>,
    /// Complete-data log-likelihood after every iteration.
    pub loglik: Vec<f64>,
}

impl DrawStore {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Number of chains whose traces are stored back to back.
    pub fn n_chains(&self) -> usize {
        (self.accepted.len() / self.iterations.max(1)).max(1)
    }

    /// Acceptance rate over the post-burn-in iterations of every chain.
    pub fn acceptance_rate(&self) -> f64 {
        let (mut hits, mut total) = (0usize, 0usize);
        for chain in self.accepted.chunks(self.iterations.max(1)) {
            let post = &chain[self.burn_in.min(chain.len())..];
            hits += post.iter().filter(|&&a| a).count();
            total += post.len();
        }
        if total == 0 {
            return f64::NAN;
        }
        hits as f64 / total as f64
    }

    /// Posterior mean of the response tables, same layout as `ProfileTables`.
    pub fn mean_lambda(&self) -> Vec<f64> {
        mean_of(self.draws.iter().map(|d| d.params.lambda.as_slice()))
    }

    pub fn mean_alpha(&self) -> Vec<f64> {
        mean_of(self.draws.iter().map(|d| d.params.alpha.as_slice()))
    }

    /// Checks every draw against the dataset it was fitted to.
    pub fn validate_against(&self, dataset: &Dataset) -> Result<()> {
        for (l, draw) in self.draws.iter().enumerate() {
            validate(dataset, &draw.blocks, &draw.params)
                .and_then(|_| validate_state(dataset, &draw.blocks, &draw.state))
                .map_err(|e| Error::InvalidValue {
                    field: format!("draw {l}"),
                    reason: e.to_string(),
                })?;
        }
        Ok(())
    }
}

fn mean_of<'a>(rows: impl Iterator<Item = &'a [f64]>) -> Vec<f64> {
    let mut sum: Vec<f64> = Vec::new();
    let mut count = 0usize;
    for row in rows {
        if sum.is_empty() {
            sum = vec![0.0; row.len()];
        }
        for (s, v) in sum.iter_mut().zip(row) {
            *s += v;
        }
        count += 1;
    }
    sum.iter().map(|s| s / count.max(1) as f64).collect()
}
