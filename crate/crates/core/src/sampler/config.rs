use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Settings of one Metropolis-within-Gibbs run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub chains: usize,
    /// Shape of the gamma prior on the total concentration.
    pub a_alpha: f64,
    /// Rate of the gamma prior on the total concentration.
    pub b_alpha: f64,
    /// Log-scale step of the concentration proposal.
    pub sigma_alpha: f64,
    /// Tune `sigma_alpha` during burn-in (frozen afterwards).
    pub adapt_sigma: bool,
    pub target_accept: f64,
    pub seed: u64,
    /// Worker threads; 0 uses the rayon default. Never affects results.
    pub threads: usize,
    pub group_update: GroupUpdate,
    /// Add a Gibbs move over each group's profile relabelings (up to 8 profiles).
    pub label_moves: bool,
}

/// How item group labels are refreshed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupUpdate {
    /// `s_j` given the current `lambda[j]`.
    Conditional,
    /// `(s_j, lambda[j])` jointly, the group drawn with `lambda[j]` integrated out.
    #[default]
    Collapsed,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            iterations: 10_000,
            burn_in: 5_000,
            thin: 1,
            chains: 1,
            a_alpha: 2.0,
            b_alpha: 1.0,
            sigma_alpha: 0.02,
            adapt_sigma: false,
            target_accept: 0.6,
            seed: 0,
            threads: 1,
            group_update: GroupUpdate::default(),
            label_moves: true,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.burn_in >= self.iterations {
            return Err(Error::Config(format!(
                "burn-in ({}) must be smaller than the iteration count ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 || self.chains == 0 {
            return Err(Error::Config("thin and chains must be at least 1".into()));
        }
        for (name, v) in [
            ("a_alpha", self.a_alpha),
            ("b_alpha", self.b_alpha),
            ("sigma_alpha", self.sigma_alpha),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::Config(format!(
                "target_accept must lie in (0, 1), got {}",
                self.target_accept
            )));
        }
        Ok(())
    }

    /// Number of draws a chain keeps.
    pub fn kept_draws(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

/// Fixed model dimensions of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelDims {
    pub groups: usize,
    pub periods: usize,
    pub profiles: usize,
}
