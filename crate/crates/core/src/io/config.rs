//! Run configuration files.
//!
//! A config file is flat TOML. Every key is optional; command-line flags
//! override file values, which override built-in defaults.
//!
//! ```toml
//! config_version = 1
//! iterations = 6000
//! burn_in = 3000
//! thin = 1
//! chains = 1
//! seed = 7
//! threads = 0
//! a_alpha = 2.0
//! b_alpha = 1.0
//! sigma_alpha = 0.02
//! adapt_sigma = false
//! target_accept = 0.6
//! group_update = "collapsed"   # or "conditional"
//! label_moves = true
//! groups = 3
//! periods = 2
//! profiles = 4
//! subpops = 1
//! grid = "G=2,3;K=3,4,5;C=1;R=2"
//! categories = [4, 4, 3]
//! top_subtypes = 20
//! predictive_draws = 200
//! parsimony_margin = 10.0
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::ModelGrid;
use crate::error::{Error, Result};
use crate::sampler::{GroupUpdate, SamplerConfig};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub config_version: Option<u32>,
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    pub chains: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub a_alpha: Option<f64>,
    pub b_alpha: Option<f64>,
    pub sigma_alpha: Option<f64>,
    pub adapt_sigma: Option<bool>,
    pub target_accept: Option<f64>,
    pub group_update: Option<GroupUpdate>,
    pub label_moves: Option<bool>,
    pub groups: Option<usize>,
    pub periods: Option<usize>,
    pub profiles: Option<usize>,
    pub subpops: Option<usize>,
    pub grid: Option<String>,
    pub categories: Option<Vec<usize>>,
    pub top_subtypes: Option<usize>,
    pub predictive_draws: Option<usize>,
    pub parsimony_margin: Option<f64>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        match config.config_version {
            Some(CONFIG_VERSION) => Ok(config),
            Some(v) => Err(Error::Config(format!(
                "config_version {v} is not supported (expected {CONFIG_VERSION})"
            ))),
            None => Err(Error::Config("config file must set config_version".into())),
        }
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Sampler settings with file values laid over `base`.
    pub fn sampler(&self, base: &SamplerConfig) -> SamplerConfig {
        let mut c = base.clone();
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        set!(
            iterations,
            burn_in,
            thin,
            chains,
            seed,
            threads,
            a_alpha,
            b_alpha,
            sigma_alpha,
            adapt_sigma,
            target_accept,
            group_update,
            label_moves
        );
        c
    }

    pub fn model_grid(&self) -> Result<Option<ModelGrid>> {
        self.grid.as_deref().map(str::parse).transpose()
    }
}
