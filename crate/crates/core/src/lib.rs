//! Blockwise mixed membership models for multivariate longitudinal
//! categorical data.
//!
//! Items are partitioned into groups and visits into periods; every
//! (group, period) block of a subject shares one latent profile membership,
//! drawn from the subject's mixed membership scores. The crate covers
//! simulation, Metropolis-within-Gibbs posterior sampling, WAIC-based model
//! selection, recovery metrics and the file formats used by the `bm3` CLI.

pub mod association;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod likelihood;
pub mod math;
pub mod params;
pub mod replicate;
pub mod rng;
pub mod sampler;
pub mod simulate;
pub mod structure;
pub mod validate;

pub use association::cramers_v;
pub use data::Dataset;
pub use error::{Error, Result};
pub use likelihood::{brute_force_loglik, complete_data_loglik, cond_loglik_given_pi};
pub use params::{LatentState, ParamSet, ProfileTables};
pub use structure::{BlockStructure, CutpointCatalog};
pub use validate::validate;
