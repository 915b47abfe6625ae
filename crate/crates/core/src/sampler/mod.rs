//! Metropolis-within-Gibbs sampler.

mod chain;
mod config;
mod relabel;
mod store;
pub mod updates;

pub use chain::{check_dims, initial_state, run_chain, run_chains, sweep, ChainState, SweepMoves};
pub use config::{GroupUpdate, ModelDims, SamplerConfig};
pub use relabel::{
    align_groups, align_profiles, apply_group_permutation, apply_profile_permutation, pool_chains, relabel_draws,
    MAX_ALIGNED_LABELS,
};
pub use store::{Draw, DrawStore, StoreDims};
pub use updates::AlphaPrior;
