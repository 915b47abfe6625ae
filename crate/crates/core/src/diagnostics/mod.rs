//! Model selection, recovery metrics and posterior summaries.

mod modes;
mod predictive;
mod recovery;
mod selection;
mod subtypes;
mod waic;

pub use modes::{posterior_modes, PosteriorModes};
pub use predictive::{posterior_predictive_cramers_v, replicate_responses, sample_cramers_v, Matrix};
pub use recovery::{aligned_rmse, ari, AlignedRmse};
pub use selection::{
    choose, dataset_for_cell, fit_cell, select_model, CellResult, GridCell, ModelGrid, Selection, PARSIMONY_MARGIN,
};
pub use subtypes::{dominates, subtype_table, SubtypeRow, SubtypeTable};
pub use waic::{pointwise_loglik, waic, waic_from_loglik, Waic};
