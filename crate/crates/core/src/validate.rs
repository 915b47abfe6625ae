use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::params::{check_simplex, LatentState, ParamSet};
use crate::structure::{binomial, BlockStructure};

/// Checks every type invariant and that the three objects agree on dimensions.
pub fn validate(dataset: &Dataset, blocks: &BlockStructure, params: &ParamSet) -> Result<()> {
    dataset.validate()?;
    blocks.validate()?;
    let p = dataset.p();
    if blocks.groups.len() != p {
        return Err(Error::dims("groups", p, blocks.groups.len()));
    }
    if blocks.t_max != dataset.t_max {
        return Err(Error::dims("blocks.t_max", dataset.t_max, blocks.t_max));
    }
    if blocks.n_subpops != dataset.n_subpops {
        return Err(Error::dims("blocks.n_subpops", dataset.n_subpops, blocks.n_subpops));
    }

    let lambda = &params.lambda;
    if lambda.categories() != dataset.categories.as_slice() {
        let j = (0..p.min(lambda.n_items()))
            .find(|&j| lambda.categories()[j] != dataset.categories[j])
            .unwrap_or(p.min(lambda.n_items()));
        if lambda.n_items() != p {
            return Err(Error::dims("lambda items", p, lambda.n_items()));
        }
        return Err(Error::dims(
            format!("lambda[{j}] categories"),
            dataset.categories[j],
            lambda.categories()[j],
        ));
    }
    lambda.validate()?;

    let k_n = lambda.n_profiles();
    if params.alpha.len() != k_n {
        return Err(Error::dims("alpha", k_n, params.alpha.len()));
    }
    if let Some(k) = params.alpha.iter().position(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(Error::InvalidValue {
            field: format!("alpha[{k}]"),
            reason: format!("{} is not a positive real", params.alpha[k]),
        });
    }

    if params.xi.len() != blocks.n_groups {
        return Err(Error::dims("xi", blocks.n_groups, params.xi.len()));
    }
    check_simplex("xi", &params.xi)?;

    let slots = blocks.n_groups * blocks.n_subpops;
    if params.kappa.len() != slots {
        return Err(Error::dims("kappa", slots, params.kappa.len()));
    }
    let catalog_size = binomial(blocks.t_max.saturating_sub(1) as u64, blocks.n_periods as u64 - 1) as usize;
    for (gc, kappa) in params.kappa.iter().enumerate() {
        if kappa.len() != catalog_size {
            return Err(Error::dims(format!("kappa[{gc}]"), catalog_size, kappa.len()));
        }
        check_simplex(&format!("kappa[{gc}]"), kappa)?;
    }
    Ok(())
}

/// Checks a latent state against the dataset and block structure.
pub fn validate_state(dataset: &Dataset, blocks: &BlockStructure, state: &LatentState) -> Result<()> {
    if state.n_groups != blocks.n_groups {
        return Err(Error::dims("state.n_groups", blocks.n_groups, state.n_groups));
    }
    if state.n_periods != blocks.n_periods {
        return Err(Error::dims("state.n_periods", blocks.n_periods, state.n_periods));
    }
    state.validate(dataset.n())
}
