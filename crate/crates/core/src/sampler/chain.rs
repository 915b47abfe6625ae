use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::likelihood::complete_data_loglik;
use crate::params::{LatentState, ParamSet, ProfileTables};
use crate::rng::{dirichlet, Purpose, Streams};
use crate::structure::{BlockStructure, CutpointCatalog};
use rand::Rng;

use super::config::{GroupUpdate, ModelDims, SamplerConfig};
use super::relabel::MAX_ALIGNED_LABELS;
use super::store::{Draw, DrawStore, StoreDims};
use super::updates::{
    sum_log_pi, update_alpha_mh, update_cutpoints, update_group_labels, update_lambda, update_pi, update_s,
    update_s_collapsed, update_xi_kappa, update_z, AlphaPrior, SweepContext,
};
use crate::math::permutations;

/// Full state of a running chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub blocks: BlockStructure,
    pub params: ParamSet,
    pub latent: LatentState,
    /// Catalog index of each `(g, c)` cut-point vector.
    pub cut_index: Vec<usize>,
}

impl ChainState {
    pub fn to_draw(&self) -> Draw {
        Draw {
            params: self.params.clone(),
            blocks: self.blocks.clone(),
            state: self.latent.clone(),
        }
    }
}

/// Rejects dimension choices the data cannot support.
pub fn check_dims(dataset: &Dataset, dims: ModelDims) -> Result<()> {
    if dims.groups == 0 || dims.periods == 0 || dims.profiles == 0 {
        return Err(Error::InfeasibleDims(format!(
            "G, R and K must be positive, got ({}, {}, {})",
            dims.groups, dims.periods, dims.profiles
        )));
    }
    if dims.groups > dataset.p() {
        return Err(Error::InfeasibleDims(format!(
            "G = {} exceeds the number of items p = {}",
            dims.groups,
            dataset.p()
        )));
    }
    if dims.periods > dataset.t_max {
        return Err(Error::InfeasibleDims(format!(
            "R = {} exceeds the number of visits T = {}",
            dims.periods, dataset.t_max
        )));
    }
    if dims.profiles > u16::MAX as usize {
        return Err(Error::InfeasibleDims(format!("K = {} is too large", dims.profiles)));
    }
    Ok(())
}

/// Diffuse starting point: uniform groups and cut-points, `Dirichlet(1)`
/// response tables, unit concentrations, memberships drawn from their conditional.
pub fn initial_state(dataset: &Dataset, dims: ModelDims, catalog: &CutpointCatalog, streams: &Streams) -> ChainState {
    let (g_n, r_n, k_n) = (dims.groups, dims.periods, dims.profiles);
    let c_n = dataset.n_subpops;
    let mut rng = streams.rng(Purpose::Init, 0, 0);
    let groups: Vec<usize> = (0..dataset.p()).map(|_| rng.random_range(0..g_n)).collect();
    let cut_index: Vec<usize> = (0..g_n * c_n).map(|_| rng.random_range(0..catalog.len())).collect();
    let mut lambda = ProfileTables::uniform(&dataset.categories, k_n);
    for j in 0..dataset.p() {
        let ones = vec![1.0; dataset.categories[j]];
        for k in 0..k_n {
            for (c, v) in dirichlet(&ones, &mut rng).into_iter().enumerate() {
                lambda.set(j, c, k, v);
            }
        }
    }
    let alpha = vec![1.0; k_n];
    let blocks = BlockStructure {
        n_groups: g_n,
        n_periods: r_n,
        n_subpops: c_n,
        t_max: dataset.t_max,
        groups,
        cutpoints: cut_index.iter().map(|&m| catalog.get(m).to_vec()).collect(),
    };
    let mut pi = Vec::with_capacity(dataset.n() * k_n);
    for i in 0..dataset.n() {
        let mut r = streams.rng(Purpose::Init, 0, 1 + i as u64);
        pi.extend(dirichlet(&alpha, &mut r));
    }
    let z = update_z(&SweepContext::new(dataset, &blocks, &lambda), &pi, streams, 0);
    ChainState {
        params: ParamSet {
            lambda,
            alpha,
            xi: vec![1.0 / g_n as f64; g_n],
            kappa: vec![vec![1.0 / catalog.len() as f64; catalog.len()]; g_n * c_n],
        },
        latent: LatentState {
            n_profiles: k_n,
            n_groups: g_n,
            n_periods: r_n,
            pi,
            z,
        },
        blocks,
        cut_index,
    }
}

/// Optional moves layered on the basic scan.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepMoves {
    pub group_update: GroupUpdate,
    /// Permutations of the profile labels for the per-group relabeling move;
    /// `None` disables it.
    pub label_perms: Option<Vec<Vec<usize>>>,
}

impl SweepMoves {
    pub fn new(config: &SamplerConfig, n_profiles: usize) -> Self {
        SweepMoves {
            group_update: config.group_update,
            label_perms: (config.label_moves && (2..=MAX_ALIGNED_LABELS).contains(&n_profiles))
                .then(|| permutations(n_profiles)),
        }
    }
}

/// One systematic scan. `iteration` starts at 1. Returns whether the
/// concentration proposal was accepted.
pub fn sweep(
    dataset: &Dataset,
    state: &mut ChainState,
    catalog: &CutpointCatalog,
    prior: AlphaPrior,
    sigma: f64,
    moves: &SweepMoves,
    streams: &Streams,
    iteration: u64,
) -> bool {
    let label_perms = moves.label_perms.as_deref();
    let k_n = state.latent.n_profiles;
    let zb = state.blocks.n_groups * state.blocks.n_periods;

    state.params.lambda = update_lambda(dataset, &state.blocks, k_n, &state.latent.z, streams, iteration);

    if let Some(perms) = label_perms {
        update_group_labels(
            &state.blocks,
            &mut state.params.lambda,
            &mut state.latent.z,
            &state.params.alpha,
            perms,
            streams,
            iteration,
        );
    }
    state.latent.pi = update_pi(&state.latent.z, zb, &state.params.alpha, streams, iteration);
    let ctx = SweepContext::new(dataset, &state.blocks, &state.params.lambda);
    state.latent.z = update_z(&ctx, &state.latent.pi, streams, iteration);

    let groups = match moves.group_update {
        GroupUpdate::Conditional => update_s(&ctx, &state.latent.z, &state.params.xi, streams, iteration),
        GroupUpdate::Collapsed => {
            let (groups, lambda) = update_s_collapsed(&ctx, &state.latent.z, &state.params.xi, streams, iteration);
            drop(ctx);
            state.params.lambda = lambda;
            groups
        }
    };
    state.blocks.groups = groups;
    let ctx = SweepContext::new(dataset, &state.blocks, &state.params.lambda);
    let cut_index = update_cutpoints(&ctx, &state.latent.z, &state.params.kappa, catalog, streams, iteration);
    drop(ctx);
    state.blocks.cutpoints = cut_index.iter().map(|&m| catalog.get(m).to_vec()).collect();
    state.cut_index = cut_index;

    let (xi, kappa) = update_xi_kappa(
        &state.blocks.groups,
        state.blocks.n_groups,
        &state.cut_index,
        catalog.len(),
        streams,
        iteration,
    );
    state.params.xi = xi;
    state.params.kappa = kappa;

    let slp = sum_log_pi(&state.latent.pi, k_n);
    let (alpha, accepted) = update_alpha_mh(&state.params.alpha, &slp, dataset.n(), prior, sigma, streams, iteration);
    state.params.alpha = alpha;
    accepted
}

/// Runs chain number `chain` of `config` and keeps thinned post-burn-in draws.
pub fn run_chain(dataset: &Dataset, dims: ModelDims, config: &SamplerConfig, chain: usize) -> Result<DrawStore> {
    config.validate()?;
    dataset.validate()?;
    check_dims(dataset, dims)?;
    let catalog = CutpointCatalog::new(dataset.t_max, dims.periods)?;
    let streams = Streams::new(config.seed).child(chain as u64);
    let prior = AlphaPrior {
        a: config.a_alpha,
        b: config.b_alpha,
    };
    let run = || {
        let moves = SweepMoves::new(config, dims.profiles);
        let mut state = initial_state(dataset, dims, &catalog, &streams);
        let mut log_sigma = config.sigma_alpha.ln();
        let mut draws = Vec::with_capacity(config.kept_draws());
        let mut accepted = Vec::with_capacity(config.iterations);
        let mut loglik = Vec::with_capacity(config.iterations);
        for l in 0..config.iterations {
            let acc = sweep(
                dataset,
                &mut state,
                &catalog,
                prior,
                log_sigma.exp(),
                &moves,
                &streams,
                l as u64 + 1,
            );
            if config.adapt_sigma && l < config.burn_in {
                let step = (l as f64 + 1.0).powf(-0.6);
                log_sigma += step * ((acc as u8 as f64) - config.target_accept);
                log_sigma = log_sigma.clamp(-12.0, 3.0);
            }
            accepted.push(acc);
            loglik.push(complete_data_loglik(
                dataset,
                &state.blocks,
                &state.params.lambda,
                &state.latent,
            ));
            if l >= config.burn_in && (l - config.burn_in + 1).is_multiple_of(config.thin) {
                draws.push(state.to_draw());
            }
        }
        Ok(DrawStore {
            dims: StoreDims {
                n: dataset.n(),
                categories: dataset.categories.clone(),
                t_max: dataset.t_max,
                n_subpops: dataset.n_subpops,
                groups: dims.groups,
                periods: dims.periods,
                profiles: dims.profiles,
                catalog_size: catalog.len(),
            },
            iterations: config.iterations,
            burn_in: config.burn_in,
            thin: config.thin,
            seed: config.seed,
            chain,
            sigma_alpha: log_sigma.exp(),
            draws,
            accepted,
            loglik,
        })
    };
    if cfg!(target_family = "wasm") {
        // no worker threads in a browser; rayon runs on the calling thread
        return run();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?
        .install(run)
}

/// Runs every chain of `config` in turn.
pub fn run_chains(dataset: &Dataset, dims: ModelDims, config: &SamplerConfig) -> Result<Vec<DrawStore>> {
    (0..config.chains)
        .map(|m| run_chain(dataset, dims, config, m))
        .collect()
}
