//! Browser bindings. Every call re-simulates its dataset from
//! `(setting, n, seed)`, so the page keeps no state on the Rust side.
//! Results cross the boundary as JSON strings.

use bm3::diagnostics::{posterior_modes, sample_cramers_v};
use bm3::replicate::recovery_metrics;
use bm3::sampler::{relabel_draws, run_chain, ModelDims, SamplerConfig};
use bm3::simulate::{builtin_setting, draw_dataset, GroundTruth, Setting};
use bm3::Dataset;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Upper bounds that keep a single call responsive in a browser tab.
pub const MAX_SUBJECTS: usize = 1_000;
pub const MAX_ITERATIONS: usize = 5_000;

#[derive(Debug, Serialize)]
pub struct DataView {
    pub n: usize,
    pub p: usize,
    pub t_max: usize,
    pub subpops: usize,
    pub groups: Vec<usize>,
    /// `cutpoints[g][c]`, 1-based last visit of each early period.
    pub cutpoints: Vec<Vec<Vec<usize>>>,
    /// Category shares per visit, `shares[t][c]`, pooled over items.
    pub shares: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct FitView {
    pub iterations: usize,
    pub burn_in: usize,
    pub loglik: Vec<f64>,
    pub acceptance_rate: f64,
    pub groups: Vec<usize>,
    pub cutpoints: Vec<Vec<Vec<usize>>>,
    pub ari_groups: f64,
    pub ari_periods: f64,
    pub rmse_lambda: f64,
    pub rmse_alpha: f64,
    pub alpha_mean: Vec<f64>,
}

fn simulate(setting: &str, n: usize, seed: u64) -> Result<(Dataset, GroundTruth, Setting), String> {
    if n == 0 || n > MAX_SUBJECTS {
        return Err(format!("n must be between 1 and {MAX_SUBJECTS}"));
    }
    let which: Setting = setting.parse().map_err(|e: bm3::Error| e.to_string())?;
    let (sim, blocks, params) = builtin_setting(which);
    let (data, truth) = draw_dataset(&sim.with_n(n).with_seed(seed), &blocks, &params.lambda, &params.alpha)
        .map_err(|e| e.to_string())?;
    Ok((data, truth, which))
}

fn nested_cuts(cutpoints: &[Vec<usize>], groups: usize, subpops: usize) -> Vec<Vec<Vec<usize>>> {
    (0..groups)
        .map(|g| (0..subpops).map(|c| cutpoints[g * subpops + c].clone()).collect())
        .collect()
}

pub fn data_view(setting: &str, n: usize, seed: u64) -> Result<DataView, String> {
    let (data, truth, _) = simulate(setting, n, seed)?;
    let b = &truth.blocks;
    let d = data.categories.iter().copied().max().unwrap_or(0);
    let mut shares = vec![vec![0.0; d]; data.t_max];
    for (t, row) in shares.iter_mut().enumerate() {
        let mut total = 0.0f64;
        for i in (0..data.n()).filter(|&i| t < data.visits[i]) {
            for &y in data.visit_row(i, t) {
                row[y as usize] += 1.0;
                total += 1.0;
            }
        }
        row.iter_mut().for_each(|x| *x /= total.max(1.0));
    }
    Ok(DataView {
        n: data.n(),
        p: data.p(),
        t_max: data.t_max,
        subpops: data.n_subpops,
        groups: b.groups.iter().map(|g| g + 1).collect(),
        cutpoints: nested_cuts(&b.cutpoints, b.n_groups, b.n_subpops),
        shares,
    })
}

pub fn association(setting: &str, n: usize, seed: u64) -> Result<Vec<Vec<f64>>, String> {
    let (data, _, _) = simulate(setting, n, seed)?;
    sample_cramers_v(&data).map_err(|e| e.to_string())
}

pub fn fit_view(setting: &str, n: usize, seed: u64, iterations: usize) -> Result<FitView, String> {
    if !(2..=MAX_ITERATIONS).contains(&iterations) {
        return Err(format!("iterations must be between 2 and {MAX_ITERATIONS}"));
    }
    let (data, truth, which) = simulate(setting, n, seed)?;
    let (sim, _, _) = builtin_setting(which);
    let config = SamplerConfig {
        iterations,
        burn_in: iterations / 2,
        seed: seed.wrapping_add(1),
        ..Default::default()
    };
    let dims = ModelDims {
        groups: sim.n_groups,
        periods: sim.n_periods,
        profiles: sim.n_profiles,
    };
    let store = relabel_draws(run_chain(&data, dims, &config, 0).map_err(|e| e.to_string())?);
    let modes = posterior_modes(&store).map_err(|e| e.to_string())?;
    let (ari_groups, ari_periods, rmse) = recovery_metrics(&store, &truth).map_err(|e| e.to_string())?;
    Ok(FitView {
        iterations,
        burn_in: config.burn_in,
        loglik: store.loglik.clone(),
        acceptance_rate: store.acceptance_rate(),
        groups: modes.groups.iter().map(|g| g + 1).collect(),
        cutpoints: nested_cuts(&modes.cutpoints, modes.n_groups, modes.n_subpops),
        ari_groups,
        ari_periods,
        rmse_lambda: rmse.lambda,
        rmse_alpha: rmse.alpha,
        alpha_mean: store.mean_alpha(),
    })
}

fn to_js<T: Serialize>(value: Result<T, String>) -> Result<String, JsError> {
    value
        .and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsError::new(&e))
}

/// Item groups, cut-points and per-visit category shares of a simulated dataset.
#[wasm_bindgen]
pub fn simulate_summary(setting: &str, n: usize, seed: u32) -> Result<String, JsError> {
    to_js(data_view(setting, n, seed.into()))
}

/// Item-by-item Cramér's V of a simulated dataset.
#[wasm_bindgen]
pub fn association_matrix(setting: &str, n: usize, seed: u32) -> Result<String, JsError> {
    to_js(association(setting, n, seed.into()))
}

/// Fits the true dimensions to a simulated dataset with one chain and
/// scores the recovery.
#[wasm_bindgen]
pub fn fit_chain(setting: &str, n: usize, seed: u32, iterations: usize) -> Result<String, JsError> {
    to_js(fit_view(setting, n, seed.into(), iterations))
}
