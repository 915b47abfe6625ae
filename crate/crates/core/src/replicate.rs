//! Simulation studies: simulate from a built-in setting, refit with the true
//! dimensions and score the recovery.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::{aligned_rmse, ari, posterior_modes, AlignedRmse};
use crate::error::{Error, Result};
use crate::math::median_iqr;
use crate::params::ProfileTables;
use crate::rng::Streams;
use crate::sampler::{pool_chains, run_chains, DrawStore, ModelDims, SamplerConfig};
use crate::simulate::{builtin_setting, draw_dataset, GroundTruth, Setting};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateMetrics {
    pub index: usize,
    pub data_seed: u64,
    pub sampler_seed: u64,
    pub ari_groups: f64,
    /// Mean over `(g, c)` of the ARI between visit partitions.
    pub ari_periods: f64,
    pub rmse_lambda: f64,
    pub rmse_alpha: f64,
    pub acceptance_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spread {
    pub median: f64,
    pub iqr: f64,
}

impl Spread {
    /// Median and interquartile range with linearly interpolated quantiles.
    pub fn of(values: &[f64]) -> Spread {
        let (median, iqr) = median_iqr(values);
        Spread { median, iqr }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateTable {
    pub setting: String,
    pub n: usize,
    pub replicates: usize,
    pub ari_groups: Spread,
    pub ari_periods: Spread,
    pub rmse_lambda: Spread,
    pub rmse_alpha: Spread,
    pub acceptance_rate: Spread,
    pub rows: Vec<ReplicateMetrics>,
}

/// Recovery of the item partition, period partitions, response tables and
/// concentrations by a relabeled store.
///
/// Each true group is compared with the estimated group holding most of its
/// items, so the period score does not depend on the group labels.
pub fn recovery_metrics(store: &DrawStore, truth: &GroundTruth) -> Result<(f64, f64, AlignedRmse)> {
    let modes = posterior_modes(store)?;
    let ari_groups = ari(&modes.groups, &truth.blocks.groups)?;
    let est_blocks = modes.blocks();
    let t = &truth.blocks;
    let mut total = 0.0;
    for g in 0..t.n_groups {
        let mut counts = vec![0usize; est_blocks.n_groups];
        for (j, &tg) in t.groups.iter().enumerate() {
            if tg == g {
                counts[est_blocks.groups[j]] += 1;
            }
        }
        let matched = (0..counts.len()).fold(0, |b, h| if counts[h] > counts[b] { h } else { b });
        for c in 0..t.n_subpops {
            total += ari(&est_blocks.period_labels(matched, c), &t.period_labels(g, c))?;
        }
    }
    let ari_periods = total / (t.n_groups * t.n_subpops) as f64;
    let dims = &store.dims;
    let mean = ProfileTables::from_flat(&dims.categories, dims.profiles, store.mean_lambda())?;
    let rmse = aligned_rmse(&mean, &store.mean_alpha(), &truth.params.lambda, &truth.params.alpha)?;
    Ok((ari_groups, ari_periods, rmse))
}

/// Seeds of replicate `index`: one for the data, one for the sampler.
pub fn replicate_seeds(master: u64, index: usize) -> (u64, u64) {
    let s = Streams::new(master).child(index as u64);
    (s.child(0).seed(), s.child(1).seed())
}

pub fn run_replicate(
    setting: Setting,
    n: usize,
    index: usize,
    master_seed: u64,
    sampler: &SamplerConfig,
) -> Result<ReplicateMetrics> {
    let (data_seed, sampler_seed) = replicate_seeds(master_seed, index);
    let (sim, blocks, params) = builtin_setting(setting);
    let sim = sim.with_n(n).with_seed(data_seed);
    let (data, truth) = draw_dataset(&sim, &blocks, &params.lambda, &params.alpha)?;
    let config = SamplerConfig {
        seed: sampler_seed,
        ..sampler.clone()
    };
    let dims = ModelDims {
        groups: sim.n_groups,
        periods: sim.n_periods,
        profiles: sim.n_profiles,
    };
    let store =
        pool_chains(run_chains(&data, dims, &config)?).ok_or(Error::InsufficientDraws { required: 1, found: 0 })?;
    let (ari_groups, ari_periods, rmse) = recovery_metrics(&store, &truth)?;
    Ok(ReplicateMetrics {
        index,
        data_seed,
        sampler_seed,
        ari_groups,
        ari_periods,
        rmse_lambda: rmse.lambda,
        rmse_alpha: rmse.alpha,
        acceptance_rate: store.acceptance_rate(),
    })
}

/// Runs `replicates` independent simulate-and-fit rounds concurrently.
/// Results are in replicate order and do not depend on the thread count.
pub fn replicate_harness(
    setting: Setting,
    n: usize,
    replicates: usize,
    master_seed: u64,
    sampler: &SamplerConfig,
) -> Result<ReplicateTable> {
    if replicates == 0 {
        return Err(Error::Config("at least one replicate is required".into()));
    }
    sampler.validate()?;
    let rows = (0..replicates)
        .into_par_iter()
        .map(|r| {
            run_replicate(setting, n, r, master_seed, sampler).map_err(|e| Error::Replicate {
                index: r,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let spread = |f: fn(&ReplicateMetrics) -> f64| Spread::of(&rows.iter().map(f).collect::<Vec<_>>());
    Ok(ReplicateTable {
        setting: setting.to_string(),
        n,
        replicates,
        ari_groups: spread(|m| m.ari_groups),
        ari_periods: spread(|m| m.ari_periods),
        rmse_lambda: spread(|m| m.rmse_lambda),
        rmse_alpha: spread(|m| m.rmse_alpha),
        acceptance_rate: spread(|m| m.acceptance_rate),
        rows,
    })
}

/// One line per table: medians with IQRs in parentheses.
pub fn render_replicate_tables(tables: &[ReplicateTable]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<8} {:>5} {:>5} {:>13} {:>13} {:>13} {:>13}",
        "setting", "n", "reps", "ARI(s)", "ARI(b)", "RMSE(Lambda)", "RMSE(alpha)"
    );
    let cell = |s: Spread, digits: usize| format!("{:.*} ({:.*})", digits, s.median, digits, s.iqr);
    for t in tables {
        let _ = writeln!(
            out,
            "{:<8} {:>5} {:>5} {:>13} {:>13} {:>13} {:>13}",
            t.setting,
            t.n,
            t.replicates,
            cell(t.ari_groups, 2),
            cell(t.ari_periods, 2),
            cell(t.rmse_lambda, 3),
            cell(t.rmse_alpha, 3)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spread_of_known_values() {
        let s = Spread::of(&[4.0, 1.0, 3.0, 2.0]);
        assert_eq!(s.median, 2.5);
        // quartiles 1.75 and 3.25
        assert!((s.iqr - 1.5).abs() < 1e-15);
        assert_eq!(Spread::of(&[0.7]), Spread { median: 0.7, iqr: 0.0 });
    }

    #[test]
    fn seeds_differ_by_replicate_and_role() {
        let (a, b) = replicate_seeds(1, 0);
        let (c, d) = replicate_seeds(1, 1);
        assert!(a != b && a != c && b != d);
        assert_eq!(replicate_seeds(1, 1), (c, d));
    }

    #[test]
    fn truth_store_scores_perfectly() {
        let (sim, blocks, params) = builtin_setting(Setting::III);
        let (_, truth) = draw_dataset(&sim.with_n(30), &blocks, &params.lambda, &params.alpha).unwrap();
        let draw = crate::sampler::Draw {
            params: truth.params.clone(),
            blocks: truth.blocks.clone(),
            state: truth.state.clone(),
        };
        let mut store = crate::sampler::relabel_draws(DrawStore {
            dims: crate::sampler::StoreDims {
                n: 30,
                categories: sim.categories.clone(),
                t_max: 10,
                n_subpops: 2,
                groups: 2,
                periods: 2,
                profiles: 4,
                catalog_size: 9,
            },
            iterations: 2,
            burn_in: 0,
            thin: 1,
            seed: 0,
            chain: 0,
            sigma_alpha: 0.02,
            draws: vec![draw.clone(), draw],
            accepted: vec![true, false],
            loglik: vec![0.0, 0.0],
        });
        // swapped group labels must not matter
        for d in &mut store.draws {
            crate::sampler::apply_group_permutation(d, &[1, 0]);
        }
        let (s, b, rmse) = recovery_metrics(&store, &truth).unwrap();
        assert_eq!((s, b), (1.0, 1.0));
        assert!(rmse.lambda < 1e-15 && rmse.alpha < 1e-15);
    }

    #[test]
    fn single_replicate_has_zero_iqr() {
        let sampler = SamplerConfig {
            iterations: 40,
            burn_in: 20,
            ..Default::default()
        };
        let t = replicate_harness(Setting::I, 30, 1, 9, &sampler).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rmse_lambda.iqr, 0.0);
        assert_eq!(t.ari_groups.iqr, 0.0);
        assert!(render_replicate_tables(&[t]).lines().count() == 2);
    }

    #[test]
    fn failures_carry_the_replicate_index() {
        let sampler = SamplerConfig {
            iterations: 40,
            burn_in: 20,
            ..Default::default()
        };
        match replicate_harness(Setting::I, 0, 2, 9, &sampler) {
            Err(Error::Replicate { index, .. }) => assert_eq!(index, 0),
            other => panic!("{other:?}"),
        }
    }
}
