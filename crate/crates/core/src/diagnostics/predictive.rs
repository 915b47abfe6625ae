use rayon::prelude::*;

use crate::association::cramers_v;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{categorical, Purpose, Streams};
use crate::sampler::{Draw, DrawStore};

/// Item-by-item association matrix.
pub type Matrix = Vec<Vec<f64>>;

/// Cramér's V of every item pair, pooling all observed `(subject, visit)` cells.
pub fn sample_cramers_v(dataset: &Dataset) -> Result<Matrix> {
    pairwise(dataset.p(), &dataset.categories, |j| column(dataset, j))
}

fn column(dataset: &Dataset, j: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(dataset.n_observations() / dataset.p().max(1));
    for i in 0..dataset.n() {
        for t in 0..dataset.visits[i] {
            out.push(dataset.visit_row(i, t)[j]);
        }
    }
    out
}

fn pairwise(p: usize, categories: &[usize], col: impl Fn(usize) -> Vec<u8>) -> Result<Matrix> {
    let cols: Vec<Vec<u8>> = (0..p).map(col).collect();
    let mut m = vec![vec![0.0; p]; p];
    for a in 0..p {
        m[a][a] = 1.0;
        for b in a + 1..p {
            let mut table = vec![vec![0u64; categories[b]]; categories[a]];
            for (&x, &y) in cols[a].iter().zip(&cols[b]) {
                table[x as usize][y as usize] += 1;
            }
            let v = cramers_v(&table)?;
            m[a][b] = v;
            m[b][a] = v;
        }
    }
    Ok(m)
}

/// Replicate responses from one draw: fresh blockwise memberships from the
/// draw's scores, then responses from its tables and block structure.
pub fn replicate_responses(draw: &Draw, shape: &Dataset, streams: &Streams, index: u64) -> Dataset {
    let k_n = draw.params.lambda.n_profiles();
    let (g_n, r_n) = (draw.blocks.n_groups, draw.blocks.n_periods);
    let periods = draw.blocks.period_map();
    let mut z = vec![0usize; g_n * r_n];
    let mut weights = Vec::with_capacity(8);
    let mut y = shape.y.clone();
    for i in 0..shape.n() {
        let mut rng = streams.rng(Purpose::Predictive, index, i as u64);
        let pi = &draw.state.pi[i * k_n..(i + 1) * k_n];
        for slot in z.iter_mut() {
            *slot = categorical(pi, &mut rng);
        }
        let c = shape.subpop[i];
        for t in 0..shape.visits[i] {
            for j in 0..shape.p() {
                let g = draw.blocks.groups[j];
                let r = periods.slot(g * draw.blocks.n_subpops + c)[t] as usize;
                let k = z[g * r_n + r];
                weights.clear();
                weights.extend((0..shape.categories[j]).map(|cat| draw.params.lambda.get(j, cat, k)));
                y[(i * shape.t_max + t) * shape.p() + j] = categorical(&weights, &mut rng) as u8;
            }
        }
    }
    Dataset { y, ..shape.clone() }
}

/// Posterior mean over draws of the replicate-data Cramér's V matrix. At most
/// `max_draws` evenly spaced draws are used.
pub fn posterior_predictive_cramers_v(
    store: &DrawStore,
    dataset: &Dataset,
    max_draws: usize,
    seed: u64,
) -> Result<Matrix> {
    if store.is_empty() || max_draws == 0 {
        return Err(Error::InsufficientDraws { required: 1, found: 0 });
    }
    let l = store.len();
    let used = max_draws.min(l);
    let picks: Vec<usize> = (0..used).map(|u| u * l / used).collect();
    let streams = Streams::new(seed);
    let mats: Vec<Matrix> = picks
        .par_iter()
        .map(|&d| {
            let rep = replicate_responses(&store.draws[d], dataset, &streams, d as u64);
            sample_cramers_v(&rep)
        })
        .collect::<Result<_>>()?;
    let p = dataset.p();
    let mut mean = vec![vec![0.0; p]; p];
    for m in &mats {
        for a in 0..p {
            for b in 0..p {
                mean[a][b] += m[a][b] / used as f64;
            }
        }
    }
    for (a, row) in mean.iter_mut().enumerate() {
        row[a] = 1.0;
    }
    Ok(mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{run_chain, ModelDims, SamplerConfig};
    use crate::simulate::{builtin_setting, draw_dataset, Setting};

    fn fitted() -> (Dataset, DrawStore) {
        let (config, blocks, params) = builtin_setting(Setting::I);
        let (d, _) = draw_dataset(&config.with_n(30), &blocks, &params.lambda, &params.alpha).unwrap();
        let cfg = SamplerConfig {
            iterations: 30,
            burn_in: 10,
            seed: 8,
            ..Default::default()
        };
        let dims = ModelDims {
            groups: 2,
            periods: 2,
            profiles: 2,
        };
        let store = run_chain(&d, dims, &cfg, 0).unwrap();
        (d, store)
    }

    #[test]
    fn matrices_are_symmetric_with_unit_diagonal() {
        let (d, store) = fitted();
        for m in [
            sample_cramers_v(&d).unwrap(),
            posterior_predictive_cramers_v(&store, &d, 5, 1).unwrap(),
        ] {
            for a in 0..d.p() {
                assert_eq!(m[a][a], 1.0);
                for b in 0..d.p() {
                    assert_eq!(m[a][b], m[b][a]);
                    assert!((0.0..=1.0).contains(&m[a][b]));
                }
            }
        }
    }

    #[test]
    fn replicates_keep_the_shape_and_are_seeded() {
        let (d, store) = fitted();
        let streams = Streams::new(3);
        let a = replicate_responses(&store.draws[0], &d, &streams, 0);
        assert_eq!(
            (a.visits.clone(), a.categories.clone()),
            (d.visits.clone(), d.categories.clone())
        );
        a.validate().unwrap();
        assert_eq!(a, replicate_responses(&store.draws[0], &d, &streams, 0));
        assert_ne!(a, replicate_responses(&store.draws[0], &d, &streams, 1));
    }

    #[test]
    fn empty_store_is_rejected() {
        let (d, mut store) = fitted();
        assert!(posterior_predictive_cramers_v(&store, &d, 0, 1).is_err());
        store.draws.clear();
        assert!(posterior_predictive_cramers_v(&store, &d, 5, 1).is_err());
    }
}
