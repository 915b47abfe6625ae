//! Joint-distribution ("getting it right") check of the sampler: draws from
//! the prior compared with a chain alternating one sweep and a fresh dataset.

use bm3::data::MISSING;
use bm3::params::LatentState;
use bm3::rng::{categorical, dirichlet, log_gamma_variate, Purpose, Streams};
use bm3::sampler::{sweep, AlphaPrior, ChainState, SweepMoves};
use bm3::structure::{BlockStructure, CutpointCatalog};
use bm3::{Dataset, ParamSet, ProfileTables};
use rand::Rng;

use super::batch_mean_se;

#[derive(Debug, Clone, Copy)]
pub struct GewekeSetup {
    pub n: usize,
    pub p: usize,
    pub t: usize,
    pub groups: usize,
    pub periods: usize,
    pub profiles: usize,
    pub categories: usize,
    pub prior: AlphaPrior,
    pub sigma: f64,
}

/// Named statistic with its two estimates and the standardized gap.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub name: String,
    pub forward: f64,
    pub chain: f64,
    pub z: f64,
}

fn prior_state(s: &GewekeSetup, catalog: &CutpointCatalog, rng: &mut impl Rng) -> ChainState {
    let (g_n, r_n, k_n) = (s.groups, s.periods, s.profiles);
    let xi = dirichlet(&vec![1.0; g_n], rng);
    let groups: Vec<usize> = (0..s.p).map(|_| categorical(&xi, rng)).collect();
    let kappa: Vec<Vec<f64>> = (0..g_n).map(|_| dirichlet(&vec![1.0; catalog.len()], rng)).collect();
    let cut_index: Vec<usize> = kappa.iter().map(|k| categorical(k, rng)).collect();
    // density a0^(a-1) e^(-b a0) on the alpha orthant: a0 ~ Gamma(a + K - 1, b), direction uniform
    let a0 = log_gamma_variate(s.prior.a + k_n as f64 - 1.0, rng).exp() / s.prior.b;
    let alpha: Vec<f64> = dirichlet(&vec![1.0; k_n], rng).iter().map(|e| e * a0).collect();
    let mut pi = Vec::with_capacity(s.n * k_n);
    let mut z = Vec::with_capacity(s.n * g_n * r_n);
    for _ in 0..s.n {
        let pi_i = dirichlet(&alpha, rng);
        z.extend((0..g_n * r_n).map(|_| categorical(&pi_i, rng)));
        pi.extend(pi_i);
    }
    let cats = vec![s.categories; s.p];
    let mut lambda = ProfileTables::uniform(&cats, k_n);
    for j in 0..s.p {
        for k in 0..k_n {
            for (c, v) in dirichlet(&vec![1.0; s.categories], rng).into_iter().enumerate() {
                lambda.set(j, c, k, v);
            }
        }
    }
    ChainState {
        blocks: BlockStructure {
            n_groups: g_n,
            n_periods: r_n,
            n_subpops: 1,
            t_max: s.t,
            groups,
            cutpoints: cut_index.iter().map(|&m| catalog.get(m).to_vec()).collect(),
        },
        params: ParamSet {
            lambda,
            alpha,
            xi,
            kappa,
        },
        latent: LatentState {
            n_profiles: k_n,
            n_groups: g_n,
            n_periods: r_n,
            pi,
            z,
        },
        cut_index,
    }
}

/// Responses given every latent quantity of `state`.
fn responses(s: &GewekeSetup, state: &ChainState, rng: &mut impl Rng) -> Dataset {
    let mut y = vec![MISSING; s.n * s.t * s.p];
    let b = &state.blocks;
    let mut w = vec![0.0; s.categories];
    for i in 0..s.n {
        for t in 0..s.t {
            for j in 0..s.p {
                let g = b.groups[j];
                let r = b.period_of(g, 0, t);
                let k = state.latent.z_of(i, g, r);
                for (c, x) in w.iter_mut().enumerate() {
                    *x = state.params.lambda.get(j, c, k);
                }
                y[(i * s.t + t) * s.p + j] = categorical(&w, rng) as u8;
            }
        }
    }
    Dataset::new(vec![s.categories; s.p], vec![s.t; s.n], vec![0; s.n], 1, y).unwrap()
}

/// Statistics tracked: every `alpha_k`, the listed `(j, c, k)` table entries,
/// the mean squared table entry and `alpha0`.
fn stats(state: &ChainState, entries: &[(usize, usize, usize)]) -> Vec<f64> {
    let mut out = state.params.alpha.clone();
    out.extend(entries.iter().map(|&(j, c, k)| state.params.lambda.get(j, c, k)));
    let l = state.params.lambda.as_slice();
    out.push(l.iter().map(|x| x * x).sum::<f64>() / l.len() as f64);
    out.push(state.params.alpha.iter().sum());
    out
}

pub fn stat_names(s: &GewekeSetup, entries: &[(usize, usize, usize)]) -> Vec<String> {
    let mut out: Vec<String> = (1..=s.profiles).map(|k| format!("alpha[{k}]")).collect();
    out.extend(
        entries
            .iter()
            .map(|(j, c, k)| format!("lambda[{},{},{}]", j + 1, c + 1, k + 1)),
    );
    out.push("mean lambda^2".into());
    out.push("alpha0".into());
    out
}

/// `count` table entries picked uniformly at random without repetition.
pub fn pick_entries(s: &GewekeSetup, count: usize, seed: u64) -> Vec<(usize, usize, usize)> {
    let mut rng = Streams::new(seed).rng(Purpose::Test, 99, 0);
    let mut all: Vec<(usize, usize, usize)> = (0..s.p)
        .flat_map(|j| (0..s.categories).flat_map(move |c| (0..s.profiles).map(move |k| (j, c, k))))
        .collect();
    let mut out = Vec::new();
    for _ in 0..count.min(all.len()) {
        let idx = rng.random_range(0..all.len());
        out.push(all.swap_remove(idx));
    }
    out
}

/// Compares first and second moments of the tracked statistics between
/// `draws` forward (prior) draws and `draws` successive-conditional steps.
pub fn geweke(
    s: &GewekeSetup,
    moves: &SweepMoves,
    entries: &[(usize, usize, usize)],
    draws: usize,
    seed: u64,
) -> Vec<Comparison> {
    let catalog = CutpointCatalog::new(s.t, s.periods).unwrap();
    let streams = Streams::new(seed);
    let mut rng = streams.rng(Purpose::Test, 0, 0);

    let forward: Vec<Vec<f64>> = (0..draws)
        .map(|_| stats(&prior_state(s, &catalog, &mut rng), entries))
        .collect();

    let chain_streams = streams.child(1);
    let mut state = prior_state(s, &catalog, &mut rng);
    let mut chain = Vec::with_capacity(draws);
    for l in 0..draws {
        let data = responses(s, &state, &mut rng);
        sweep(
            &data,
            &mut state,
            &catalog,
            s.prior,
            s.sigma,
            moves,
            &chain_streams,
            l as u64 + 1,
        );
        chain.push(stats(&state, entries));
    }

    let names = stat_names(s, entries);
    let mut out = Vec::new();
    for (q, name) in names.iter().enumerate() {
        for power in [1, 2] {
            let f: Vec<f64> = forward.iter().map(|v| v[q].powi(power)).collect();
            let c: Vec<f64> = chain.iter().map(|v| v[q].powi(power)).collect();
            // forward draws are independent: 50 batches give the plain standard error too
            let (mf, sf) = batch_mean_se(&f, 50);
            let (mc, sc) = batch_mean_se(&c, 50);
            out.push(Comparison {
                name: if power == 1 {
                    format!("E {name}")
                } else {
                    format!("E {name}^2")
                },
                forward: mf,
                chain: mc,
                z: (mc - mf) / (sf * sf + sc * sc).sqrt(),
            });
        }
    }
    out
}
