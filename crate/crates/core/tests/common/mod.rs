#![allow(dead_code)]

pub mod geweke;

use bm3::data::MISSING;
use bm3::rng::{categorical, dirichlet, Purpose, Streams};
use bm3::structure::{BlockStructure, CutpointCatalog};
use bm3::{Dataset, ProfileTables};
use rand::Rng;

/// Dimensions of a random small instance.
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub n: usize,
    pub p: usize,
    pub t_max: usize,
    pub groups: usize,
    pub periods: usize,
    pub profiles: usize,
    pub subpops: usize,
    pub balanced: bool,
}

pub struct Instance {
    pub data: Dataset,
    pub blocks: BlockStructure,
    pub lambda: ProfileTables,
    /// `pi[i]` is subject `i`'s score vector.
    pub pi: Vec<Vec<f64>>,
    /// `z[(i * G + g) * R + r]`.
    pub z: Vec<usize>,
}

pub fn random_tables<R: Rng>(categories: &[usize], k_n: usize, rng: &mut R) -> ProfileTables {
    let tables: Vec<Vec<Vec<f64>>> = categories
        .iter()
        .map(|&d| {
            let cols: Vec<Vec<f64>> = (0..k_n).map(|_| dirichlet(&vec![1.0; d], rng)).collect();
            (0..d).map(|c| (0..k_n).map(|k| cols[k][c]).collect()).collect()
        })
        .collect();
    ProfileTables::from_tables(&tables).unwrap()
}

pub fn random_instance(shape: Shape, seed: u64) -> Instance {
    let mut rng = Streams::new(seed).rng(Purpose::Test, 0, 0);
    let Shape {
        n,
        p,
        t_max,
        groups,
        periods,
        profiles,
        subpops,
        balanced,
    } = shape;
    let categories: Vec<usize> = (0..p).map(|_| rng.random_range(2..=4)).collect();
    let mut visits: Vec<usize> = (0..n)
        .map(|_| if balanced { t_max } else { rng.random_range(1..=t_max) })
        .collect();
    visits[0] = t_max;
    let subpop: Vec<usize> = (0..n)
        .map(|i| if i < subpops { i } else { rng.random_range(0..subpops) })
        .collect();
    let mut y = vec![MISSING; n * t_max * p];
    for i in 0..n {
        for t in 0..visits[i] {
            for j in 0..p {
                y[(i * t_max + t) * p + j] = rng.random_range(0..categories[j]) as u8;
            }
        }
    }
    let data = Dataset::new(categories.clone(), visits, subpop, subpops, y).unwrap();
    let catalog = CutpointCatalog::new(t_max, periods).unwrap();
    let blocks = BlockStructure {
        n_groups: groups,
        n_periods: periods,
        n_subpops: subpops,
        t_max,
        groups: (0..p).map(|_| rng.random_range(0..groups)).collect(),
        cutpoints: (0..groups * subpops)
            .map(|_| catalog.get(rng.random_range(0..catalog.len())).to_vec())
            .collect(),
    };
    let lambda = random_tables(&categories, profiles, &mut rng);
    let pi: Vec<Vec<f64>> = (0..n).map(|_| dirichlet(&vec![1.0; profiles], &mut rng)).collect();
    let z = (0..n * groups * periods)
        .map(|_| rng.random_range(0..profiles))
        .collect();
    Instance {
        data,
        blocks,
        lambda,
        pi,
        z,
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Draws a categorical index from `weights` (not necessarily normalized).
pub fn pick<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    categorical(weights, rng)
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Mean and batch-means standard error of an autocorrelated series.
pub fn batch_mean_se(xs: &[f64], batches: usize) -> (f64, f64) {
    let size = xs.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| xs[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let m = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (xs.iter().sum::<f64>() / xs.len() as f64, (var / batches as f64).sqrt())
}

/// Latent class mixture: one profile shared by every response of subject `i`.
pub fn latent_class_loglik(inst: &Instance, i: usize) -> f64 {
    let terms: Vec<f64> = (0..inst.lambda.n_profiles())
        .map(|k| {
            let mut s = inst.pi[i][k].ln();
            for t in 0..inst.data.visits[i] {
                for j in 0..inst.data.p() {
                    let y = inst.data.response(i, j, t).unwrap();
                    s += inst.lambda.get(j, y, k).ln();
                }
            }
            s
        })
        .collect();
    bm3::math::log_sum_exp(&terms)
}

/// Grade of membership: every observed cell draws its own profile from `pi_i`.
pub fn grade_of_membership_loglik(inst: &Instance, i: usize) -> f64 {
    let mut total = 0.0;
    for t in 0..inst.data.visits[i] {
        for j in 0..inst.data.p() {
            let y = inst.data.response(i, j, t).unwrap();
            total += (0..inst.lambda.n_profiles())
                .map(|k| inst.pi[i][k] * inst.lambda.get(j, y, k))
                .sum::<f64>()
                .ln();
        }
    }
    total
}

/// One group per item and one period per visit.
pub fn cellwise_blocks(inst: &mut Instance) {
    let (p, t) = (inst.data.p(), inst.blocks.t_max);
    let c_n = inst.blocks.n_subpops;
    inst.blocks.n_groups = p;
    inst.blocks.n_periods = t;
    inst.blocks.groups = (0..p).collect();
    inst.blocks.cutpoints = vec![(1..t).collect(); p * c_n];
}
