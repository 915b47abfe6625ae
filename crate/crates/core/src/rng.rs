//! Reproducible random streams and the handful of distributions the sampler needs.
//!
//! Every random draw comes from a ChaCha8 generator keyed by
//! `(master seed, purpose, iteration)` with the entity index (subject, item,
//! slot) as its stream id. Draws therefore do not depend on how work is
//! scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for. The discriminant is part of the key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Init = 1,
    Lambda = 2,
    Membership = 3,
    Groups = 4,
    Cutpoints = 5,
    Proportions = 6,
    Alpha = 7,
    Simulate = 8,
    Predictive = 9,
    Replicate = 10,
    Test = 11,
    Scores = 12,
    Labels = 13,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    seed: u64,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Streams { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent family of streams for a numbered sub-run (chain, replicate).
    pub fn child(&self, index: u64) -> Streams {
        Streams {
            seed: splitmix64(self.seed ^ splitmix64(index.wrapping_add(0x9e37_79b9))),
        }
    }

    pub fn rng(&self, purpose: Purpose, iteration: u64, entity: u64) -> StreamRng {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&iteration.to_le_bytes());
        key[16..24].copy_from_slice(&(purpose as u64).to_le_bytes());
        key[24..32].copy_from_slice(b"bm3-strm");
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(entity);
        rng
    }
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// `ln X` for `X ~ Gamma(shape, 1)`. Small shapes go through the
/// `Gamma(shape + 1) * U^(1/shape)` identity so the result never underflows.
pub fn log_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        Gamma::new(shape, 1.0).expect("positive shape").sample(rng).ln()
    } else {
        let boosted = Gamma::new(shape + 1.0, 1.0).expect("positive shape").sample(rng);
        let u: f64 = rng.random::<f64>();
        boosted.ln() + u.max(f64::MIN_POSITIVE).ln() / shape
    }
}

/// Draws from `Dirichlet(alpha)` into `out`. Entries are kept strictly positive.
pub fn dirichlet_into<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R, out: &mut [f64]) {
    let mut max = f64::NEG_INFINITY;
    for (o, &a) in out.iter_mut().zip(alpha) {
        *o = log_gamma_variate(a, rng);
        max = max.max(*o);
    }
    let mut total = 0.0;
    for o in out.iter_mut() {
        *o = (*o - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o = (*o / total).max(f64::MIN_POSITIVE);
    }
}

pub fn dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; alpha.len()];
    dirichlet_into(alpha, rng, &mut out);
    out
}

/// Index drawn with probability proportional to `weights` (nonnegative).
pub fn categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, &w) in weights.iter().enumerate() {
        if u < w {
            return k;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Normalized probabilities from unnormalized log weights, in place.
pub fn normalize_log_weights(log_weights: &mut [f64]) {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for w in log_weights.iter_mut() {
        *w = (*w - max).exp();
        total += *w;
    }
    for w in log_weights.iter_mut() {
        *w /= total;
    }
}

/// Index drawn from unnormalized log weights; `scratch` is overwritten.
pub fn log_categorical<R: Rng + ?Sized>(log_weights: &[f64], scratch: &mut [f64], rng: &mut R) -> usize {
    scratch.copy_from_slice(log_weights);
    normalize_log_weights(scratch);
    categorical(scratch, rng)
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_keyed() {
        let s = Streams::new(7);
        let a: u64 = s.rng(Purpose::Lambda, 3, 1).random();
        let b: u64 = s.rng(Purpose::Lambda, 3, 1).random();
        let c: u64 = s.rng(Purpose::Lambda, 3, 2).random();
        let d: u64 = s.rng(Purpose::Groups, 3, 1).random();
        let e: u64 = s.child(1).rng(Purpose::Lambda, 3, 1).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
        assert_ne!(a, e);
    }

    #[test]
    fn dirichlet_mean() {
        let mut rng = Streams::new(1).rng(Purpose::Test, 0, 0);
        let alpha = [4.0, 1.0, 2.0];
        let n = 100_000;
        let mut sum = [0.0; 3];
        for _ in 0..n {
            let d = dirichlet(&alpha, &mut rng);
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for k in 0..3 {
                sum[k] += d[k];
            }
        }
        for k in 0..3 {
            assert!((sum[k] / n as f64 - alpha[k] / 7.0).abs() < 0.005);
        }
    }

    #[test]
    fn small_shapes_stay_positive() {
        let mut rng = Streams::new(2).rng(Purpose::Test, 0, 0);
        for _ in 0..1000 {
            let d = dirichlet(&[0.01, 0.01, 0.01], &mut rng);
            assert!(d.iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn categorical_frequencies() {
        let mut rng = Streams::new(3).rng(Purpose::Test, 0, 0);
        let mut counts = [0usize; 3];
        let mut scratch = [0.0; 3];
        let logw = [0.2f64.ln(), 0.5f64.ln(), 0.3f64.ln()];
        for _ in 0..100_000 {
            counts[log_categorical(&logw, &mut scratch, &mut rng)] += 1;
        }
        assert!((counts[1] as f64 / 1e5 - 0.5).abs() < 0.006);
        assert_eq!(categorical(&[0.0, 1.0], &mut rng), 1);
    }
}
