use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampler::DrawStore;
use crate::structure::BlockStructure;

/// Posterior modes of the discrete quantities of a (relabeled) store.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorModes {
    /// Marginal mode of each item's group label.
    pub groups: Vec<usize>,
    /// Joint mode of each `(g, c)` cut-point vector, slot order `g * C + c`.
    pub cutpoints: Vec<Vec<usize>>,
    /// Marginal mode of each `z[i, g, r]`.
    pub z: Vec<usize>,
    pub n_groups: usize,
    pub n_periods: usize,
    pub n_subpops: usize,
    pub n_profiles: usize,
    pub t_max: usize,
}

impl PosteriorModes {
    pub fn blocks(&self) -> BlockStructure {
        BlockStructure {
            n_groups: self.n_groups,
            n_periods: self.n_periods,
            n_subpops: self.n_subpops,
            t_max: self.t_max,
            groups: self.groups.clone(),
            cutpoints: self.cutpoints.clone(),
        }
    }

    pub fn z_of(&self, i: usize, g: usize, r: usize) -> usize {
        self.z[(i * self.n_groups + g) * self.n_periods + r]
    }

    pub fn n(&self) -> usize {
        self.z.len() / (self.n_groups * self.n_periods)
    }
}

/// Index of the largest count; the lowest index wins ties.
fn argmax(counts: &[u32]) -> usize {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best
}

pub fn posterior_modes(store: &DrawStore) -> Result<PosteriorModes> {
    let Some(first) = store.draws.first() else {
        return Err(Error::InsufficientDraws { required: 1, found: 0 });
    };
    let dims = &store.dims;
    let (g_n, k_n) = (dims.groups, dims.profiles);

    let p = first.blocks.groups.len();
    let mut s_counts = vec![0u32; p * g_n];
    let mut z_counts = vec![0u32; first.state.z.len() * k_n];
    let mut v_counts: Vec<HashMap<&[usize], u32>> = vec![HashMap::new(); first.blocks.cutpoints.len()];
    for draw in &store.draws {
        for (j, &g) in draw.blocks.groups.iter().enumerate() {
            s_counts[j * g_n + g] += 1;
        }
        for (b, &k) in draw.state.z.iter().enumerate() {
            z_counts[b * k_n + k] += 1;
        }
        for (slot, cuts) in v_counts.iter_mut().zip(&draw.blocks.cutpoints) {
            *slot.entry(cuts.as_slice()).or_insert(0) += 1;
        }
    }
    let cutpoints = v_counts
        .into_iter()
        .map(|slot| {
            // highest count, lexicographically smallest vector on ties
            let mut entries: Vec<(&[usize], u32)> = slot.into_iter().collect();
            entries.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
            entries[0].0.to_vec()
        })
        .collect();
    Ok(PosteriorModes {
        groups: s_counts.chunks_exact(g_n).map(argmax).collect(),
        cutpoints,
        z: z_counts.chunks_exact(k_n).map(argmax).collect(),
        n_groups: g_n,
        n_periods: dims.periods,
        n_subpops: dims.n_subpops,
        n_profiles: k_n,
        t_max: dims.t_max,
    })
}
