//! Post-hoc label alignment of stored draws.

use crate::math::permutations;

use super::store::{Draw, DrawStore};

/// Exhaustive matching is used up to this many labels; larger label sets are
/// left as sampled.
pub const MAX_ALIGNED_LABELS: usize = 8;

/// Profile `k` of the result is profile `perm[k]` of the input.
pub fn apply_profile_permutation(draw: &mut Draw, perm: &[usize]) {
    let k_n = perm.len();
    draw.params.lambda = draw.params.lambda.permute_profiles(perm);
    let alpha = draw.params.alpha.clone();
    for k in 0..k_n {
        draw.params.alpha[k] = alpha[perm[k]];
    }
    for row in draw.state.pi.chunks_exact_mut(k_n) {
        let old = row.to_vec();
        for k in 0..k_n {
            row[k] = old[perm[k]];
        }
    }
    let inv = inverse(perm);
    for z in draw.state.z.iter_mut() {
        *z = inv[*z];
    }
}

/// Group `g` of the result is group `perm[g]` of the input.
pub fn apply_group_permutation(draw: &mut Draw, perm: &[usize]) {
    let g_n = perm.len();
    let inv = inverse(perm);
    for s in draw.blocks.groups.iter_mut() {
        *s = inv[*s];
    }
    let c_n = draw.blocks.n_subpops;
    let old_cuts = draw.blocks.cutpoints.clone();
    let old_kappa = draw.params.kappa.clone();
    let old_xi = draw.params.xi.clone();
    for g in 0..g_n {
        draw.params.xi[g] = old_xi[perm[g]];
        for c in 0..c_n {
            draw.blocks.cutpoints[g * c_n + c] = old_cuts[perm[g] * c_n + c].clone();
            draw.params.kappa[g * c_n + c] = old_kappa[perm[g] * c_n + c].clone();
        }
    }
    let r_n = draw.blocks.n_periods;
    for zi in draw.state.z.chunks_exact_mut(g_n * r_n) {
        let old = zi.to_vec();
        for g in 0..g_n {
            zi[g * r_n..(g + 1) * r_n].copy_from_slice(&old[perm[g] * r_n..(perm[g] + 1) * r_n]);
        }
    }
}

fn inverse(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (k, &p) in perm.iter().enumerate() {
        inv[p] = k;
    }
    inv
}

/// Squared distance between reference profile `k` and draw profile `k2`,
/// over all items and categories: `cost[k * K + k2]`.
fn profile_costs(reference: &[f64], values: &[f64], k_n: usize) -> Vec<f64> {
    let mut cost = vec![0.0; k_n * k_n];
    for (rr, rv) in reference.chunks_exact(k_n).zip(values.chunks_exact(k_n)) {
        for k in 0..k_n {
            for k2 in 0..k_n {
                let d = rv[k2] - rr[k];
                cost[k * k_n + k2] += d * d;
            }
        }
    }
    cost
}

/// Lexicographically first permutation minimizing `sum_k cost[k][perm[k]]`.
fn best_permutation(perms: &[Vec<usize>], cost: &[f64], k_n: usize) -> usize {
    let mut best = 0;
    let mut best_cost = f64::INFINITY;
    for (q, perm) in perms.iter().enumerate() {
        let c: f64 = (0..k_n).map(|k| cost[k * k_n + perm[k]]).sum();
        if c < best_cost {
            best_cost = c;
            best = q;
        }
    }
    best
}

/// Aligns profile labels to a running-mean reference and group labels to
/// running per-item label counts. Every draw's likelihood is unchanged.
pub fn relabel_draws(mut store: DrawStore) -> DrawStore {
    align_profiles(&mut store.draws);
    align_groups(&mut store.draws);
    store
}

pub fn align_profiles(draws: &mut [Draw]) {
    let Some(first) = draws.first() else { return };
    let k_n = first.params.lambda.n_profiles();
    if !(2..=MAX_ALIGNED_LABELS).contains(&k_n) {
        return;
    }
    let perms = permutations(k_n);
    let mut reference = first.params.lambda.as_slice().to_vec();
    for (l, draw) in draws.iter_mut().enumerate() {
        let cost = profile_costs(&reference, draw.params.lambda.as_slice(), k_n);
        let perm = &perms[best_permutation(&perms, &cost, k_n)];
        if perm.iter().enumerate().any(|(k, &p)| k != p) {
            apply_profile_permutation(draw, perm);
        }
        let w = 1.0 / (l as f64 + 1.0);
        for (r, v) in reference.iter_mut().zip(draw.params.lambda.as_slice()) {
            *r += w * (v - *r);
        }
    }
}

pub fn align_groups(draws: &mut [Draw]) {
    let Some(first) = draws.first() else { return };
    let g_n = first.blocks.n_groups;
    if !(2..=MAX_ALIGNED_LABELS).contains(&g_n) {
        return;
    }
    let p = first.blocks.groups.len();
    let perms = permutations(g_n);
    // counts[j * G + g]: earlier draws putting item j in group g
    let mut counts = vec![0u64; p * g_n];
    for draw in draws.iter_mut() {
        let mut best = 0;
        let mut best_score = None;
        for (q, perm) in perms.iter().enumerate() {
            // new label g holds old group perm[g]
            let inv = inverse(perm);
            let score: u64 = draw
                .blocks
                .groups
                .iter()
                .enumerate()
                .map(|(j, &s)| counts[j * g_n + inv[s]])
                .sum();
            if best_score.is_none_or(|b| score > b) {
                best_score = Some(score);
                best = q;
            }
        }
        let perm = &perms[best];
        if perm.iter().enumerate().any(|(g, &h)| g != h) {
            apply_group_permutation(draw, perm);
        }
        for (j, &s) in draw.blocks.groups.iter().enumerate() {
            counts[j * g_n + s] += 1;
        }
    }
}

/// Concatenates chains and aligns every draw to the first chain's labels.
pub fn pool_chains(stores: Vec<DrawStore>) -> Option<DrawStore> {
    let mut iter = stores.into_iter();
    let mut pooled = iter.next()?;
    for store in iter {
        pooled.draws.extend(store.draws);
        pooled.accepted.extend(store.accepted);
        pooled.loglik.extend(store.loglik);
    }
    Some(relabel_draws(pooled))
}
