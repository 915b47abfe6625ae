//! The individual Gibbs and Metropolis-Hastings steps.
//!
//! Each step draws from per-entity streams keyed by the iteration number, so
//! parallel and sequential schedules give identical results.

use rayon::prelude::*;

use crate::data::Dataset;
use crate::math::ln_gamma;
use crate::params::ProfileTables;
use crate::rng::{dirichlet_into, log_categorical, standard_normal, Purpose, Streams};
use crate::structure::{BlockStructure, CutpointCatalog, PeriodMap};
use rand::Rng;

/// Log response tables and period lookup shared by the data-dependent steps.
pub struct SweepContext<'a> {
    pub dataset: &'a Dataset,
    pub blocks: &'a BlockStructure,
    pub lambda: &'a ProfileTables,
    log_lambda: Vec<f64>,
    periods: PeriodMap,
}

impl<'a> SweepContext<'a> {
    pub fn new(dataset: &'a Dataset, blocks: &'a BlockStructure, lambda: &'a ProfileTables) -> Self {
        SweepContext {
            dataset,
            blocks,
            lambda,
            log_lambda: lambda.log_values(),
            periods: blocks.period_map(),
        }
    }

    fn k(&self) -> usize {
        self.lambda.n_profiles()
    }

    /// Per-block sums of `ln lambda[j, y, k]` for subject `i`, laid out
    /// `(g * R + r) * K + k`.
    fn block_sums(&self, i: usize, acc: &mut [f64]) {
        let k_n = self.k();
        let (r_n, c_n) = (self.blocks.n_periods, self.blocks.n_subpops);
        acc.fill(0.0);
        let c = self.dataset.subpop[i];
        for t in 0..self.dataset.visits[i] {
            for (j, &y) in self.dataset.visit_row(i, t).iter().enumerate() {
                let g = self.blocks.groups[j];
                let r = self.periods.slot(g * c_n + c)[t] as usize;
                let base = self.lambda.index(j, y as usize, 0);
                let b = (g * r_n + r) * k_n;
                for (a, l) in acc[b..b + k_n].iter_mut().zip(&self.log_lambda[base..base + k_n]) {
                    *a += l;
                }
            }
        }
    }

    /// Unnormalized log conditional of every `z[i, g, r]`, laid out like
    /// `block_sums`.
    pub fn z_log_weights(&self, i: usize, pi_i: &[f64]) -> Vec<f64> {
        let k_n = self.k();
        let mut acc = vec![0.0; self.blocks.n_groups * self.blocks.n_periods * k_n];
        self.block_sums(i, &mut acc);
        for row in acc.chunks_exact_mut(k_n) {
            for (a, p) in row.iter_mut().zip(pi_i) {
                *a += p.ln();
            }
        }
        acc
    }

    /// Unnormalized log conditional of `s_j` over the `G` candidate groups.
    pub fn s_log_weights(&self, j: usize, z: &[usize], xi: &[f64]) -> Vec<f64> {
        let g_n = self.blocks.n_groups;
        let (r_n, c_n) = (self.blocks.n_periods, self.blocks.n_subpops);
        let mut w: Vec<f64> = xi.iter().map(|x| x.ln()).collect();
        let zb = g_n * r_n;
        for i in 0..self.dataset.n() {
            let c = self.dataset.subpop[i];
            let zi = &z[i * zb..(i + 1) * zb];
            for t in 0..self.dataset.visits[i] {
                let y = self.dataset.visit_row(i, t)[j] as usize;
                let base = self.lambda.index(j, y, 0);
                for (g, wg) in w.iter_mut().enumerate() {
                    let r = self.periods.slot(g * c_n + c)[t] as usize;
                    *wg += self.log_lambda[base + zi[g * r_n + r]];
                }
            }
        }
        w
    }

    /// Category counts of item `j` by the profile its responses would take if
    /// the item were in group `g`: `counts[c * K + k]`.
    fn item_counts(&self, j: usize, g: usize, z: &[usize], counts: &mut [f64]) {
        let k_n = self.k();
        let (r_n, c_n) = (self.blocks.n_periods, self.blocks.n_subpops);
        let zb = self.blocks.n_groups * r_n;
        counts.fill(0.0);
        for i in 0..self.dataset.n() {
            let slot = self.periods.slot(g * c_n + self.dataset.subpop[i]);
            let zg = &z[i * zb + g * r_n..i * zb + (g + 1) * r_n];
            for t in 0..self.dataset.visits[i] {
                let y = self.dataset.visit_row(i, t)[j] as usize;
                counts[y * k_n + zg[slot[t] as usize]] += 1.0;
            }
        }
    }

    /// Log conditional of `s_j` with `lambda[j]` integrated out under its
    /// `Dirichlet(1)` prior.
    pub fn s_collapsed_log_weights(&self, j: usize, z: &[usize], xi: &[f64]) -> Vec<f64> {
        let k_n = self.k();
        let d = self.dataset.categories[j];
        let mut counts = vec![0.0; d * k_n];
        xi.iter()
            .enumerate()
            .map(|(g, x)| {
                self.item_counts(j, g, z, &mut counts);
                x.ln() + dirichlet_multinomial_ln(&counts, d, k_n)
            })
            .collect()
    }

    /// Unnormalized log conditional of the cut-points of slot `(g, c)` over
    /// every catalog entry. Uses current group labels `blocks.groups`.
    pub fn cutpoint_log_weights(
        &self,
        g: usize,
        c: usize,
        z: &[usize],
        kappa: &[f64],
        catalog: &CutpointCatalog,
    ) -> Vec<f64> {
        let mut w: Vec<f64> = kappa.iter().map(|x| x.ln()).collect();
        let members: Vec<usize> = (0..self.dataset.p()).filter(|&j| self.blocks.groups[j] == g).collect();
        if members.is_empty() {
            return w;
        }
        let r_n = self.blocks.n_periods;
        let t_max = self.dataset.t_max;
        let zb = self.blocks.n_groups * r_n;
        let bounds = period_bounds(catalog);
        // prefix[r * (t_max + 1) + t] = sum over visits before t of the block term under period r
        let mut prefix = vec![0.0; r_n * (t_max + 1)];
        for i in (0..self.dataset.n()).filter(|&i| self.dataset.subpop[i] == c) {
            let ti = self.dataset.visits[i];
            let zg = &z[i * zb + g * r_n..i * zb + (g + 1) * r_n];
            for r in 0..r_n {
                let row = &mut prefix[r * (t_max + 1)..(r + 1) * (t_max + 1)];
                let k = zg[r];
                for t in 0..ti {
                    let y = self.dataset.visit_row(i, t);
                    let mut e = 0.0;
                    for &j in &members {
                        e += self.log_lambda[self.lambda.index(j, y[j] as usize, k)];
                    }
                    row[t + 1] = row[t] + e;
                }
            }
            for (m, wm) in w.iter_mut().enumerate() {
                let b = &bounds[m * (r_n + 1)..(m + 1) * (r_n + 1)];
                for r in 0..r_n {
                    let row = &prefix[r * (t_max + 1)..];
                    *wm += row[b[r + 1].min(ti)] - row[b[r].min(ti)];
                }
            }
        }
        w
    }
}

/// Flattened `(0, h_1, .., h_{R-1}, t_max)` per catalog entry.
fn period_bounds(catalog: &CutpointCatalog) -> Vec<usize> {
    let mut out = Vec::with_capacity(catalog.len() * (catalog.n_periods() + 1));
    for h in catalog.entries() {
        out.push(0);
        out.extend_from_slice(h);
        out.push(catalog.t_max());
    }
    out
}

/// Exact category counts attributed to each `(j, k)`, layout of `ProfileTables`.
pub fn lambda_counts(dataset: &Dataset, blocks: &BlockStructure, n_profiles: usize, z: &[usize]) -> ProfileTables {
    let mut counts = ProfileTables::filled(&dataset.categories, n_profiles, 0.0);
    let periods = blocks.period_map();
    let (r_n, c_n) = (blocks.n_periods, blocks.n_subpops);
    let zb = blocks.n_groups * r_n;
    for i in 0..dataset.n() {
        let c = dataset.subpop[i];
        let zi = &z[i * zb..(i + 1) * zb];
        for t in 0..dataset.visits[i] {
            for (j, &y) in dataset.visit_row(i, t).iter().enumerate() {
                let g = blocks.groups[j];
                let r = periods.slot(g * c_n + c)[t] as usize;
                let idx = counts.index(j, y as usize, zi[g * r_n + r]);
                counts.as_mut_slice()[idx] += 1.0;
            }
        }
    }
    counts
}

/// `lambda[j, ., k] ~ Dirichlet(1 + counts)` for every item and profile.
pub fn update_lambda(
    dataset: &Dataset,
    blocks: &BlockStructure,
    n_profiles: usize,
    z: &[usize],
    streams: &Streams,
    iteration: u64,
) -> ProfileTables {
    let counts = lambda_counts(dataset, blocks, n_profiles, z);
    let mut lambda = counts.clone();
    let k_n = n_profiles;
    let columns: Vec<(usize, usize, Vec<f64>)> = (0..dataset.p())
        .flat_map(|j| (0..k_n).map(move |k| (j, k)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(j, k)| {
            let shape: Vec<f64> = counts.column(j, k).iter().map(|n| 1.0 + n).collect();
            let mut rng = streams.rng(Purpose::Lambda, iteration, ((j as u64) << 16) | k as u64);
            let mut out = vec![0.0; shape.len()];
            dirichlet_into(&shape, &mut rng, &mut out);
            (j, k, out)
        })
        .collect();
    for (j, k, col) in columns {
        for (c, v) in col.into_iter().enumerate() {
            lambda.set(j, c, k, v);
        }
    }
    lambda
}

/// `pi_i ~ Dirichlet(alpha + membership counts of subject i)`.
pub fn update_pi(z: &[usize], blocks_per_subject: usize, alpha: &[f64], streams: &Streams, iteration: u64) -> Vec<f64> {
    let k_n = alpha.len();
    let n = z.len() / blocks_per_subject.max(1);
    let mut pi = vec![0.0; n * k_n];
    pi.par_chunks_mut(k_n).enumerate().for_each_init(
        || vec![0.0; k_n],
        |shape, (i, out)| {
            shape.copy_from_slice(alpha);
            for &k in &z[i * blocks_per_subject..(i + 1) * blocks_per_subject] {
                shape[k] += 1.0;
            }
            let mut rng = streams.rng(Purpose::Scores, iteration, i as u64);
            dirichlet_into(shape, &mut rng, out);
        },
    );
    pi
}

/// Draws every blockwise membership from its normalized conditional.
pub fn update_z(ctx: &SweepContext<'_>, pi: &[f64], streams: &Streams, iteration: u64) -> Vec<usize> {
    let k_n = ctx.k();
    let zb = ctx.blocks.n_groups * ctx.blocks.n_periods;
    let mut z = vec![0usize; ctx.dataset.n() * zb];
    z.par_chunks_mut(zb.max(1)).enumerate().for_each_init(
        || (vec![0.0; zb * k_n], vec![0.0; k_n], vec![0.0; k_n]),
        |(acc, log_pi, scratch), (i, zi)| {
            ctx.block_sums(i, acc);
            for (lp, p) in log_pi.iter_mut().zip(&pi[i * k_n..(i + 1) * k_n]) {
                *lp = p.ln();
            }
            let mut rng = streams.rng(Purpose::Membership, iteration, i as u64);
            for (b, zv) in zi.iter_mut().enumerate() {
                let w = &mut acc[b * k_n..(b + 1) * k_n];
                for (wk, lp) in w.iter_mut().zip(log_pi.iter()) {
                    *wk += lp;
                }
                *zv = log_categorical(w, scratch, &mut rng);
            }
        },
    );
    z
}

/// Log weight of giving group `g`'s profile `k` the new label `perm[k]`, for
/// every permutation in `perms`, with the membership scores integrated out:
/// `sum_i sum_k ln Gamma(alpha_k + n'_ik)` where `n'` are the relabeled counts.
pub fn group_label_log_weights(
    z: &[usize],
    alpha: &[f64],
    n_groups: usize,
    n_periods: usize,
    g: usize,
    perms: &[Vec<usize>],
) -> Vec<f64> {
    let k_n = alpha.len();
    let zb = n_groups * n_periods;
    // table[k * (zb + 1) + m] = ln Gamma(alpha_k + m)
    let table: Vec<f64> = alpha
        .iter()
        .flat_map(|a| (0..=zb).map(move |m| ln_gamma(a + m as f64)))
        .collect();
    let n = z.len() / zb.max(1);
    // other[i * K + k]: blocks outside g with label k; own[i * K + k]: blocks of g
    let mut other = vec![0usize; n * k_n];
    let mut own = vec![0usize; n * k_n];
    for (i, zi) in z.chunks_exact(zb).enumerate() {
        for (b, &k) in zi.iter().enumerate() {
            if b / n_periods == g {
                own[i * k_n + k] += 1;
            } else {
                other[i * k_n + k] += 1;
            }
        }
    }
    perms
        .iter()
        .map(|perm| {
            let mut total = 0.0;
            for i in 0..n {
                let (o, q) = (&other[i * k_n..(i + 1) * k_n], &own[i * k_n..(i + 1) * k_n]);
                for k in 0..k_n {
                    let to = perm[k];
                    total += table[to * (zb + 1) + o[to] + q[k]];
                }
            }
            total
        })
        .collect()
}

/// Gibbs move over the relabelings of each group's profiles. Response
/// likelihood and the `lambda` prior are invariant, so only the membership
/// counts weigh in, with the scores integrated out; the scores must be
/// redrawn afterwards. Relabels `z` and the member items' `lambda` in place.
pub fn update_group_labels(
    blocks: &BlockStructure,
    lambda: &mut ProfileTables,
    z: &mut [usize],
    alpha: &[f64],
    perms: &[Vec<usize>],
    streams: &Streams,
    iteration: u64,
) {
    let (g_n, r_n) = (blocks.n_groups, blocks.n_periods);
    let k_n = lambda.n_profiles();
    if k_n < 2 || g_n < 2 {
        return;
    }
    for g in 0..g_n {
        let w = group_label_log_weights(z, alpha, g_n, r_n, g, perms);
        let mut scratch = vec![0.0; w.len()];
        let mut rng = streams.rng(Purpose::Labels, iteration, g as u64);
        let perm = &perms[log_categorical(&w, &mut scratch, &mut rng)];
        if perm.iter().enumerate().all(|(k, &q)| k == q) {
            continue;
        }
        for zi in z.chunks_exact_mut(g_n * r_n) {
            for zv in &mut zi[g * r_n..(g + 1) * r_n] {
                *zv = perm[*zv];
            }
        }
        let mut row = vec![0.0; k_n];
        for j in (0..blocks.groups.len()).filter(|&j| blocks.groups[j] == g) {
            for c in 0..lambda.categories()[j] {
                row.copy_from_slice(lambda.row(j, c));
                for k in 0..k_n {
                    lambda.set(j, c, perm[k], row[k]);
                }
            }
        }
    }
}

/// Draws every item's group label.
pub fn update_s(ctx: &SweepContext<'_>, z: &[usize], xi: &[f64], streams: &Streams, iteration: u64) -> Vec<usize> {
    (0..ctx.dataset.p())
        .into_par_iter()
        .map(|j| {
            let w = ctx.s_log_weights(j, z, xi);
            let mut scratch = vec![0.0; w.len()];
            let mut rng = streams.rng(Purpose::Groups, iteration, j as u64);
            log_categorical(&w, &mut scratch, &mut rng)
        })
        .collect()
}

/// Joint draw of every `(s_j, lambda[j])`: the group from its conditional with
/// `lambda[j]` integrated out, then `lambda[j]` given the new group. Returns
/// the new labels and tables.
pub fn update_s_collapsed(
    ctx: &SweepContext<'_>,
    z: &[usize],
    xi: &[f64],
    streams: &Streams,
    iteration: u64,
) -> (Vec<usize>, ProfileTables) {
    let k_n = ctx.k();
    let drawn: Vec<(usize, Vec<f64>)> = (0..ctx.dataset.p())
        .into_par_iter()
        .map(|j| {
            let w = ctx.s_collapsed_log_weights(j, z, xi);
            let mut scratch = vec![0.0; w.len()];
            let mut rng = streams.rng(Purpose::Groups, iteration, j as u64);
            let g = log_categorical(&w, &mut scratch, &mut rng);
            let d = ctx.dataset.categories[j];
            let mut counts = vec![0.0; d * k_n];
            ctx.item_counts(j, g, z, &mut counts);
            let mut table = vec![0.0; d * k_n];
            let mut shape = vec![0.0; d];
            let mut col = vec![0.0; d];
            for k in 0..k_n {
                for c in 0..d {
                    shape[c] = 1.0 + counts[c * k_n + k];
                }
                dirichlet_into(&shape, &mut rng, &mut col);
                for c in 0..d {
                    table[c * k_n + k] = col[c];
                }
            }
            (g, table)
        })
        .collect();
    let mut lambda = ctx.lambda.clone();
    let mut groups = Vec::with_capacity(drawn.len());
    for (j, (g, table)) in drawn.into_iter().enumerate() {
        groups.push(g);
        let start = lambda.index(j, 0, 0);
        lambda.as_mut_slice()[start..start + table.len()].copy_from_slice(&table);
    }
    (groups, lambda)
}

/// `ln` of the Dirichlet-multinomial evidence of `d x K` counts under
/// independent `Dirichlet(1)` columns, up to a constant.
fn dirichlet_multinomial_ln(counts: &[f64], d: usize, k_n: usize) -> f64 {
    let mut total = 0.0;
    for k in 0..k_n {
        let mut col = 0.0;
        for c in 0..d {
            let n = counts[c * k_n + k];
            total += ln_gamma(1.0 + n);
            col += n;
        }
        total -= ln_gamma(d as f64 + col);
    }
    total
}

/// Draws the catalog index of every `(g, c)` cut-point vector.
pub fn update_cutpoints(
    ctx: &SweepContext<'_>,
    z: &[usize],
    kappa: &[Vec<f64>],
    catalog: &CutpointCatalog,
    streams: &Streams,
    iteration: u64,
) -> Vec<usize> {
    let c_n = ctx.blocks.n_subpops;
    (0..ctx.blocks.n_groups * c_n)
        .into_par_iter()
        .map(|gc| {
            if catalog.len() == 1 {
                return 0;
            }
            let w = ctx.cutpoint_log_weights(gc / c_n, gc % c_n, z, &kappa[gc], catalog);
            let mut scratch = vec![0.0; w.len()];
            let mut rng = streams.rng(Purpose::Cutpoints, iteration, gc as u64);
            log_categorical(&w, &mut scratch, &mut rng)
        })
        .collect()
}

/// `xi ~ Dirichlet(1 + group sizes)`, `kappa[g, c] ~ Dirichlet(1 + indicator of the current entry)`.
pub fn update_xi_kappa(
    groups: &[usize],
    n_groups: usize,
    cut_index: &[usize],
    catalog_len: usize,
    streams: &Streams,
    iteration: u64,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut shape = vec![1.0; n_groups];
    for &g in groups {
        shape[g] += 1.0;
    }
    let mut xi = vec![0.0; n_groups];
    dirichlet_into(&shape, &mut streams.rng(Purpose::Proportions, iteration, 0), &mut xi);
    let kappa = cut_index
        .iter()
        .enumerate()
        .map(|(gc, &m)| {
            let mut shape = vec![1.0; catalog_len];
            shape[m] += 1.0;
            let mut out = vec![0.0; catalog_len];
            let mut rng = streams.rng(Purpose::Proportions, iteration, 1 + gc as u64);
            dirichlet_into(&shape, &mut rng, &mut out);
            out
        })
        .collect();
    (xi, kappa)
}

/// Hyperparameters of the concentration update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaPrior {
    pub a: f64,
    pub b: f64,
}

/// Column sums `sum_i ln pi[i, k]`.
pub fn sum_log_pi(pi: &[f64], n_profiles: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_profiles];
    for row in pi.chunks_exact(n_profiles) {
        for (o, p) in out.iter_mut().zip(row) {
            *o += p.ln();
        }
    }
    out
}

/// Log acceptance ratio of moving from `alpha` to `proposal`, including the
/// lognormal proposal correction.
pub fn alpha_log_ratio(alpha: &[f64], proposal: &[f64], sum_log_pi: &[f64], n: usize, prior: AlphaPrior) -> f64 {
    let a0: f64 = alpha.iter().sum();
    let p0: f64 = proposal.iter().sum();
    let mut lr = -prior.b * (p0 - a0) + (prior.a - 1.0) * (p0.ln() - a0.ln());
    let mut gamma_terms = ln_gamma(p0) - ln_gamma(a0);
    for k in 0..alpha.len() {
        lr += proposal[k].ln() - alpha[k].ln();
        gamma_terms += ln_gamma(alpha[k]) - ln_gamma(proposal[k]);
        lr += (proposal[k] - alpha[k]) * sum_log_pi[k];
    }
    lr + n as f64 * gamma_terms
}

/// One random-walk step on `ln alpha`. Returns the new value and whether it moved.
pub fn update_alpha_mh(
    alpha: &[f64],
    sum_log_pi: &[f64],
    n: usize,
    prior: AlphaPrior,
    sigma: f64,
    streams: &Streams,
    iteration: u64,
) -> (Vec<f64>, bool) {
    let mut rng = streams.rng(Purpose::Alpha, iteration, 0);
    let proposal: Vec<f64> = alpha
        .iter()
        .map(|a| a * (sigma * standard_normal(&mut rng)).exp())
        .collect();
    let lr = alpha_log_ratio(alpha, &proposal, sum_log_pi, n, prior);
    let u: f64 = rng.random();
    if proposal.iter().all(|a| a.is_finite() && *a > 0.0) && u.ln() < lr {
        (proposal, true)
    } else {
        (alpha.to_vec(), false)
    }
}
