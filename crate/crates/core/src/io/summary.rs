use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::data::Dataset;
use crate::diagnostics::{dominates, posterior_modes, subtype_table, waic, PosteriorModes, SubtypeTable, Waic};
use crate::error::{Error, Result};
use crate::params::ProfileTables;
use crate::sampler::DrawStore;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryDims {
    pub n: usize,
    pub p: usize,
    pub t_max: usize,
    pub groups: usize,
    pub periods: usize,
    pub profiles: usize,
    pub subpops: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutpointSummary {
    pub group: usize,
    pub subpop: usize,
    /// Last visit of every period but the final one (1-based).
    pub cuts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubtypeSummary {
    pub key: Vec<usize>,
    pub count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub external_mean: Option<f64>,
    /// Ranks (1-based, within the listed rows) of keys this key dominates.
    pub dominates: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodSubtypes {
    pub period: usize,
    pub distinct: usize,
    pub rows: Vec<SubtypeSummary>,
}

/// Everything `summarize` reports. Labels are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub dims: SummaryDims,
    pub draws: usize,
    pub item_groups: Vec<usize>,
    pub cutpoints: Vec<CutpointSummary>,
    /// `lambda_mean[j][c][k]`.
    pub lambda_mean: Vec<Vec<Vec<f64>>>,
    pub alpha_mean: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub waic: Option<Waic>,
    pub acceptance_rate: f64,
    /// Empty for single-profile fits.
    pub subtypes: Vec<PeriodSubtypes>,
}

fn subtype_rows(table: &SubtypeTable, top: usize) -> PeriodSubtypes {
    let rows = table.top(top);
    PeriodSubtypes {
        period: table.period + 1,
        distinct: table.rows.len(),
        rows: rows
            .iter()
            .map(|r| SubtypeSummary {
                key: r.key.iter().map(|k| k + 1).collect(),
                count: r.count,
                external_mean: r.external_mean,
                dominates: rows
                    .iter()
                    .enumerate()
                    .filter(|(_, o)| dominates(&r.key, &o.key))
                    .map(|(b, _)| b + 1)
                    .collect(),
            })
            .collect(),
    }
}

/// Builds the summary of a relabeled store. `dataset` enables the WAIC entry
/// and must be the data the store was fitted to.
pub fn build_summary(
    store: &DrawStore,
    dataset: Option<&Dataset>,
    external: Option<&[f64]>,
    top_subtypes: usize,
) -> Result<(Summary, PosteriorModes)> {
    let modes = posterior_modes(store)?;
    let dims = &store.dims;
    let mean = ProfileTables::from_flat(&dims.categories, dims.profiles, store.mean_lambda())?;
    let lambda_mean = (0..dims.p())
        .map(|j| (0..dims.categories[j]).map(|c| mean.row(j, c).to_vec()).collect())
        .collect();
    let waic = match dataset {
        Some(d) if store.len() >= 2 => Some(waic(store, d)?),
        _ => None,
    };
    let subtypes = if dims.profiles > 1 {
        (0..dims.periods)
            .map(|r| subtype_table(&modes, r, external).map(|t| subtype_rows(&t, top_subtypes)))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let summary = Summary {
        dims: SummaryDims {
            n: dims.n,
            p: dims.p(),
            t_max: dims.t_max,
            groups: dims.groups,
            periods: dims.periods,
            profiles: dims.profiles,
            subpops: dims.n_subpops,
        },
        draws: store.len(),
        item_groups: modes.groups.iter().map(|g| g + 1).collect(),
        cutpoints: modes
            .cutpoints
            .iter()
            .enumerate()
            .map(|(gc, cuts)| CutpointSummary {
                group: gc / dims.n_subpops + 1,
                subpop: gc % dims.n_subpops + 1,
                cuts: cuts.clone(),
            })
            .collect(),
        lambda_mean,
        alpha_mean: store.mean_alpha(),
        waic,
        acceptance_rate: store.acceptance_rate(),
        subtypes,
    };
    Ok((summary, modes))
}

/// Plain-text rendering: item grouping, cut-points, response tables,
/// concentrations and subtypes.
pub fn render_tables(s: &Summary) -> String {
    let mut out = String::new();
    let d = &s.dims;
    let _ = writeln!(
        out,
        "Fit: n = {}, p = {}, T = {}, G = {}, R = {}, K = {}, C = {}, draws = {}\n",
        d.n, d.p, d.t_max, d.groups, d.periods, d.profiles, d.subpops, s.draws
    );
    let _ = writeln!(out, "Item groups (posterior mode)");
    for g in 1..=d.groups {
        let items: Vec<String> = (0..d.p)
            .filter(|&j| s.item_groups[j] == g)
            .map(|j| (j + 1).to_string())
            .collect();
        let _ = writeln!(
            out,
            "  group {g}: {}",
            if items.is_empty() { "-".into() } else { items.join(" ") }
        );
    }
    let _ = writeln!(out, "\nPeriods (posterior mode of the cut-points)");
    for c in &s.cutpoints {
        let mut bounds = vec![0];
        bounds.extend(&c.cuts);
        bounds.push(d.t_max);
        let periods: Vec<String> = bounds.windows(2).map(|w| format!("{}-{}", w[0] + 1, w[1])).collect();
        let _ = writeln!(out, "  group {} subpop {}: {}", c.group, c.subpop, periods.join(" | "));
    }
    let _ = writeln!(out, "\nResponse probabilities (posterior mean)");
    let header: Vec<String> = (1..=d.profiles).map(|k| format!("{:>8}", format!("k={k}"))).collect();
    let _ = writeln!(out, "  item cat {}", header.join(""));
    for (j, table) in s.lambda_mean.iter().enumerate() {
        for (c, row) in table.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>8.4}")).collect();
            let _ = writeln!(out, "  {:>4} {:>3} {}", j + 1, c + 1, cells.join(""));
        }
    }
    let alpha: Vec<String> = s.alpha_mean.iter().map(|a| format!("{a:.4}")).collect();
    let _ = writeln!(out, "\nConcentration (posterior mean): {}", alpha.join(" "));
    let _ = writeln!(out, "Acceptance rate: {:.4}", s.acceptance_rate);
    if let Some(w) = &s.waic {
        let _ = writeln!(
            out,
            "WAIC: {:.3} (lppd {:.3}, penalty {:.3})",
            w.waic, w.lppd, w.penalty
        );
    }
    for p in &s.subtypes {
        let _ = writeln!(out, "\nSubtypes in period {} ({} distinct keys)", p.period, p.distinct);
        let _ = writeln!(out, "  rank key count external dominates");
        for (rank, r) in p.rows.iter().enumerate() {
            let key: Vec<String> = r.key.iter().map(|k| k.to_string()).collect();
            let ext = r.external_mean.map_or("-".to_string(), |e| format!("{e:.4}"));
            let dom: Vec<String> = r.dominates.iter().map(|b| b.to_string()).collect();
            let _ = writeln!(
                out,
                "  {:>4} {} {:>5} {} {}",
                rank + 1,
                key.join("|"),
                r.count,
                ext,
                if dom.is_empty() { "-".into() } else { dom.join(",") }
            );
        }
    }
    out
}

/// Writes `summary.json` and `tables.txt` into `dir`.
pub fn write_summary(summary: &Summary, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json = serde_json::to_string_pretty(summary).map_err(|e| Error::Serialize(e.to_string()))?;
    let path = dir.join("summary.json");
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    let path = dir.join("tables.txt");
    fs::write(&path, render_tables(summary)).map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{relabel_draws, run_chain, ModelDims, SamplerConfig};
    use crate::simulate::{builtin_setting, draw_dataset, Setting};

    fn fitted(profiles: usize) -> (Dataset, DrawStore) {
        let (config, blocks, params) = builtin_setting(Setting::I);
        let (data, _) = draw_dataset(&config.with_n(40).with_seed(3), &blocks, &params.lambda, &params.alpha).unwrap();
        let sampler = SamplerConfig {
            iterations: 60,
            burn_in: 30,
            seed: 5,
            ..Default::default()
        };
        let dims = ModelDims {
            groups: 2,
            periods: 2,
            profiles,
        };
        let store = relabel_draws(run_chain(&data, dims, &sampler, 0).unwrap());
        (data, store)
    }

    #[test]
    fn re_emission_is_byte_identical() {
        let (data, store) = fitted(4);
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a"), dir.path().join("b"));
        let (s, _) = build_summary(&store, Some(&data), None, 5).unwrap();
        write_summary(&s, &a).unwrap();
        let (s, _) = build_summary(&store, Some(&data), None, 5).unwrap();
        write_summary(&s, &b).unwrap();
        for f in ["summary.json", "tables.txt"] {
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
        }
        assert_eq!(s.subtypes.len(), 2);
        assert!(s.subtypes.iter().all(|p| p.rows.len() <= 5));
    }

    #[test]
    fn waic_matches_recomputation() {
        let (data, store) = fitted(4);
        let (s, _) = build_summary(&store, Some(&data), None, 5).unwrap();
        assert_eq!(s.waic.unwrap(), waic(&store, &data).unwrap());
    }

    #[test]
    fn single_profile_has_no_subtypes() {
        let (data, store) = fitted(1);
        let (s, _) = build_summary(&store, Some(&data), None, 5).unwrap();
        assert!(s.subtypes.is_empty());
        assert_eq!(s.alpha_mean.len(), 1);
        let dir = tempfile::tempdir().unwrap();
        write_summary(&s, dir.path()).unwrap();
    }

    #[test]
    fn unwritable_directory() {
        let (data, store) = fitted(2);
        let (s, _) = build_summary(&store, Some(&data), None, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        fs::write(&file, "x").unwrap();
        assert!(matches!(write_summary(&s, &file), Err(Error::Io { .. })));
    }
}
