use std::str::FromStr;

use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::sampler::{check_dims, pool_chains, run_chains, ModelDims, SamplerConfig};

use super::waic::{waic, Waic};

/// Default WAIC band within which the simpler model is preferred.
pub const PARSIMONY_MARGIN: f64 = 10.0;

/// Candidate values per dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModelGrid {
    pub groups: Vec<usize>,
    pub periods: Vec<usize>,
    pub profiles: Vec<usize>,
    pub subpops: Vec<usize>,
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridCell {
    pub groups: usize,
    pub periods: usize,
    pub profiles: usize,
    pub subpops: usize,
}

impl GridCell {
    pub fn dims(&self) -> ModelDims {
        ModelDims {
            groups: self.groups,
            periods: self.periods,
            profiles: self.profiles,
        }
    }

    /// Free parameter count: response tables, concentrations, membership
    /// scores, cut-points and group proportions.
    pub fn free_params(&self, dataset: &Dataset) -> usize {
        let (g, r, k, c) = (self.groups, self.periods, self.profiles, self.subpops);
        let tables: usize = dataset.categories.iter().map(|d| k * (d - 1)).sum();
        tables + k + dataset.n() * (k - 1) + g * c * (r - 1) + (g - 1)
    }
}

impl ModelGrid {
    /// Cells in `(K, G, C, R)` lexicographic order.
    pub fn cells(&self) -> Vec<GridCell> {
        let mut out = Vec::new();
        for &profiles in &self.profiles {
            for &groups in &self.groups {
                for &subpops in &self.subpops {
                    for &periods in &self.periods {
                        out.push(GridCell {
                            groups,
                            periods,
                            profiles,
                            subpops,
                        });
                    }
                }
            }
        }
        out
    }
}

impl FromStr for ModelGrid {
    type Err = Error;

    /// Parses `G=2,3,4;K=3,4,5;C=1;R=2`. Missing `R` and `C` default to 1.
    fn from_str(s: &str) -> Result<Self> {
        let mut grid = ModelGrid {
            groups: vec![],
            periods: vec![1],
            profiles: vec![],
            subpops: vec![1],
        };
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, values) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("grid entry `{part}` lacks `=`")))?;
            let mut values = values
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<usize>()
                        .ok()
                        .filter(|&x| x > 0)
                        .ok_or_else(|| Error::Config(format!("grid value `{v}` is not a positive integer")))
                })
                .collect::<Result<Vec<_>>>()?;
            values.sort_unstable();
            values.dedup();
            match key.trim() {
                "G" => grid.groups = values,
                "R" => grid.periods = values,
                "K" => grid.profiles = values,
                "C" => grid.subpops = values,
                other => return Err(Error::Config(format!("unknown grid dimension `{other}`"))),
            }
        }
        if grid.groups.is_empty() || grid.profiles.is_empty() {
            return Err(Error::Config("grid needs at least one G and one K value".into()));
        }
        Ok(grid)
    }
}

/// Outcome of fitting one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub cell: GridCell,
    pub free_params: usize,
    pub waic: Option<Waic>,
    pub draws: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    /// Index into `table` of the selected cell; `None` if every fit failed.
    pub chosen: Option<usize>,
    pub table: Vec<CellResult>,
}

impl Selection {
    pub fn chosen_cell(&self) -> Option<&CellResult> {
        self.chosen.map(|c| &self.table[c])
    }
}

/// The dataset a cell is fitted to: `C = 1` pools subpopulations, any other
/// value must match the data.
pub fn dataset_for_cell(dataset: &Dataset, cell: &GridCell) -> Result<Dataset> {
    if cell.subpops == dataset.n_subpops {
        Ok(dataset.clone())
    } else if cell.subpops == 1 {
        Ok(dataset.pooled())
    } else {
        Err(Error::InfeasibleDims(format!(
            "C = {} but the data carry {} subpopulations",
            cell.subpops, dataset.n_subpops
        )))
    }
}

pub fn fit_cell(dataset: &Dataset, cell: GridCell, config: &SamplerConfig) -> CellResult {
    let free_params = cell.free_params(dataset);
    let outcome = dataset_for_cell(dataset, &cell).and_then(|data| {
        check_dims(&data, cell.dims())?;
        let stores = run_chains(&data, cell.dims(), config)?;
        let pooled = pool_chains(stores).ok_or(Error::InsufficientDraws { required: 2, found: 0 })?;
        Ok((waic(&pooled, &data)?, pooled.len()))
    });
    match outcome {
        Ok((w, draws)) => CellResult {
            cell,
            free_params,
            waic: Some(w),
            draws,
            error: None,
        },
        Err(e) => CellResult {
            cell,
            free_params,
            waic: None,
            draws: 0,
            error: Some(e.to_string()),
        },
    }
}

/// Smallest WAIC, except that any cell within `margin` of it with fewer free
/// parameters is preferred; remaining ties go to the smallest `(K, G, C, R)`.
pub fn choose(table: &[CellResult], margin: f64) -> Option<usize> {
    let best = table
        .iter()
        .filter_map(|r| r.waic.map(|w| w.waic))
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return None;
    }
    table
        .iter()
        .enumerate()
        .filter(|(_, r)| r.waic.is_some_and(|w| w.waic <= best + margin))
        .min_by_key(|(_, r)| {
            let c = r.cell;
            (r.free_params, c.profiles, c.groups, c.subpops, c.periods)
        })
        .map(|(i, _)| i)
}

/// Fits every cell and applies [`choose`]. Failed cells are kept in the table.
pub fn select_model(dataset: &Dataset, grid: &ModelGrid, config: &SamplerConfig, margin: f64) -> Result<Selection> {
    let cells = grid.cells();
    if cells.is_empty() {
        return Err(Error::Config("empty model grid".into()));
    }
    let table: Vec<CellResult> = cells.into_iter().map(|c| fit_cell(dataset, c, config)).collect();
    Ok(Selection {
        chosen: choose(&table, margin),
        table,
    })
}
