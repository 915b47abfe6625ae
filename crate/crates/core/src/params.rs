//! Model parameters and latent memberships.

use crate::error::{Error, Result};

/// Simplex tolerance for probability vectors.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Conditional response probabilities `lambda[j][c][k]`: one `d_j x K`
/// column-stochastic table per item.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTables {
    n_profiles: usize,
    categories: Vec<usize>,
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl ProfileTables {
    pub fn filled(categories: &[usize], n_profiles: usize, value: f64) -> Self {
        let offsets = offsets_of(categories);
        let rows = offsets.last().copied().unwrap_or(0);
        ProfileTables {
            n_profiles,
            categories: categories.to_vec(),
            offsets: offsets[..categories.len()].to_vec(),
            values: vec![value; rows * n_profiles],
        }
    }

    /// Uniform tables, `lambda[j][c][k] = 1 / d_j`.
    pub fn uniform(categories: &[usize], n_profiles: usize) -> Self {
        let mut tables = Self::filled(categories, n_profiles, 0.0);
        for j in 0..categories.len() {
            for c in 0..categories[j] {
                for k in 0..n_profiles {
                    tables.set(j, c, k, 1.0 / categories[j] as f64);
                }
            }
        }
        tables
    }

    /// From row-major `d_j x K` tables, one per item.
    pub fn from_tables(tables: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n_profiles = tables.first().and_then(|t| t.first()).map(|row| row.len()).unwrap_or(0);
        let categories: Vec<usize> = tables.iter().map(|t| t.len()).collect();
        let mut out = Self::filled(&categories, n_profiles, 0.0);
        for (j, table) in tables.iter().enumerate() {
            for (c, row) in table.iter().enumerate() {
                if row.len() != n_profiles {
                    return Err(Error::dims(format!("lambda[{j}][{c}]"), n_profiles, row.len()));
                }
                for (k, &v) in row.iter().enumerate() {
                    out.set(j, c, k, v);
                }
            }
        }
        Ok(out)
    }

    /// From the flat layout returned by [`ProfileTables::as_slice`].
    pub fn from_flat(categories: &[usize], n_profiles: usize, values: Vec<f64>) -> Result<Self> {
        let mut out = Self::filled(categories, n_profiles, 0.0);
        if values.len() != out.values.len() {
            return Err(Error::dims("lambda", out.values.len(), values.len()));
        }
        out.values = values;
        Ok(out)
    }

    pub fn n_profiles(&self) -> usize {
        self.n_profiles
    }

    pub fn n_items(&self) -> usize {
        self.categories.len()
    }

    pub fn categories(&self) -> &[usize] {
        &self.categories
    }

    #[inline]
    pub fn index(&self, j: usize, c: usize, k: usize) -> usize {
        (self.offsets[j] + c) * self.n_profiles + k
    }

    #[inline]
    pub fn get(&self, j: usize, c: usize, k: usize) -> f64 {
        self.values[self.index(j, c, k)]
    }

    #[inline]
    pub fn set(&mut self, j: usize, c: usize, k: usize, value: f64) {
        let idx = self.index(j, c, k);
        self.values[idx] = value;
    }

    /// The `K` probabilities of category `c` of item `j`, one per profile.
    #[inline]
    pub fn row(&self, j: usize, c: usize) -> &[f64] {
        let start = (self.offsets[j] + c) * self.n_profiles;
        &self.values[start..start + self.n_profiles]
    }

    pub fn column(&self, j: usize, k: usize) -> Vec<f64> {
        (0..self.categories[j]).map(|c| self.get(j, c, k)).collect()
    }

    /// Flat storage: item-major, then category, then profile.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Element-wise natural log, same layout as [`ProfileTables::as_slice`].
    pub fn log_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.ln()).collect()
    }

    /// Profile `k` of the result is profile `perm[k]` of `self`.
    pub fn permute_profiles(&self, perm: &[usize]) -> Self {
        let mut out = self.clone();
        let k_n = self.n_profiles;
        for (row_out, row_in) in out.values.chunks_exact_mut(k_n).zip(self.values.chunks_exact(k_n)) {
            for k in 0..k_n {
                row_out[k] = row_in[perm[k]];
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_profiles == 0 {
            return Err(Error::InvalidValue {
                field: "lambda".into(),
                reason: "no profiles".into(),
            });
        }
        for j in 0..self.n_items() {
            for k in 0..self.n_profiles {
                let col = self.column(j, k);
                if let Some(v) = col.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                    return Err(Error::InvalidValue {
                        field: format!("lambda[{j}][.][{k}]"),
                        reason: format!("entry {v} is not a probability"),
                    });
                }
                let deviation = (col.iter().sum::<f64>() - 1.0).abs();
                if deviation > SIMPLEX_TOL {
                    return Err(Error::SimplexViolation {
                        field: format!("lambda[{j}][.][{k}]"),
                        deviation,
                    });
                }
            }
        }
        Ok(())
    }
}

fn offsets_of(categories: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(categories.len() + 1);
    let mut acc = 0;
    offsets.push(0);
    for &d in categories {
        acc += d;
        offsets.push(acc);
    }
    offsets
}

/// Population-level parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub lambda: ProfileTables,
    /// Dirichlet concentration of the membership scores.
    pub alpha: Vec<f64>,
    /// Group proportions.
    pub xi: Vec<f64>,
    /// Cut-point catalog proportions per (group, subpopulation), indexed `g * C + c`.
    pub kappa: Vec<Vec<f64>>,
}

impl ParamSet {
    pub fn alpha0(&self) -> f64 {
        self.alpha.iter().sum()
    }

    pub fn eta(&self) -> Vec<f64> {
        let a0 = self.alpha0();
        self.alpha.iter().map(|a| a / a0).collect()
    }
}

/// Membership scores `pi[i]` and blockwise memberships `z[i, g, r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    pub n_profiles: usize,
    pub n_groups: usize,
    pub n_periods: usize,
    /// Flat `n x K`.
    pub pi: Vec<f64>,
    /// Flat `n x G x R`, 0-based profile labels.
    pub z: Vec<usize>,
}

impl LatentState {
    pub fn n(&self) -> usize {
        self.pi.len().checked_div(self.n_profiles).unwrap_or(0)
    }

    #[inline]
    pub fn pi_of(&self, i: usize) -> &[f64] {
        &self.pi[i * self.n_profiles..(i + 1) * self.n_profiles]
    }

    #[inline]
    pub fn z_index(&self, i: usize, g: usize, r: usize) -> usize {
        (i * self.n_groups + g) * self.n_periods + r
    }

    #[inline]
    pub fn z_of(&self, i: usize, g: usize, r: usize) -> usize {
        self.z[self.z_index(i, g, r)]
    }

    /// All `G x R` memberships of subject `i`.
    #[inline]
    pub fn z_subject(&self, i: usize) -> &[usize] {
        let w = self.n_groups * self.n_periods;
        &self.z[i * w..(i + 1) * w]
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let k_n = self.n_profiles;
        if self.pi.len() != n * k_n {
            return Err(Error::dims("pi", n * k_n, self.pi.len()));
        }
        let expected_z = n * self.n_groups * self.n_periods;
        if self.z.len() != expected_z {
            return Err(Error::dims("z", expected_z, self.z.len()));
        }
        for i in 0..n {
            check_simplex(&format!("pi[{i}]"), self.pi_of(i))?;
        }
        if let Some(idx) = self.z.iter().position(|&z| z >= k_n) {
            return Err(Error::InvalidValue {
                field: format!("z[{idx}]"),
                reason: format!("label {} outside [0, {k_n})", self.z[idx]),
            });
        }
        Ok(())
    }
}

pub(crate) fn check_simplex(field: &str, v: &[f64]) -> Result<()> {
    if let Some(x) = v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::InvalidValue {
            field: field.to_string(),
            reason: format!("entry {x} is not a probability"),
        });
    }
    let deviation = (v.iter().sum::<f64>() - 1.0).abs();
    if deviation > SIMPLEX_TOL {
        return Err(Error::SimplexViolation {
            field: field.to_string(),
            deviation,
        });
    }
    Ok(())
}
