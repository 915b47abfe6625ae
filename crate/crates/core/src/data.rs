//! Longitudinal categorical responses.
//!
//! Responses are stored 0-based; the ingestion layer converts from the
//! 1-based categories found in files.

use crate::error::{Error, Result};

/// Marker for cells beyond a subject's last visit.
pub const MISSING: u8 = u8::MAX;

/// Responses `y[i, j, t]` for `n` subjects, `p` items and up to `t_max` visits.
///
/// Storage is visit-major within a subject: the `p` responses of subject `i`
/// at visit `t` are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub categories: Vec<usize>,
    pub visits: Vec<usize>,
    pub n_subpops: usize,
    pub subpop: Vec<usize>,
    pub t_max: usize,
    pub y: Vec<u8>,
}

impl Dataset {
    /// Builds a dataset from 0-based responses and checks every invariant.
    pub fn new(
        categories: Vec<usize>,
        visits: Vec<usize>,
        subpop: Vec<usize>,
        n_subpops: usize,
        y: Vec<u8>,
    ) -> Result<Self> {
        let t_max = visits.iter().copied().max().unwrap_or(0);
        let data = Dataset {
            categories,
            visits,
            n_subpops,
            subpop,
            t_max,
            y,
        };
        data.validate()?;
        Ok(data)
    }

    /// Builds a balanced dataset from a closure producing 0-based categories.
    pub fn from_fn(
        categories: Vec<usize>,
        visits: Vec<usize>,
        subpop: Vec<usize>,
        n_subpops: usize,
        mut response: impl FnMut(usize, usize, usize) -> usize,
    ) -> Result<Self> {
        let n = visits.len();
        let p = categories.len();
        let t_max = visits.iter().copied().max().unwrap_or(0);
        let mut y = vec![MISSING; n * t_max * p];
        for i in 0..n {
            for t in 0..visits[i] {
                for j in 0..p {
                    let c = response(i, j, t);
                    y[(i * t_max + t) * p + j] = u8::try_from(c).unwrap_or(MISSING - 1);
                }
            }
        }
        Dataset::new(categories, visits, subpop, n_subpops, y)
    }

    pub fn n(&self) -> usize {
        self.visits.len()
    }

    pub fn p(&self) -> usize {
        self.categories.len()
    }

    /// Number of observed (subject, item, visit) cells.
    pub fn n_observations(&self) -> usize {
        self.visits.iter().sum::<usize>() * self.p()
    }

    /// 0-based response, or `None` past the subject's last visit.
    pub fn response(&self, i: usize, j: usize, t: usize) -> Option<usize> {
        if t >= self.visits[i] {
            return None;
        }
        Some(self.y[(i * self.t_max + t) * self.p() + j] as usize)
    }

    /// All `p` responses of subject `i` at visit `t`.
    #[inline]
    pub fn visit_row(&self, i: usize, t: usize) -> &[u8] {
        let p = self.p();
        let start = (i * self.t_max + t) * p;
        &self.y[start..start + p]
    }

    /// Copy of this dataset with every subject placed in a single subpopulation.
    pub fn pooled(&self) -> Dataset {
        Dataset {
            n_subpops: 1,
            subpop: vec![0; self.n()],
            ..self.clone()
        }
    }

    /// Copy restricted to the given subjects, in the given order.
    pub fn select_subjects(&self, subjects: &[usize]) -> Dataset {
        let p = self.p();
        let visits: Vec<usize> = subjects.iter().map(|&i| self.visits[i]).collect();
        let t_max = visits.iter().copied().max().unwrap_or(0);
        let mut y = vec![MISSING; subjects.len() * t_max * p];
        for (new_i, &i) in subjects.iter().enumerate() {
            for t in 0..self.visits[i] {
                let dst = (new_i * t_max + t) * p;
                y[dst..dst + p].copy_from_slice(self.visit_row(i, t));
            }
        }
        Dataset {
            categories: self.categories.clone(),
            visits,
            n_subpops: self.n_subpops,
            subpop: subjects.iter().map(|&i| self.subpop[i]).collect(),
            t_max,
            y,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let p = self.p();
        if p == 0 {
            return Err(Error::InvalidValue {
                field: "categories".into(),
                reason: "dataset has no items".into(),
            });
        }
        if let Some(j) = self.categories.iter().position(|&d| !(2..=250).contains(&d)) {
            return Err(Error::InvalidValue {
                field: format!("categories[{j}]"),
                reason: format!("category count {} outside [2, 250]", self.categories[j]),
            });
        }
        if let Some(i) = self.visits.iter().position(|&t| t == 0) {
            return Err(Error::InvalidValue {
                field: format!("visits[{i}]"),
                reason: "every subject needs at least one visit".into(),
            });
        }
        let t_max = self.visits.iter().copied().max().unwrap_or(0);
        if t_max != self.t_max {
            return Err(Error::dims("t_max", t_max, self.t_max));
        }
        if self.subpop.len() != n {
            return Err(Error::dims("subpop", n, self.subpop.len()));
        }
        if self.n_subpops == 0 {
            return Err(Error::InvalidValue {
                field: "n_subpops".into(),
                reason: "need at least one subpopulation".into(),
            });
        }
        if let Some(i) = self.subpop.iter().position(|&c| c >= self.n_subpops) {
            return Err(Error::InvalidValue {
                field: format!("subpop[{i}]"),
                reason: format!("label {} outside [0, {})", self.subpop[i], self.n_subpops),
            });
        }
        if self.y.len() != n * t_max * p {
            return Err(Error::dims("y", n * t_max * p, self.y.len()));
        }
        for i in 0..n {
            for t in 0..t_max {
                let row = &self.y[(i * t_max + t) * p..(i * t_max + t + 1) * p];
                for (j, &y) in row.iter().enumerate() {
                    let ok = if t < self.visits[i] {
                        (y as usize) < self.categories[j]
                    } else {
                        y == MISSING
                    };
                    if !ok {
                        return Err(Error::InvalidValue {
                            field: format!("y[{i}, {j}, {t}]"),
                            reason: format!(
                                "value {y} invalid (item has {} categories, subject has {} visits)",
                                self.categories[j], self.visits[i]
                            ),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}
