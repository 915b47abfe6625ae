use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

use super::modes::PosteriorModes;

/// One combined membership key and the subjects carrying it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubtypeRow {
    /// Modal profile per group (0-based) in the chosen period.
    pub key: Vec<usize>,
    pub count: usize,
    /// Mean of the external variable over the key's subjects.
    pub external_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubtypeTable {
    pub period: usize,
    /// All keys present, most frequent first (ties by key).
    pub rows: Vec<SubtypeRow>,
}

impl SubtypeTable {
    pub fn total(&self) -> usize {
        self.rows.iter().map(|r| r.count).sum()
    }

    pub fn top(&self, m: usize) -> &[SubtypeRow] {
        &self.rows[..m.min(self.rows.len())]
    }

    /// Pairs `(a, b)` of row indices among the first `m` rows where key `a`
    /// dominates key `b`.
    pub fn dominance(&self, m: usize) -> Vec<(usize, usize)> {
        let rows = self.top(m);
        let mut out = Vec::new();
        for (a, ra) in rows.iter().enumerate() {
            for (b, rb) in rows.iter().enumerate() {
                if dominates(&ra.key, &rb.key) {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

/// Componentwise order on keys: `a` is at least `b` everywhere and above it somewhere.
pub fn dominates(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x >= y) && a != b
}

/// Groups subjects by their modal profiles across groups in `period`.
pub fn subtype_table(modes: &PosteriorModes, period: usize, external: Option<&[f64]>) -> Result<SubtypeTable> {
    if period >= modes.n_periods {
        return Err(Error::InvalidValue {
            field: "period".into(),
            reason: format!("{} is not below R = {}", period + 1, modes.n_periods),
        });
    }
    let n = modes.n();
    if let Some(x) = external {
        if x.len() != n {
            return Err(Error::dims("external variable", n, x.len()));
        }
    }
    let mut acc: BTreeMap<Vec<usize>, (usize, f64)> = BTreeMap::new();
    for i in 0..n {
        let key: Vec<usize> = (0..modes.n_groups).map(|g| modes.z_of(i, g, period)).collect();
        let e = acc.entry(key).or_insert((0, 0.0));
        e.0 += 1;
        if let Some(x) = external {
            e.1 += x[i];
        }
    }
    let mut rows: Vec<SubtypeRow> = acc
        .into_iter()
        .map(|(key, (count, sum))| SubtypeRow {
            key,
            count,
            external_mean: external.map(|_| sum / count as f64),
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.key.cmp(&b.key)));
    Ok(SubtypeTable { period, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn modes(z: Vec<usize>) -> PosteriorModes {
        PosteriorModes {
            groups: vec![0, 1],
            cutpoints: vec![vec![], vec![]],
            z,
            n_groups: 2,
            n_periods: 1,
            n_subpops: 1,
            n_profiles: 3,
            t_max: 1,
        }
    }

    #[test]
    fn frequencies_partition_subjects() {
        let m = modes(vec![0, 1, 0, 1, 2, 2, 0, 1]);
        let t = subtype_table(&m, 0, Some(&[1.0, 0.0, 1.0, 1.0])).unwrap();
        assert_eq!(t.total(), 4);
        assert_eq!(t.rows[0].key, vec![0, 1]);
        assert_eq!(t.rows[0].count, 3);
        assert!((t.rows[0].external_mean.unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn one_key_and_constant_external() {
        let m = modes(vec![1, 1, 1, 1, 1, 1]);
        let t = subtype_table(&m, 0, Some(&[1.0; 3])).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].count, 3);
        assert_eq!(t.rows[0].external_mean, Some(1.0));
    }

    #[test]
    fn componentwise_order() {
        // labels (2,3,2,2), (2,2,2,2), (3,2,2,2) shifted to 0-based
        assert!(dominates(&[1, 2, 1, 1], &[1, 1, 1, 1]));
        assert!(!dominates(&[1, 2, 1, 1], &[2, 1, 1, 1]));
        assert!(!dominates(&[2, 1, 1, 1], &[1, 2, 1, 1]));
        assert!(!dominates(&[1, 1], &[1, 1]));
    }
}
