use crate::error::{Error, Result};

/// Cramér's V of a contingency table given as rows of counts.
///
/// All-zero rows and columns are dropped first; if either remaining dimension
/// is 1 the association is defined as 0.
pub fn cramers_v(counts: &[Vec<u64>]) -> Result<f64> {
    let n_cols = counts.first().map_or(0, |r| r.len());
    if let Some(row) = counts.iter().find(|r| r.len() != n_cols) {
        return Err(Error::LengthMismatch {
            left: n_cols,
            right: row.len(),
        });
    }
    let row_sums: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<u64> = (0..n_cols).map(|c| counts.iter().map(|r| r[c]).sum()).collect();
    let total: u64 = row_sums.iter().sum();
    if total == 0 {
        return Err(Error::EmptyTable);
    }
    let rows: Vec<usize> = (0..counts.len()).filter(|&r| row_sums[r] > 0).collect();
    let cols: Vec<usize> = (0..n_cols).filter(|&c| col_sums[c] > 0).collect();
    let min_dim = rows.len().min(cols.len());
    if min_dim <= 1 {
        return Ok(0.0);
    }
    let n = total as f64;
    let mut chi2 = 0.0;
    for &r in &rows {
        for &c in &cols {
            let expected = row_sums[r] as f64 * col_sums[c] as f64 / n;
            let diff = counts[r][c] as f64 - expected;
            chi2 += diff * diff / expected;
        }
    }
    Ok((chi2 / (n * (min_dim - 1) as f64)).sqrt().clamp(0.0, 1.0))
}

/// Contingency table of two categorical sequences with `da` and `db` levels.
pub fn contingency(a: &[usize], b: &[usize], da: usize, db: usize) -> Vec<Vec<u64>> {
    let mut table = vec![vec![0u64; db]; da];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    table
}
