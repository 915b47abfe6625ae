//! Long-format response files: one row per `(subject, item, visit)`.

use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::data::{Dataset, MISSING};
use crate::error::{Error, Result};

pub const HEADER: &str = "subject,item,visit,category";
pub const HEADER_SUBPOP: &str = "subject,item,visit,category,subpop";

/// Largest category label accepted in files.
const MAX_CATEGORY: usize = 250;

struct Row {
    line: u64,
    subject: usize,
    item: usize,
    visit: usize,
    category: usize,
    subpop: usize,
}

/// Reads a long CSV file. Category counts are the largest observed label per
/// item (at least 2) unless `categories` overrides them.
pub fn ingest_long_csv(path: &Path, categories: Option<&[usize]>) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    let with_subpop = match header.as_str() {
        HEADER => false,
        HEADER_SUBPOP => true,
        _ => {
            return Err(Error::HeaderMismatch {
                path: path.to_path_buf(),
                expected: format!("{HEADER}[,subpop]"),
                found: header,
            })
        }
    };

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |k: usize, name: &str| -> Result<usize> {
            let raw = record.get(k).unwrap_or("");
            match raw.parse::<i64>() {
                Ok(v) if v >= 1 => Ok(v as usize),
                Ok(v) => Err(parse_error(
                    path,
                    line,
                    format!("{name} must be a positive integer, got {v}"),
                )),
                Err(_) => Err(parse_error(path, line, format!("{name} `{raw}` is not an integer"))),
            }
        };
        let row = Row {
            line,
            subject: field(0, "subject")?,
            item: field(1, "item")?,
            visit: field(2, "visit")?,
            category: field(3, "category")?,
            subpop: if with_subpop { field(4, "subpop")? } else { 1 },
        };
        if row.category > MAX_CATEGORY {
            return Err(parse_error(
                path,
                line,
                format!("category {} exceeds the supported maximum {MAX_CATEGORY}", row.category),
            ));
        }
        rows.push(row);
    }
    let last_line = rows.last().map_or(1, |r| r.line);
    if rows.is_empty() {
        return Err(parse_error(path, 1, "file has no data rows".into()));
    }

    let n = rows.iter().map(|r| r.subject).max().unwrap_or(0);
    let p = rows.iter().map(|r| r.item).max().unwrap_or(0);
    let mut visits = vec![0usize; n];
    let mut subpop = vec![0usize; n];
    let mut first_line = vec![0u64; n];
    let mut seen: HashMap<(usize, usize, usize), u64> = HashMap::with_capacity(rows.len());
    for r in &rows {
        if let Some(&first) = seen.get(&(r.subject, r.item, r.visit)) {
            return Err(Error::DuplicateRow {
                path: path.to_path_buf(),
                subject: r.subject,
                item: r.item,
                visit: r.visit,
                first,
                second: r.line,
            });
        }
        seen.insert((r.subject, r.item, r.visit), r.line);
        let i = r.subject - 1;
        if first_line[i] == 0 {
            first_line[i] = r.line;
            subpop[i] = r.subpop;
        } else if subpop[i] != r.subpop {
            return Err(parse_error(
                path,
                r.line,
                format!(
                    "subject {} has subpopulation {} here but {} on line {}",
                    r.subject, r.subpop, subpop[i], first_line[i]
                ),
            ));
        }
        visits[i] = visits[i].max(r.visit);
    }
    if let Some(i) = visits.iter().position(|&t| t == 0) {
        return Err(parse_error(
            path,
            last_line,
            format!("subject {} has no rows; subjects must be numbered 1..{n}", i + 1),
        ));
    }
    for i in 0..n {
        for t in 1..=visits[i] {
            for j in 1..=p {
                if !seen.contains_key(&(i + 1, j, t)) {
                    return Err(Error::RaggedMissing {
                        path: path.to_path_buf(),
                        subject: i + 1,
                        item: j,
                        visit: t,
                        visits: visits[i],
                        line: first_line[i],
                    });
                }
            }
        }
    }

    let t_max = visits.iter().copied().max().unwrap_or(0);
    let mut observed = vec![2usize; p];
    let mut y = vec![MISSING; n * t_max * p];
    for r in &rows {
        observed[r.item - 1] = observed[r.item - 1].max(r.category);
        y[((r.subject - 1) * t_max + r.visit - 1) * p + r.item - 1] = (r.category - 1) as u8;
    }
    let categories = match categories {
        None => observed,
        Some(given) => {
            if given.len() != p {
                return Err(Error::Config(format!(
                    "{} category counts given for {p} items",
                    given.len()
                )));
            }
            if let Some(j) = (0..p).find(|&j| given[j] < observed[j]) {
                return Err(Error::Config(format!(
                    "item {} declared with {} categories but category {} is observed",
                    j + 1,
                    given[j],
                    observed[j]
                )));
            }
            given.to_vec()
        }
    };
    let n_subpops = subpop.iter().copied().max().unwrap_or(1);
    Dataset::new(
        categories,
        visits,
        subpop.into_iter().map(|c| c - 1).collect(),
        n_subpops,
        y,
    )
}

fn parse_error(path: &Path, line: u64, reason: String) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    }
}

/// Writes `dataset` in long format, subject-major then visit then item. The
/// subpopulation column is included when the data carry more than one.
pub fn write_long_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(dataset.n_observations() * 12);
    let with_subpop = dataset.n_subpops > 1;
    out.push_str(if with_subpop { HEADER_SUBPOP } else { HEADER });
    out.push('\n');
    for i in 0..dataset.n() {
        for t in 0..dataset.visits[i] {
            for (j, &y) in dataset.visit_row(i, t).iter().enumerate() {
                out.push_str(&format!("{},{},{},{}", i + 1, j + 1, t + 1, y as usize + 1));
                if with_subpop {
                    out.push_str(&format!(",{}", dataset.subpop[i] + 1));
                }
                out.push('\n');
            }
        }
    }
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(content: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        std::fs::write(&path, content).unwrap();
        (dir, path)
    }

    #[test]
    fn complete_two_by_two_by_two() {
        let (_d, path) = write(
            "subject,item,visit,category\n1,1,1,1\n1,2,1,2\n1,1,2,3\n1,2,2,1\n2,2,2,2\n2,1,1,1\n2,2,1,1\n2,1,2,2\n",
        );
        let data = ingest_long_csv(&path, None).unwrap();
        assert_eq!((data.n(), data.p()), (2, 2));
        assert_eq!(data.visits, vec![2, 2]);
        assert_eq!(data.categories, vec![3, 2]);
        assert_eq!(data.response(0, 0, 1), Some(2));
        assert_eq!(data.response(1, 1, 1), Some(1));
    }

    #[test]
    fn duplicate_row_names_both_lines() {
        let (_d, path) = write("subject,item,visit,category\n1,1,1,1\n1,1,1,2\n");
        match ingest_long_csv(&path, None) {
            Err(Error::DuplicateRow { first, second, .. }) => assert_eq!((first, second), (2, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ragged_missingness() {
        // subject 1 has item 2 at visit 2 but not item 1... visit 1 is complete
        let (_d, path) = write("subject,item,visit,category\n1,1,1,1\n1,2,1,1\n1,2,2,1\n");
        match ingest_long_csv(&path, None) {
            Err(Error::RaggedMissing {
                subject, item, visit, ..
            }) => {
                assert_eq!((subject, item, visit), (1, 1, 2))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_values_carry_line_numbers() {
        let (_d, path) = write("subject,item,visit,category\n1,1,1,1\n1,2,1,0\n");
        match ingest_long_csv(&path, None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let (_d, path) = write("subject,item,visit,category\n1,1,1,-2\n");
        assert!(matches!(
            ingest_long_csv(&path, None),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn header_mismatch() {
        let (_d, path) = write("id,item,visit,category\n1,1,1,1\n");
        assert!(matches!(
            ingest_long_csv(&path, None),
            Err(Error::HeaderMismatch { .. })
        ));
    }

    #[test]
    fn unbalanced_visits_and_subpops() {
        let (_d, path) = write("subject,item,visit,category,subpop\n1,1,1,1,2\n1,1,2,2,2\n2,1,1,1,1\n");
        let data = ingest_long_csv(&path, Some(&[4])).unwrap();
        assert_eq!(data.visits, vec![2, 1]);
        assert_eq!(data.subpop, vec![1, 0]);
        assert_eq!(data.n_subpops, 2);
        assert_eq!(data.categories, vec![4]);
        assert!(ingest_long_csv(&path, Some(&[1])).is_err());
    }

    #[test]
    fn write_then_read() {
        let data = Dataset::from_fn(vec![3, 2], vec![3, 1, 2], vec![0, 1, 1], 2, |i, j, t| (i + j + t) % 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        write_long_csv(&data, &path).unwrap();
        let back = ingest_long_csv(&path, Some(&[3, 2])).unwrap();
        assert_eq!(back, data);
    }
}
