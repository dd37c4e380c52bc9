//! Tabular regression data: CSV loading with one-hot encoding, stratified
//! fold assignment and subsampling.

use std::collections::BTreeSet;
use std::fs::File;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::io::write_atomic;
use crate::rng::RandomState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical { levels: Vec<String> },
}

/// One column of the source file and the encoded feature columns it maps to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceColumn {
    pub name: String,
    pub kind: ColumnKind,
    /// Index of the first encoded column.
    pub first: usize,
    /// Number of encoded columns (1 for numeric, level count for categorical).
    pub width: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub feature_names: Vec<String>,
    pub target_name: String,
    pub columns: Vec<SourceColumn>,
}

impl Schema {
    fn numeric(feature_names: Vec<String>, target_name: String) -> Self {
        let columns = feature_names
            .iter()
            .enumerate()
            .map(|(j, name)| SourceColumn {
                name: name.clone(),
                kind: ColumnKind::Numeric,
                first: j,
                width: 1,
            })
            .collect();
        Self {
            feature_names,
            target_name,
            columns,
        }
    }
}

/// Dense numeric regression data, stored column-major.
///
/// Every cell is finite, there is at least one row and one feature column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Vec<f64>>,
    target: Vec<f64>,
    schema: Schema,
}

impl Dataset {
    pub fn new(columns: Vec<Vec<f64>>, target: Vec<f64>, schema: Schema) -> Result<Self> {
        let n = target.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if columns.is_empty() {
            return Err(Error::NoFeatures);
        }
        if schema.feature_names.len() != columns.len() {
            return Err(Error::Shape(format!(
                "{} feature names for {} columns",
                schema.feature_names.len(),
                columns.len()
            )));
        }
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::Shape(format!(
                    "column `{}` has {} rows, target has {n}",
                    schema.feature_names[j],
                    col.len()
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    row: i + 1,
                    column: schema.feature_names[j].clone(),
                });
            }
        }
        if let Some(i) = target.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: i + 1,
                column: schema.target_name.clone(),
            });
        }
        Ok(Self {
            columns,
            target,
            schema,
        })
    }

    /// Build from row-major features with generated names `x1..xd` and target `y`.
    pub fn from_rows(rows: &[Vec<f64>], target: Vec<f64>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.len() != target.len() {
            return Err(Error::Shape(format!(
                "{} rows vs {} targets",
                rows.len(),
                target.len()
            )));
        }
        let mut columns = vec![Vec::with_capacity(rows.len()); d];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Shape(format!(
                    "row {} has {} values, expected {d}",
                    i + 1,
                    row.len()
                )));
            }
            for (col, &v) in columns.iter_mut().zip(row) {
                col.push(v);
            }
        }
        Self::from_columns(columns, target)
    }

    /// Build from column-major features with generated names `x1..xd` and target `y`.
    pub fn from_columns(columns: Vec<Vec<f64>>, target: Vec<f64>) -> Result<Self> {
        let names = (1..=columns.len()).map(|j| format!("x{j}")).collect();
        Self::new(columns, target, Schema::numeric(names, "y".to_string()))
    }

    pub fn n(&self) -> usize {
        self.target.len()
    }

    pub fn d(&self) -> usize {
        self.columns.len()
    }

    pub fn feature(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.columns[j][i]
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Rows selected by `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            columns: self
                .columns
                .iter()
                .map(|c| indices.iter().map(|&i| c[i]).collect())
                .collect(),
            target: indices.iter().map(|&i| self.target[i]).collect(),
            schema: self.schema.clone(),
        }
    }

    /// Comma-separated text with a header row; floats use shortest round-trip formatting.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for name in &self.schema.feature_names {
            out.push_str(name);
            out.push(',');
        }
        out.push_str(&self.schema.target_name);
        out.push('\n');
        for i in 0..self.n() {
            for col in &self.columns {
                out.push_str(&col[i].to_string());
                out.push(',');
            }
            out.push_str(&self.target[i].to_string());
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, self.to_csv_string().as_bytes())
    }
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok()
}

/// Load a comma-separated file with a header row.
///
/// Columns whose cells all parse as numbers pass through; columns where no
/// cell parses are treated as categorical and one-hot encoded with levels in
/// lexicographic order. A column mixing both is an error at the first
/// offending cell. Rows are numbered from 1 (the first data row).
pub fn load_csv(
    path: impl AsRef<Path>,
    target_column: &str,
    log_transform: bool,
) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, Some(target_column), log_transform)
}

/// Like [`load_csv`] but the target column is optional; without one the
/// returned target is all zeros. Used for prediction inputs.
pub fn load_features_csv(path: impl AsRef<Path>, target_column: Option<&str>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, target_column, false)
}

pub fn read_csv<R: std::io::Read>(
    reader: R,
    target_column: Option<&str>,
    log_transform: bool,
) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let target_idx = match target_column {
        Some(name) => Some(
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::UnknownColumn(name.to_string()))?,
        ),
        None => None,
    };

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    for record in rdr.records() {
        let record = record?;
        for (col, cell) in cells.iter_mut().zip(record.iter()) {
            col.push(cell.to_string());
        }
    }
    let n = cells.first().map_or(0, Vec::len);
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    for (name, col) in header.iter().zip(&cells) {
        if let Some(i) = col.iter().position(|c| c.is_empty()) {
            return Err(Error::MissingValue {
                row: i + 1,
                column: name.clone(),
            });
        }
    }

    let target = match target_idx {
        Some(t) => {
            let name = &header[t];
            let mut target = Vec::with_capacity(n);
            for (i, cell) in cells[t].iter().enumerate() {
                let v = parse_number(cell).ok_or_else(|| Error::UnparseableCell {
                    row: i + 1,
                    column: name.clone(),
                    value: cell.clone(),
                })?;
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        row: i + 1,
                        column: name.clone(),
                    });
                }
                if log_transform {
                    if v <= 0.0 {
                        return Err(Error::NonPositiveTarget {
                            row: i + 1,
                            value: v,
                        });
                    }
                    target.push(v.ln());
                } else {
                    target.push(v);
                }
            }
            target
        }
        None => vec![0.0; n],
    };

    let mut columns = Vec::new();
    let mut feature_names = Vec::new();
    let mut sources = Vec::new();
    for (c, (name, col)) in header.iter().zip(&cells).enumerate() {
        if Some(c) == target_idx {
            continue;
        }
        let parsed: Vec<Option<f64>> = col.iter().map(|s| parse_number(s)).collect();
        let numeric_count = parsed.iter().filter(|p| p.is_some()).count();
        let first = columns.len();
        if numeric_count == n {
            let values: Vec<f64> = parsed.into_iter().map(Option::unwrap).collect();
            if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    row: i + 1,
                    column: name.clone(),
                });
            }
            columns.push(values);
            feature_names.push(name.clone());
            sources.push(SourceColumn {
                name: name.clone(),
                kind: ColumnKind::Numeric,
                first,
                width: 1,
            });
        } else if numeric_count == 0 {
            let levels: Vec<String> = col
                .iter()
                .cloned()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            for level in &levels {
                columns.push(
                    col.iter()
                        .map(|s| if s == level { 1.0 } else { 0.0 })
                        .collect(),
                );
                feature_names.push(format!("{name}={level}"));
            }
            sources.push(SourceColumn {
                name: name.clone(),
                kind: ColumnKind::Categorical {
                    levels: levels.clone(),
                },
                first,
                width: levels.len(),
            });
        } else {
            let i = parsed.iter().position(Option::is_none).unwrap();
            return Err(Error::UnparseableCell {
                row: i + 1,
                column: name.clone(),
                value: col[i].clone(),
            });
        }
    }

    let target_name = target_idx.map_or_else(String::new, |t| header[t].clone());
    let schema = Schema {
        feature_names,
        target_name,
        columns: sources,
    };
    Dataset::new(columns, target, schema)
}

/// Fold index for every row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    #[serde(rename = "V")]
    pub v: usize,
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    /// Row indices in fold `f`, ascending.
    pub fn test_indices(&self, f: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] == f)
            .collect()
    }

    /// Row indices outside fold `f`, ascending.
    pub fn train_indices(&self, f: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] != f)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.v];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Number of equal-frequency response bins used for stratification.
pub fn stratification_bins(n: usize, v: usize) -> usize {
    (n / v).clamp(2, 10)
}

/// Ranks rows by response, cuts the ranking into equal-frequency bins,
/// shuffles each bin and deals rows round-robin to folds. The dealing
/// position carries over from one bin to the next so overall fold sizes
/// differ by at most one.
pub fn stratified_folds(ds: &Dataset, v: usize, seed: u64) -> Result<FoldAssignment> {
    let n = ds.n();
    if v < 2 {
        return Err(invalid(format!("fold count must be at least 2, got {v}")));
    }
    if v > n {
        return Err(invalid(format!("fold count {v} exceeds sample count {n}")));
    }
    let y = ds.target();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(a.cmp(&b)));

    let bins = stratification_bins(n, v);
    let root = RandomState::new(seed);
    let mut fold_of = vec![0; n];
    let mut next = 0;
    for b in 0..bins {
        let lo = b * n / bins;
        let hi = (b + 1) * n / bins;
        let mut members = order[lo..hi].to_vec();
        members.shuffle(&mut root.child(b as u64).rng());
        for i in members {
            fold_of[i] = next;
            next = (next + 1) % v;
        }
    }
    Ok(FoldAssignment { v, fold_of })
}

/// `k` distinct indices drawn uniformly from `0..n`, returned in ascending order.
pub fn subsample_without_replacement<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(invalid("subsample size must be at least 1"));
    }
    if k > n {
        return Err(invalid(format!(
            "cannot draw {k} distinct indices from {n}"
        )));
    }
    let mut idx = rand::seq::index::sample(rng, n, k).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds_from_target(y: Vec<f64>) -> Dataset {
        let x = (0..y.len()).map(|i| i as f64).collect();
        Dataset::from_columns(vec![x], y).unwrap()
    }

    #[test]
    fn numeric_csv() {
        let mut text = String::from("a,b,y\n");
        for i in 0..10 {
            text.push_str(&format!("{i},{}.5,{}\n", i * 2, i * 3));
        }
        let ds = read_csv(text.as_bytes(), Some("y"), false).unwrap();
        assert_eq!((ds.n(), ds.d()), (10, 2));
        assert_eq!(ds.target()[3], 9.0);
        assert_eq!(ds.value(2, 1), 4.5);
    }

    #[test]
    fn categorical_one_hot() {
        let text = "color,size,y\nred,1,1\ngreen,2,2\nblue,3,3\nred,4,4\n";
        let ds = read_csv(text.as_bytes(), Some("y"), false).unwrap();
        assert_eq!(ds.d(), 4);
        assert_eq!(
            ds.schema().feature_names,
            ["color=blue", "color=green", "color=red", "size"]
        );
        assert_eq!(ds.row(0), vec![0.0, 0.0, 1.0, 1.0]);
        assert_eq!(ds.row(2), vec![1.0, 0.0, 0.0, 3.0]);
        let widths: usize = ds.schema().columns.iter().map(|c| c.width).sum();
        assert_eq!(widths, ds.d());
    }

    #[test]
    fn log_target() {
        let e = std::f64::consts::E;
        let text = format!("x,y\n0,1\n1,{}\n2,{}\n", e, e * e);
        let ds = read_csv(text.as_bytes(), Some("y"), true).unwrap();
        let y = ds.target();
        assert_eq!(y[0], 0.0);
        assert!((y[1] - 1.0).abs() < 1e-15);
        assert!((y[2] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn load_errors() {
        let r = read_csv("x,y\n1,2\n".as_bytes(), Some("z"), false);
        assert!(matches!(r, Err(Error::UnknownColumn(_))));

        let r = read_csv("x,y\n1,2\nfoo,3\n".as_bytes(), Some("y"), false);
        match r {
            Err(Error::UnparseableCell { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "x");
            }
            other => panic!("{other:?}"),
        }

        let r = read_csv("x,y\n1,2\n,3\n".as_bytes(), Some("y"), false);
        assert!(matches!(r, Err(Error::MissingValue { row: 2, .. })));

        let r = read_csv("x,y\n1,NaN\n".as_bytes(), Some("y"), false);
        assert!(matches!(r, Err(Error::NonFinite { .. })));

        let r = read_csv("x,y\n1,0\n".as_bytes(), Some("y"), true);
        assert!(matches!(r, Err(Error::NonPositiveTarget { .. })));

        let r = read_csv("x,y\n".as_bytes(), Some("y"), false);
        assert!(matches!(r, Err(Error::EmptyDataset)));

        let r = load_csv("/nonexistent/file.csv", "y", false);
        assert!(matches!(r, Err(Error::Io { .. })));
    }

    #[test]
    fn folds_exact_divisibility() {
        let ds = ds_from_target((0..20).map(|i| i as f64 * 1.5).collect());
        let folds = stratified_folds(&ds, 10, 3).unwrap();
        assert_eq!(folds.sizes(), vec![2; 10]);
    }

    #[test]
    fn folds_one_per_decile() {
        let ds = ds_from_target((1..=100).map(f64::from).collect());
        for seed in [0, 1, 99] {
            let folds = stratified_folds(&ds, 10, seed).unwrap();
            for f in 0..10 {
                let mut deciles: Vec<usize> = folds
                    .test_indices(f)
                    .into_iter()
                    .map(|i| (ds.target()[i] as usize - 1) / 10)
                    .collect();
                deciles.sort_unstable();
                assert_eq!(deciles, (0..10).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn folds_deterministic_and_validated() {
        let ds = ds_from_target((0..37).map(|i| ((i * 7) % 11) as f64).collect());
        assert_eq!(
            stratified_folds(&ds, 5, 8).unwrap(),
            stratified_folds(&ds, 5, 8).unwrap()
        );
        assert!(stratified_folds(&ds, 1, 0).is_err());
        assert!(stratified_folds(&ds, 38, 0).is_err());
    }

    #[test]
    fn folds_json_shape() {
        let ds = ds_from_target(vec![1.0, 2.0, 3.0, 4.0]);
        let folds = stratified_folds(&ds, 2, 0).unwrap();
        let v: serde_json::Value = serde_json::to_value(&folds).unwrap();
        assert_eq!(v["V"], 2);
        assert_eq!(v["fold_of"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn subsample_contract() {
        let mut rng = RandomState::new(5).rng();
        assert_eq!(
            subsample_without_replacement(5, 5, &mut rng).unwrap(),
            vec![0, 1, 2, 3, 4]
        );
        let s = subsample_without_replacement(10, 4, &mut rng).unwrap();
        assert_eq!(s.len(), 4);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(subsample_without_replacement(3, 4, &mut rng).is_err());
        assert!(subsample_without_replacement(3, 0, &mut rng).is_err());
    }

    #[test]
    fn subsample_pairs_uniform() {
        let mut rng = RandomState::new(11).rng();
        let mut counts = [[0usize; 5]; 5];
        let draws = 10_000;
        for _ in 0..draws {
            let s = subsample_without_replacement(5, 2, &mut rng).unwrap();
            counts[s[0]][s[1]] += 1;
        }
        for a in 0..5 {
            for b in (a + 1)..5 {
                let freq = counts[a][b] as f64 / draws as f64;
                assert!((freq - 0.1).abs() <= 0.02, "pair ({a},{b}) freq {freq}");
            }
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let ds = Dataset::from_rows(
            &[vec![0.1, 1.0 / 3.0], vec![1e-300, -2.5]],
            vec![std::f64::consts::PI, 7.0],
        )
        .unwrap();
        let back = read_csv(ds.to_csv_string().as_bytes(), Some("y"), false).unwrap();
        assert_eq!(back, ds);
    }
}
