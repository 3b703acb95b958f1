//! Dataset ingestion, nominal encoding, z-score scaling and stratified folds.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{IceError, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Nominal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

/// A parsed CSV before any encoding. `columns` and each row exclude the
/// label column; labels are already mapped to `{0, 1}`.
#[derive(Clone, Debug)]
pub struct RawTable {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<String>>,
    pub label_column: String,
    /// Raw label values; index is the mapped label.
    pub label_values: [String; 2],
    pub labels: Vec<u8>,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Read a headed CSV file. Label values are mapped to 0/1 by ascending
/// lexicographic order of the raw strings.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &str,
    column_kinds: &BTreeMap<String, ColumnKind>,
) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| IceError::io(path, e))?;
    read_csv(file, label_column, column_kinds)
}

/// Same as [`load_csv`] over any reader.
pub fn read_csv<R: Read>(
    reader: R,
    label_column: &str,
    column_kinds: &BTreeMap<String, ColumnKind>,
) -> Result<RawTable> {
    let (header, records) = read_records(reader)?;
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| IceError::MissingLabelColumn(label_column.to_string()))?;

    let distinct: BTreeSet<&str> = records.iter().map(|r| r[label_idx].as_str()).collect();
    if distinct.len() != 2 {
        return Err(IceError::NonBinaryLabel {
            column: label_column.to_string(),
            count: distinct.len(),
        });
    }
    let label_values: [String; 2] = {
        let mut values = distinct.into_iter().map(str::to_string);
        [values.next().unwrap(), values.next().unwrap()]
    };
    let labels = records
        .iter()
        .map(|r| u8::from(r[label_idx] == label_values[1]))
        .collect();

    let mut columns = Vec::with_capacity(header.len() - 1);
    for (c, name) in header.iter().enumerate() {
        if c == label_idx {
            continue;
        }
        let parses = records.iter().all(|r| r[c].trim().parse::<f64>().is_ok());
        let kind = match column_kinds.get(name) {
            Some(ColumnKind::Numeric) if !parses => {
                let bad = records
                    .iter()
                    .find(|r| r[c].trim().parse::<f64>().is_err())
                    .map(|r| r[c].clone())
                    .unwrap_or_default();
                return Err(IceError::NotNumeric {
                    column: name.clone(),
                    value: bad,
                });
            }
            Some(kind) => *kind,
            None if parses => ColumnKind::Numeric,
            None => ColumnKind::Nominal,
        };
        columns.push(Column {
            name: name.clone(),
            kind,
        });
    }
    let rows = records
        .into_iter()
        .map(|mut r| {
            r.remove(label_idx);
            r
        })
        .collect();

    Ok(RawTable {
        columns,
        rows,
        label_column: label_column.to_string(),
        label_values,
        labels,
    })
}

/// Header plus rows with every cell present. Used for unlabeled inputs too.
pub fn read_records<R: Read>(reader: R) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(IceError::EmptyTable);
    }
    let mut records = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        if rec.len() != header.len() {
            return Err(IceError::RaggedRow {
                line,
                expected: header.len(),
                found: rec.len(),
            });
        }
        let row: Vec<String> = rec.iter().map(|s| s.trim().to_string()).collect();
        if let Some(c) = row.iter().position(|s| s.is_empty()) {
            return Err(IceError::MissingCell {
                line,
                column: header[c].clone(),
            });
        }
        records.push(row);
    }
    if records.is_empty() {
        return Err(IceError::EmptyTable);
    }
    Ok((header, records))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NominalMode {
    Drop,
    OneHot,
}

impl std::str::FromStr for NominalMode {
    type Err = IceError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "drop" => Ok(NominalMode::Drop),
            "onehot" | "one-hot" => Ok(NominalMode::OneHot),
            other => Err(IceError::InvalidParameter(format!(
                "unknown nominal mode `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureColumn {
    Numeric {
        name: String,
    },
    Nominal {
        name: String,
        categories: Vec<String>,
    },
}

/// How raw columns map to numeric features. Fitted once on training data
/// and reused for anything scored later.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub mode: NominalMode,
    pub columns: Vec<FeatureColumn>,
}

impl FeatureSchema {
    pub fn fit(raw: &RawTable, mode: NominalMode) -> Result<Self> {
        let mut columns = Vec::new();
        for (c, col) in raw.columns.iter().enumerate() {
            match (col.kind, mode) {
                (ColumnKind::Numeric, _) => columns.push(FeatureColumn::Numeric {
                    name: col.name.clone(),
                }),
                (ColumnKind::Nominal, NominalMode::Drop) => {}
                (ColumnKind::Nominal, NominalMode::OneHot) => {
                    let categories: BTreeSet<&str> =
                        raw.rows.iter().map(|r| r[c].as_str()).collect();
                    columns.push(FeatureColumn::Nominal {
                        name: col.name.clone(),
                        categories: categories.into_iter().map(str::to_string).collect(),
                    });
                }
            }
        }
        if columns.is_empty() {
            return Err(IceError::NoFeatures);
        }
        Ok(FeatureSchema { mode, columns })
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.columns
            .iter()
            .flat_map(|c| match c {
                FeatureColumn::Numeric { name } => vec![name.clone()],
                FeatureColumn::Nominal { name, categories } => {
                    categories.iter().map(|v| format!("{name}={v}")).collect()
                }
            })
            .collect()
    }

    pub fn width(&self) -> usize {
        self.columns
            .iter()
            .map(|c| match c {
                FeatureColumn::Numeric { .. } => 1,
                FeatureColumn::Nominal { categories, .. } => categories.len(),
            })
            .sum()
    }

    /// Encode records whose header is `header`. Extra columns (such as a
    /// label) are ignored; unseen nominal values encode as all zeros.
    pub fn transform(&self, header: &[String], rows: &[Vec<String>]) -> Result<Array2<f64>> {
        let mut sources = Vec::with_capacity(self.columns.len());
        for col in &self.columns {
            let name = match col {
                FeatureColumn::Numeric { name } | FeatureColumn::Nominal { name, .. } => name,
            };
            let idx = header.iter().position(|h| h == name).ok_or_else(|| {
                IceError::InvalidData(format!("column `{name}` missing from input"))
            })?;
            sources.push(idx);
        }
        let mut x = Array2::zeros((rows.len(), self.width()));
        for (i, row) in rows.iter().enumerate() {
            let mut out = 0;
            for (col, &src) in self.columns.iter().zip(&sources) {
                let cell = &row[src];
                match col {
                    FeatureColumn::Numeric { name } => {
                        x[[i, out]] = cell.parse::<f64>().map_err(|_| IceError::NotNumeric {
                            column: name.clone(),
                            value: cell.clone(),
                        })?;
                        out += 1;
                    }
                    FeatureColumn::Nominal { categories, .. } => {
                        if let Ok(pos) = categories.binary_search(cell) {
                            x[[i, out + pos]] = 1.0;
                        }
                        out += categories.len();
                    }
                }
            }
        }
        Ok(x)
    }

    pub fn encode_table(&self, raw: &RawTable) -> Result<Dataset> {
        let header: Vec<String> = raw.columns.iter().map(|c| c.name.clone()).collect();
        let x = self.transform(&header, &raw.rows)?;
        Dataset::new(x, raw.labels.clone()).map(|d| d.with_feature_names(self.feature_names()))
    }
}

/// Expand (one-hot) or remove (drop) nominal columns.
pub fn encode_nominal(raw: &RawTable, mode: NominalMode) -> Result<Dataset> {
    FeatureSchema::fit(raw, mode)?.encode_table(raw)
}

/// Real-valued features with binary labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Vec<u8>,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Vec<u8>) -> Result<Self> {
        let (q, r) = x.dim();
        if q != y.len() {
            return Err(IceError::DimensionMismatch {
                expected: q,
                found: y.len(),
            });
        }
        if q < 2 {
            return Err(IceError::InvalidData(format!(
                "need at least 2 instances, got {q}"
            )));
        }
        if r == 0 {
            return Err(IceError::NoFeatures);
        }
        if y.iter().any(|&v| v > 1) {
            return Err(IceError::InvalidData("labels must be 0 or 1".into()));
        }
        if !has_both_classes(&y) {
            return Err(IceError::SingleClass("dataset contains one class".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(IceError::InvalidData("non-finite feature value".into()));
        }
        let feature_names = (0..r).map(|c| format!("f{c}")).collect();
        Ok(Dataset {
            x,
            y,
            feature_names,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Self {
        if names.len() == self.x.ncols() {
            self.feature_names = names;
        }
        self
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Rows `idx` in the given order. The result may contain a single class.
    pub fn rows(&self, idx: &[usize]) -> (Array2<f64>, Vec<u8>) {
        (
            self.x.select(Axis(0), idx),
            idx.iter().map(|&i| self.y[i]).collect(),
        )
    }
}

pub(crate) fn has_both_classes(y: &[u8]) -> bool {
    y.contains(&0) && y.contains(&1)
}

/// Column means and sample standard deviations (divisor n - 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Scaler {
    pub fn fit(x: ArrayView2<f64>) -> Result<Self> {
        let n = x.nrows();
        if n == 0 {
            return Err(IceError::EmptyTable);
        }
        let mut means = Vec::with_capacity(x.ncols());
        let mut stds = Vec::with_capacity(x.ncols());
        for col in x.columns() {
            let mean = col.sum() / n as f64;
            let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
            let std = if n > 1 {
                (ss / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            means.push(mean);
            stds.push(std);
        }
        Ok(Scaler { means, stds })
    }

    pub fn identity(dim: usize) -> Self {
        Scaler {
            means: vec![0.0; dim],
            stds: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.dim() {
            return Err(IceError::DimensionMismatch {
                expected: self.dim(),
                found: x.ncols(),
            });
        }
        let mut out = x.to_owned();
        for (c, mut col) in out.columns_mut().into_iter().enumerate() {
            let (m, s) = (self.means[c], self.stds[c]);
            col.mapv_inplace(|v| if s > 0.0 { (v - m) / s } else { 0.0 });
        }
        Ok(out)
    }

    pub fn transform_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(IceError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(&v, (&m, &s))| if s > 0.0 { (v - m) / s } else { 0.0 })
            .collect())
    }
}

/// Fit a scaler on `train` and apply it to both matrices. Constant columns
/// map to zero.
pub fn zscore_fit_apply(
    train: ArrayView2<f64>,
    other: ArrayView2<f64>,
) -> Result<(Scaler, Array2<f64>, Array2<f64>)> {
    let scaler = Scaler::fit(train)?;
    let a = scaler.transform(train)?;
    let b = scaler.transform(other)?;
    Ok((scaler, a, b))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub fold_of: Vec<usize>,
    /// Fold count actually used.
    pub k: usize,
    /// Fold count asked for; larger than `k` when a class was too small.
    pub requested_k: usize,
    pub seed: u64,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] != fold)
            .collect()
    }

    pub fn was_reduced(&self) -> bool {
        self.k < self.requested_k
    }
}

/// Stratified `k`-fold assignment. When the smaller class has fewer than
/// `k` members, `k` drops to that size and the reduction is recorded.
pub fn stratified_folds(y: &[u8], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(IceError::InvalidParameter(format!(
            "fold count must be >= 2, got {k}"
        )));
    }
    let n1 = y.iter().filter(|&&v| v == 1).count();
    let smallest = n1.min(y.len() - n1);
    let k_eff = k.min(smallest);
    if k_eff < 2 {
        return Err(IceError::InvalidParameter(format!(
            "smallest class has {smallest} instance(s); cannot build 2 stratified folds"
        )));
    }
    Ok(FoldAssignment {
        fold_of: assign_stratified(y, k_eff, seed),
        k: k_eff,
        requested_k: k,
        seed,
    })
}

/// Round-robin dealing of each class after a seeded shuffle. The dealing
/// position carries over between classes so fold sizes stay balanced even
/// when a class has fewer than `k` members.
pub(crate) fn assign_stratified(y: &[u8], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = seed::rng(seed);
    let mut fold_of = vec![0; y.len()];
    let mut pos = 0usize;
    for class in 0..=1u8 {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            fold_of[i] = pos % k;
            pos += 1;
        }
    }
    fold_of
}
