//! Tabular ordinal datasets: CSV loading, validation, random splits, and
//! k-fold partitions.
//!
//! A [`Dataset`] is immutable after construction, so splits and folds can be
//! shared freely across concurrent trial runners.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::derive_rng;

/// A table of `N` objects with `m` real attributes and ordinal labels in
/// `1..=n_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    objects: Vec<Vec<f64>>,
    labels: Vec<u32>,
    attr_names: Vec<String>,
    n_classes: u32,
}

impl Dataset {
    /// Build a dataset from rows and labels, validating every invariant:
    /// at least 2 rows, at least 1 attribute, finite attribute values,
    /// labels in `1..=max(labels)` with `max(labels) >= 2`.
    pub fn new(objects: Vec<Vec<f64>>, labels: Vec<u32>, attr_names: Vec<String>) -> Result<Self> {
        if objects.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "fewer than 2 rows ({} given)",
                objects.len()
            )));
        }
        if objects.len() != labels.len() {
            return Err(Error::InvalidInput(format!(
                "{} rows but {} labels",
                objects.len(),
                labels.len()
            )));
        }
        let m = attr_names.len();
        if m < 1 {
            return Err(Error::InvalidInput("no attribute columns".into()));
        }
        for (i, row) in objects.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidInput(format!(
                    "row {} has {} attributes, expected {}",
                    i + 1,
                    row.len(),
                    m
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "non-finite attribute value at row {}, column `{}`",
                    i + 1,
                    attr_names[j]
                )));
            }
        }
        if let Some(i) = labels.iter().position(|&l| l < 1) {
            return Err(Error::InvalidInput(format!("label below 1 at row {}", i + 1)));
        }
        let n_classes = *labels.iter().max().expect("non-empty labels");
        if n_classes < 2 {
            return Err(Error::InvalidInput(
                "all labels equal 1; at least 2 classes required".into(),
            ));
        }
        Ok(Dataset { objects, labels, attr_names, n_classes })
    }

    /// Number of rows `N`.
    pub fn n_rows(&self) -> usize {
        self.objects.len()
    }

    /// Number of attributes `m`.
    pub fn n_attrs(&self) -> usize {
        self.attr_names.len()
    }

    /// Class count `H` (the maximum label seen at load time, preserved by
    /// splits and folds).
    pub fn n_classes(&self) -> u32 {
        self.n_classes
    }

    /// Attribute row `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.objects[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.objects
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn attr_names(&self) -> &[String] {
        &self.attr_names
    }

    /// Number of distinct labels actually present.
    pub fn distinct_labels(&self) -> usize {
        let mut seen = vec![false; self.n_classes as usize + 1];
        let mut count = 0;
        for &l in &self.labels {
            if !seen[l as usize] {
                seen[l as usize] = true;
                count += 1;
            }
        }
        count
    }

    /// Row subset by index. Keeps the parent's class count and attribute
    /// names; subsets may be smaller than the load-time two-row minimum.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            objects: indices.iter().map(|&i| self.objects[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            attr_names: self.attr_names.clone(),
            n_classes: self.n_classes,
        }
    }
}

/// Which CSV column holds the label: a header name or a 0-based position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl Default for LabelColumn {
    fn default() -> Self {
        LabelColumn::Name("label".into())
    }
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// All-digit strings select a column by position, anything else by name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.parse::<usize>() {
            Ok(i) => Ok(LabelColumn::Index(i)),
            Err(_) => Ok(LabelColumn::Name(s.to_string())),
        }
    }
}

impl fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelColumn::Name(n) => write!(f, "{n}"),
            LabelColumn::Index(i) => write!(f, "{i}"),
        }
    }
}

/// Split protocol parameters: train fraction, root seed, trial count, and
/// fold count.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub n_trials: u32,
    pub n_folds: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { train_fraction: 0.8, seed: 42, n_trials: 30, n_folds: 5 }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidInput(format!(
                "train_fraction must lie in (0,1), got {}",
                self.train_fraction
            )));
        }
        if self.n_trials < 1 {
            return Err(Error::InvalidInput("n_trials must be >= 1".into()));
        }
        if self.n_folds < 2 {
            return Err(Error::InvalidInput("n_folds must be >= 2".into()));
        }
        Ok(())
    }
}

/// Load a dataset from a headered CSV file.
///
/// The label column must hold integers `>= 1`; every other column is parsed
/// as a 64-bit real. The class count is `max(labels)` and labels are kept
/// as given. Parse failures report the data row (1-based) and column.
pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => {
                Error::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()))
            }
            _ => Error::data(path, e.to_string()),
        })?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::data(path, format!("cannot read header row: {e}")))?
        .iter()
        .map(|h| h.to_string())
        .collect();

    let label_idx = match label {
        LabelColumn::Name(name) => headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::data(path, format!("label column `{name}` not found in header"))
        })?,
        LabelColumn::Index(i) => {
            if *i >= headers.len() {
                return Err(Error::data(
                    path,
                    format!("label column index {} out of range ({} columns)", i, headers.len()),
                ));
            }
            *i
        }
    };

    let attr_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(c, _)| *c != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut objects = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let row_no = r + 1; // first data row = row 1
        let record = record.map_err(|e| Error::data(path, format!("row {row_no}: {e}")))?;
        if record.len() != headers.len() {
            return Err(Error::data(
                path,
                format!("row {row_no}: {} cells, expected {}", record.len(), headers.len()),
            ));
        }
        let mut row = Vec::with_capacity(attr_names.len());
        for (c, cell) in record.iter().enumerate() {
            if cell.is_empty() {
                return Err(Error::data(
                    path,
                    format!("row {row_no}, column `{}`: missing value", headers[c]),
                ));
            }
            if c == label_idx {
                let l: i64 = cell.parse().map_err(|_| {
                    Error::data(
                        path,
                        format!(
                            "row {row_no}, column `{}`: label `{cell}` is not an integer",
                            headers[c]
                        ),
                    )
                })?;
                if l < 1 {
                    return Err(Error::data(path, format!("label below 1 at row {row_no}")));
                }
                labels.push(l as u32);
            } else {
                let v: f64 = cell.parse().map_err(|_| {
                    Error::data(
                        path,
                        format!(
                            "row {row_no}, column `{}`: cannot parse `{cell}` as a number",
                            headers[c]
                        ),
                    )
                })?;
                if !v.is_finite() {
                    return Err(Error::data(
                        path,
                        format!("row {row_no}, column `{}`: non-finite value `{cell}`", headers[c]),
                    ));
                }
                row.push(v);
            }
        }
        objects.push(row);
    }

    if objects.len() < 2 {
        return Err(Error::data(path, format!("fewer than 2 rows ({} given)", objects.len())));
    }
    Dataset::new(objects, labels, attr_names).map_err(|e| Error::data(path, e.to_string()))
}

/// Load a headered CSV of purely numeric columns (no label handling).
/// Used for prediction inputs.
pub fn load_rows_csv(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => {
                Error::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()))
            }
            _ => Error::data(path, e.to_string()),
        })?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::data(path, format!("cannot read header row: {e}")))?
        .iter()
        .map(|h| h.to_string())
        .collect();
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let row_no = r + 1;
        let record = record.map_err(|e| Error::data(path, format!("row {row_no}: {e}")))?;
        if record.len() != headers.len() {
            return Err(Error::data(
                path,
                format!("row {row_no}: {} cells, expected {}", record.len(), headers.len()),
            ));
        }
        let mut row = Vec::with_capacity(headers.len());
        for (c, cell) in record.iter().enumerate() {
            if cell.is_empty() {
                return Err(Error::data(
                    path,
                    format!("row {row_no}, column `{}`: missing value", headers[c]),
                ));
            }
            let v: f64 = cell.parse().map_err(|_| {
                Error::data(
                    path,
                    format!(
                        "row {row_no}, column `{}`: cannot parse `{cell}` as a number",
                        headers[c]
                    ),
                )
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    Ok((headers, rows))
}

/// Deterministic random train/test split for one trial.
///
/// The partition is a pure function of `(spec.seed, trial)`: the row set is
/// shuffled, the first `round(train_fraction * N)` rows (clamped so both
/// sides are non-empty) become the training set, and both sides keep the
/// original row order.
pub fn random_split(ds: &Dataset, spec: &SplitSpec, trial: u32) -> Result<(Dataset, Dataset)> {
    spec.validate()?;
    if trial >= spec.n_trials {
        return Err(Error::InvalidInput(format!(
            "trial {} out of range 0..{}",
            trial, spec.n_trials
        )));
    }
    Ok(random_split_attempt(ds, spec, trial, 0))
}

/// Split for `(trial, attempt)`. Attempts above 0 re-derive the shuffle so a
/// degenerate split (single-class training side) can be retried.
pub(crate) fn random_split_attempt(
    ds: &Dataset,
    spec: &SplitSpec,
    trial: u32,
    attempt: u32,
) -> (Dataset, Dataset) {
    let n = ds.n_rows();
    let mut rng = derive_rng(spec.seed, &[u64::from(trial), u64::from(attempt)]);
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng);
    let n_train = ((spec.train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut train_idx = indices[..n_train].to_vec();
    let mut test_idx = indices[n_train..].to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    (ds.subset(&train_idx), ds.subset(&test_idx))
}

/// Deterministic k-fold partition: disjoint validation folds whose sizes
/// differ by at most one and whose union is the full row set.
pub fn kfold(ds: &Dataset, n_folds: usize, seed: u64) -> Result<Vec<(Dataset, Dataset)>> {
    let n = ds.n_rows();
    if n_folds < 2 {
        return Err(Error::InvalidInput("n_folds must be >= 2".into()));
    }
    if n_folds > n {
        return Err(Error::InvalidInput(format!("n_folds {n_folds} exceeds row count {n}")));
    }
    let mut rng = derive_rng(seed, &[0x6b66_6f6c_64]);
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng);

    let base = n / n_folds;
    let extra = n % n_folds;
    let mut folds = Vec::with_capacity(n_folds);
    let mut start = 0;
    for f in 0..n_folds {
        let size = base + usize::from(f < extra);
        let mut val_idx = indices[start..start + size].to_vec();
        let mut train_idx: Vec<usize> =
            indices[..start].iter().chain(&indices[start + size..]).copied().collect();
        val_idx.sort_unstable();
        train_idx.sort_unstable();
        folds.push((ds.subset(&train_idx), ds.subset(&val_idx)));
        start += size;
    }
    Ok(folds)
}
