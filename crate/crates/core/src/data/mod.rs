//! Datasets, scaling, imbalance statistics and stratified splitting.

mod io;
mod scale;
mod split;
pub mod synthetic;

pub use io::{load_csv, read_csv, write_csv, LabelColumn};
pub use scale::{fit_minmax, fit_zscore, MinMaxScaler, Scaling, ZScoreScaler};
pub use split::{stratified_kfold, subsample_fraction, Fold, SplitPlan};

use crate::error::{Error, Result};

/// Row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Dimension {
                op: "matrix",
                expected: format!("{rows}x{cols} = {} values", rows * cols),
                got: format!("{} values", data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension {
                op: "matrix",
                expected: format!("{cols} columns per row"),
                got: "ragged rows".into(),
            });
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.cols {
            return Err(Error::Dimension {
                op: "push_row",
                expected: format!("{} columns", self.cols),
                got: format!("{}", row.len()),
            });
        }
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.iter_rows().map(move |r| r[j])
    }
}

/// Labeled tabular data. Label 1 is the minority (positive) class.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub features: Matrix,
    pub labels: Vec<u8>,
    pub feature_names: Vec<String>,
    pub scaling: Scaling,
}

impl Dataset {
    /// Builds a dataset and checks its invariants: finite features, binary
    /// labels, both classes present.
    pub fn new(name: impl Into<String>, features: Matrix, labels: Vec<u8>) -> Result<Self> {
        let ds = Self::unchecked(name, features, labels)?;
        ds.validate()?;
        Ok(ds)
    }

    /// As [`Dataset::new`] but allows a single class; used for generated
    /// training sets, which are not required to contain both labels.
    pub fn unchecked(name: impl Into<String>, features: Matrix, labels: Vec<u8>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Dimension {
                op: "dataset",
                expected: format!("{} labels", features.rows()),
                got: format!("{}", labels.len()),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Label(format!("label {bad} is not in {{0, 1}}")));
        }
        if let Some(pos) = features.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::Contract(format!(
                "non-finite feature at row {}, column {}",
                pos / features.cols().max(1),
                pos % features.cols().max(1)
            )));
        }
        let feature_names = (0..features.cols()).map(|j| format!("x{j}")).collect();
        Ok(Self {
            name: name.into(),
            features,
            labels,
            feature_names,
            scaling: Scaling::None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let (neg, pos) = self.class_counts();
        if pos == 0 || neg == 0 {
            return Err(Error::DegenerateDataset(format!(
                "`{}` needs both classes, found {neg} negative and {pos} positive",
                self.name
            )));
        }
        Ok(())
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.features.cols() {
            return Err(Error::Dimension {
                op: "feature names",
                expected: format!("{}", self.features.cols()),
                got: format!("{}", names.len()),
            });
        }
        self.feature_names = names;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// `(N₋, N₊)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        (self.labels.len() - pos, pos)
    }

    pub fn indices_of(&self, label: u8) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == label).collect()
    }

    pub fn minority_fraction(&self) -> f64 {
        let (_, pos) = self.class_counts();
        pos as f64 / self.len() as f64
    }

    /// Rows at `idx`, in that order. Scaling state and names are kept.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            scaling: self.scaling.clone(),
        }
    }

    /// Appends one row.
    pub fn push(&mut self, row: &[f64], label: u8) -> Result<()> {
        if label > 1 {
            return Err(Error::Label(format!("label {label} is not in {{0, 1}}")));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract("non-finite feature in appended row".into()));
        }
        self.features.push_row(row)?;
        self.labels.push(label);
        Ok(())
    }

    /// Labels as reals, for use as regression targets.
    pub fn labels_f64(&self) -> Vec<f64> {
        self.labels.iter().map(|&l| f64::from(l)).collect()
    }
}

/// `N₋ / N₊`.
pub fn imbalance_ratio(ds: &Dataset) -> Result<f64> {
    let (neg, pos) = ds.class_counts();
    if pos == 0 {
        return Err(Error::DegenerateDataset(format!("`{}` has no minority samples", ds.name)));
    }
    Ok(neg as f64 / pos as f64)
}
