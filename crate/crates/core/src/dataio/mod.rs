// SPDX-License-Identifier: Apache-2.0

//! Tabular binary-classification data: matrices, labeled and unlabeled
//! datasets, CSV I/O, normalization, splitting and synthesis.

mod csv_io;
mod normalize;
mod split;
mod synth;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

pub use csv_io::{load_csv, write_features_csv, write_labeled_csv, LabelColumn};
pub use normalize::{zscore_fit, NormStats};
pub use split::{split, SplitParts, SplitPlan};
pub use synth::{synth_biased_shards, SynthSpec};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("file is empty")]
    Empty,
    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("row {row}: label {value:?} is not 0 or 1")]
    NonBinaryLabel { row: usize, value: String },
    #[error("label column {0:?} not found")]
    UnknownColumn(String),
    #[error("dimension mismatch: expected {expected} columns, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid data: {0}")]
    Invalid(String),
}

/// Row-major `rows x cols` matrix of finite reals.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    /// Builds a matrix with at least one row and one column.
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self, DataError> {
        if rows == 0 || cols == 0 {
            return Err(DataError::Invalid(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        Self::with_rows(rows, cols, values)
    }

    /// A matrix with no rows; only produced for fully-abstained pseudo sets.
    pub fn empty(cols: usize) -> Self {
        Self {
            rows: 0,
            cols,
            values: Vec::new(),
        }
    }

    fn with_rows(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self, DataError> {
        if values.len() != rows * cols {
            return Err(DataError::Invalid(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(DataError::Invalid(format!(
                "non-finite value at row {}, column {}",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, DataError> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(DataError::DimensionMismatch {
                expected: cols,
                actual: bad.len(),
            });
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on a zero chunk size; cols is >= 1 for any
        // constructed matrix, and an empty matrix has no values to chunk.
        self.values.chunks_exact(self.cols.max(1))
    }

    /// Gathers the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            values,
        }
    }

    /// Stacks matrices vertically.
    pub fn vstack(parts: &[&FeatureMatrix]) -> Result<Self, DataError> {
        let cols = parts.first().map_or(0, |m| m.cols);
        let mut values = Vec::new();
        let mut rows = 0;
        for m in parts {
            if m.cols != cols {
                return Err(DataError::DimensionMismatch {
                    expected: cols,
                    actual: m.cols,
                });
            }
            values.extend_from_slice(&m.values);
            rows += m.rows;
        }
        Ok(Self { rows, cols, values })
    }

    pub(crate) fn map_values(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        let cols = self.cols;
        let values = self.values.iter().enumerate().map(|(i, &v)| f(i % cols, v)).collect();
        Self {
            rows: self.rows,
            cols,
            values,
        }
    }
}

/// Features with binary labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    features: FeatureMatrix,
    labels: Vec<u8>,
}

impl LabeledDataset {
    pub fn new(features: FeatureMatrix, labels: Vec<u8>) -> Result<Self, DataError> {
        if labels.len() != features.rows() {
            return Err(DataError::Invalid(format!(
                "{} labels for {} rows",
                labels.len(),
                features.rows()
            )));
        }
        if let Some(pos) = labels.iter().position(|&y| y > 1) {
            return Err(DataError::NonBinaryLabel {
                row: pos,
                value: labels[pos].to_string(),
            });
        }
        Ok(Self { features, labels })
    }

    pub fn empty(cols: usize) -> Self {
        Self {
            features: FeatureMatrix::empty(cols),
            labels: Vec::new(),
        }
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn cols(&self) -> usize {
        self.features.cols()
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn concat(parts: &[&LabeledDataset]) -> Result<Self, DataError> {
        let feats: Vec<&FeatureMatrix> = parts.iter().map(|d| &d.features).collect();
        Ok(Self {
            features: FeatureMatrix::vstack(&feats)?,
            labels: parts.iter().flat_map(|d| d.labels.iter().copied()).collect(),
        })
    }

    pub fn positive_rate(&self) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        self.labels.iter().map(|&y| f64::from(y)).sum::<f64>() / self.labels.len() as f64
    }

    pub(crate) fn with_features(&self, features: FeatureMatrix) -> Self {
        Self {
            features,
            labels: self.labels.clone(),
        }
    }
}

/// Ground-truth labels of the public set, kept for diagnostics only.
///
/// Every read goes through [`UnlabeledDataset::diagnostic_labels`], which
/// bumps a counter shared by all clones, so a run can prove afterwards that
/// nothing consulted them.
#[derive(Clone, Debug, Default)]
struct SealedLabels {
    labels: Option<Arc<Vec<u8>>>,
    reads: Arc<AtomicUsize>,
}

/// The public dataset: features only, as far as the protocol is concerned.
#[derive(Clone, Debug)]
pub struct UnlabeledDataset {
    features: FeatureMatrix,
    sealed: SealedLabels,
}

impl PartialEq for UnlabeledDataset {
    fn eq(&self, other: &Self) -> bool {
        self.features == other.features && self.sealed.labels == other.sealed.labels
    }
}

impl UnlabeledDataset {
    pub fn new(features: FeatureMatrix) -> Self {
        Self {
            features,
            sealed: SealedLabels::default(),
        }
    }

    /// Drops the labels of a labeled set into the sealed diagnostic channel.
    pub fn from_labeled(data: LabeledDataset) -> Self {
        Self {
            features: data.features,
            sealed: SealedLabels {
                labels: Some(Arc::new(data.labels)),
                reads: Arc::default(),
            },
        }
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }

    /// Hidden ground truth, for measuring pseudo-label quality in tests and
    /// diagnostics. Never called on the protocol path.
    pub fn diagnostic_labels(&self) -> Option<&[u8]> {
        self.sealed.reads.fetch_add(1, Ordering::SeqCst);
        self.sealed.labels.as_deref().map(Vec::as_slice)
    }

    /// How many times the sealed labels have been read, across all clones.
    pub fn diagnostic_reads(&self) -> usize {
        self.sealed.reads.load(Ordering::SeqCst)
    }

    pub(crate) fn with_features(&self, features: FeatureMatrix) -> Self {
        Self {
            features,
            sealed: self.sealed.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_rejects_non_finite_and_empty() {
        assert!(FeatureMatrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(FeatureMatrix::new(1, 1, vec![f64::INFINITY]).is_err());
        assert!(FeatureMatrix::new(0, 2, vec![]).is_err());
        assert!(FeatureMatrix::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn labels_must_be_binary_and_aligned() {
        let m = FeatureMatrix::new(2, 1, vec![0.0, 1.0]).unwrap();
        assert!(LabeledDataset::new(m.clone(), vec![0, 2]).is_err());
        assert!(LabeledDataset::new(m.clone(), vec![0]).is_err());
        assert!(LabeledDataset::new(m, vec![0, 1]).is_ok());
    }

    #[test]
    fn sealed_reads_are_counted_across_clones() {
        let m = FeatureMatrix::new(2, 1, vec![0.0, 1.0]).unwrap();
        let u = UnlabeledDataset::from_labeled(LabeledDataset::new(m, vec![1, 0]).unwrap());
        let copy = u.clone();
        assert_eq!(u.diagnostic_reads(), 0);
        assert_eq!(copy.diagnostic_labels(), Some(&[1u8, 0][..]));
        assert_eq!(u.diagnostic_reads(), 1);
    }

    #[test]
    fn select_and_stack() {
        let m = FeatureMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let s = m.select(&[2, 0]);
        assert_eq!(s.values(), &[5.0, 6.0, 1.0, 2.0]);
        let st = FeatureMatrix::vstack(&[&s, &FeatureMatrix::empty(2), &m]).unwrap();
        assert_eq!(st.rows(), 5);
        assert!(FeatureMatrix::vstack(&[&m, &FeatureMatrix::empty(3)]).is_err());
    }
}
