// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::{DataError, FeatureMatrix};

/// Per-column mean and population standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub means: Vec<f64>,
    pub stddevs: Vec<f64>,
}

/// Fits z-score statistics. A zero-variance column gets stddev 1, so it
/// becomes all zeros after centering and the column count is preserved.
pub fn zscore_fit(data: &FeatureMatrix) -> Result<NormStats, DataError> {
    if data.rows() < 2 {
        return Err(DataError::Invalid(format!(
            "z-score fit needs at least 2 rows, got {}",
            data.rows()
        )));
    }
    let n = data.rows() as f64;
    let cols = data.cols();
    let mut means = vec![0.0; cols];
    for row in data.iter_rows() {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; cols];
    for row in data.iter_rows() {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&means) {
            *s += (v - m) * (v - m);
        }
    }
    let stddevs = var
        .into_iter()
        .map(|s| {
            let sd = (s / n).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    Ok(NormStats { means, stddevs })
}

impl NormStats {
    pub fn identity(cols: usize) -> Self {
        Self {
            means: vec![0.0; cols],
            stddevs: vec![1.0; cols],
        }
    }

    pub fn cols(&self) -> usize {
        self.means.len()
    }

    fn check(&self, data: &FeatureMatrix) -> Result<(), DataError> {
        if data.cols() != self.cols() {
            return Err(DataError::DimensionMismatch {
                expected: self.cols(),
                actual: data.cols(),
            });
        }
        Ok(())
    }

    /// `(x - mean) / stddev`, column-wise.
    pub fn apply(&self, data: &FeatureMatrix) -> Result<FeatureMatrix, DataError> {
        self.check(data)?;
        Ok(data.map_values(|j, v| (v - self.means[j]) / self.stddevs[j]))
    }

    /// Inverse of [`NormStats::apply`].
    pub fn invert(&self, data: &FeatureMatrix) -> Result<FeatureMatrix, DataError> {
        self.check(data)?;
        Ok(data.map_values(|j, v| v * self.stddevs[j] + self.means[j]))
    }
}
