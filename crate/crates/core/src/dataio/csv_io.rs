// SPDX-License-Identifier: Apache-2.0

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DataError, FeatureMatrix, LabeledDataset};

/// Which column holds the 0/1 label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    /// Zero-based column index.
    Index(usize),
    /// Header name; requires a header row.
    Name(String),
}

fn io_err(path: &Path, source: std::io::Error) -> DataError {
    DataError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Loads a numeric CSV with a binary label column.
///
/// A first row containing any non-numeric field is treated as a header.
/// Rows are numbered from 1 in error messages, counting the header.
pub fn load_csv(path: &Path, label: &LabelColumn) -> Result<LabeledDataset, DataError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut records = reader.records();
    let first = match records.next() {
        Some(r) => r?,
        None => return Err(DataError::Empty),
    };
    let arity = first.len();
    let is_header = first.iter().any(|f| f.parse::<f64>().is_err());

    let label_idx = match label {
        LabelColumn::Index(i) => *i,
        LabelColumn::Name(name) => {
            if !is_header {
                return Err(DataError::UnknownColumn(format!("{name} (file has no header row)")));
            }
            first
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| DataError::UnknownColumn(name.clone()))?
        }
    };
    if label_idx >= arity {
        return Err(DataError::UnknownColumn(format!(
            "index {label_idx} with {arity} columns"
        )));
    }
    if arity < 2 {
        return Err(DataError::MalformedRow {
            row: 1,
            reason: "need at least one feature column besides the label".into(),
        });
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let data_rows = if is_header { None } else { Some(Ok(first)) };
    let offset = if is_header { 2 } else { 1 };
    for (i, rec) in data_rows.into_iter().chain(records).enumerate() {
        let row = i + offset;
        let rec = rec?;
        if rec.len() != arity {
            return Err(DataError::MalformedRow {
                row,
                reason: format!("expected {arity} fields, found {}", rec.len()),
            });
        }
        for (j, field) in rec.iter().enumerate() {
            if j == label_idx {
                match field {
                    "0" | "0.0" => labels.push(0),
                    "1" | "1.0" => labels.push(1),
                    other => {
                        return Err(DataError::NonBinaryLabel {
                            row,
                            value: other.to_string(),
                        })
                    }
                }
                continue;
            }
            let v: f64 = field.parse().map_err(|_| DataError::MalformedRow {
                row,
                reason: format!("column {j}: {field:?} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(DataError::MalformedRow {
                    row,
                    reason: format!("column {j}: non-finite value"),
                });
            }
            values.push(v);
        }
    }
    if labels.is_empty() {
        return Err(DataError::Empty);
    }
    let features = FeatureMatrix::new(labels.len(), arity - 1, values)?;
    LabeledDataset::new(features, labels)
}

fn header(cols: usize) -> Vec<String> {
    (0..cols).map(|j| format!("x{j}")).collect()
}

/// Writes features plus a trailing `label` column, with an `x0..` header.
pub fn write_labeled_csv(path: &Path, data: &LabeledDataset) -> Result<(), DataError> {
    let mut out = String::new();
    let mut cols = header(data.cols());
    cols.push("label".into());
    out.push_str(&cols.join(","));
    out.push('\n');
    for (row, y) in data.features().iter_rows().zip(data.labels()) {
        for v in row {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{y}\n"));
    }
    write_all(path, &out)
}

/// Writes a feature-only CSV with an `x0..` header.
pub fn write_features_csv(path: &Path, features: &FeatureMatrix) -> Result<(), DataError> {
    let mut out = header(features.cols()).join(",");
    out.push('\n');
    for row in features.iter_rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    write_all(path, &out)
}

fn write_all(path: &Path, contents: &str) -> Result<(), DataError> {
    let mut f = File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| io_err(path, e))
}
