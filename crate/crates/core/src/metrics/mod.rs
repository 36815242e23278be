// SPDX-License-Identifier: Apache-2.0

//! Multi-seed aggregation, Welch's t-test and report emission.

mod report;
mod welch;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::learners::ModelKind;

pub use report::{
    emit_report, render_table, seed_results_csv, Comparison, LdpAccounting, Report, REPORT_SCHEMA_VERSION,
};
pub use welch::{ln_gamma, regularized_incomplete_beta, student_t_two_sided, welch_t_test, WelchTest};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("nothing to summarize")]
    Empty,
    #[error("sample {which} has {len} values, need at least 2")]
    TooFewSamples { which: char, len: usize },
    #[error("non-finite value in sample {which}")]
    NonFinite { which: char },
    #[error("accuracy {0} outside [0, 1]")]
    AccuracyRange(f64),
    #[error("i/o error at {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("report json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Aafv,
    Fedavg,
    Local,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Aafv, Scenario::Fedavg, Scenario::Local];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Aafv => "aafv",
            Scenario::Fedavg => "fedavg",
            Scenario::Local => "local",
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Final accuracy of one model in one scenario under one seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed_index: usize,
    pub seed: u64,
    pub scenario: Scenario,
    pub model: ModelKind,
    /// Roster position of the model.
    pub client: usize,
    pub accuracy: f64,
    /// Test accuracy after every round; empty for local training.
    pub curve: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: Scenario,
    pub model: ModelKind,
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single result.
    pub stddev: f64,
    /// `1.96 * stddev / sqrt(count)`.
    pub ci95_half_width: f64,
}

impl Summary {
    pub fn of(scenario: Scenario, model: ModelKind, values: &[f64]) -> Result<Self, MetricsError> {
        if values.is_empty() {
            return Err(MetricsError::Empty);
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stddev = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Ok(Self {
            scenario,
            model,
            count: values.len(),
            mean,
            stddev,
            ci95_half_width: 1.96 * stddev / n.sqrt(),
        })
    }
}

/// Accuracies grouped by scenario and model kind, in key order.
pub fn group_accuracies(results: &[SeedResult]) -> BTreeMap<(Scenario, ModelKind), Vec<f64>> {
    let mut groups: BTreeMap<_, Vec<f64>> = BTreeMap::new();
    for r in results {
        groups.entry((r.scenario, r.model)).or_default().push(r.accuracy);
    }
    groups
}

/// One summary per (scenario, model kind) group, ordered by scenario then
/// kind.
pub fn summarize(results: &[SeedResult]) -> Result<Vec<Summary>, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(r) = results.iter().find(|r| !(0.0..=1.0).contains(&r.accuracy)) {
        return Err(MetricsError::AccuracyRange(r.accuracy));
    }
    group_accuracies(results)
        .into_iter()
        .map(|((scenario, model), values)| Summary::of(scenario, model, &values))
        .collect()
}

#[cfg(test)]
mod tests;
