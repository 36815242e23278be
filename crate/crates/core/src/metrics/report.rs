// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{group_accuracies, welch_t_test, MetricsError, Scenario, SeedResult, Summary};
use crate::learners::ModelKind;

/// Bumped on any incompatible change to [`Report`]'s JSON shape.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// How often each privacy mechanism was invoked. Budgets are per
/// invocation; no composed total is claimed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdpAccounting {
    pub epsilon_per_invocation: f64,
    /// Piecewise invocations by one AAFV client in one round (one per
    /// public row).
    pub piecewise_per_client_round: usize,
    pub rounds: usize,
    pub piecewise_per_client: usize,
    /// Laplace-perturbed parameter uploads by one FedAvg client.
    pub laplace_uploads_per_client: usize,
    pub fedavg_clip: f64,
}

/// Welch test of AAFV against a baseline scenario for one model kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub model: ModelKind,
    pub baseline: Scenario,
    pub aafv_mean: f64,
    pub baseline_mean: f64,
    /// `None` when both samples are constant with different means.
    pub t: Option<f64>,
    pub df: f64,
    pub p: f64,
}

impl Comparison {
    /// All comparisons the grouped results support, ordered by baseline then
    /// kind. Groups with fewer than two results are skipped.
    pub fn collect_all(results: &[SeedResult]) -> Vec<Comparison> {
        let groups = group_accuracies(results);
        let mut out = Vec::new();
        for baseline in [Scenario::Fedavg, Scenario::Local] {
            for ((scenario, model), aafv) in &groups {
                if *scenario != Scenario::Aafv {
                    continue;
                }
                let Some(other) = groups.get(&(baseline, *model)) else {
                    continue;
                };
                let Ok(w) = welch_t_test(aafv, other) else {
                    continue;
                };
                out.push(Comparison {
                    model: *model,
                    baseline,
                    aafv_mean: mean(aafv),
                    baseline_mean: mean(other),
                    t: w.t.is_finite().then_some(w.t),
                    df: w.df,
                    p: w.p,
                });
            }
        }
        out
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// The machine-readable summary of a run. Its JSON form is documented in
/// `docs/report-schema.md`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub software_version: String,
    /// The fully resolved configuration.
    pub config: serde_json::Value,
    pub epsilon: f64,
    pub tau: f64,
    pub master_seed: u64,
    /// Derived per-run seeds, by seed index.
    pub seeds: Vec<u64>,
    pub ldp: LdpAccounting,
    pub summaries: Vec<Summary>,
    pub comparisons: Vec<Comparison>,
    /// Mean p-value across model kinds, per baseline scenario.
    pub mean_p_value: BTreeMap<Scenario, f64>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn mean_p_values(comparisons: &[Comparison]) -> BTreeMap<Scenario, f64> {
        let mut acc: BTreeMap<Scenario, Vec<f64>> = BTreeMap::new();
        for c in comparisons {
            acc.entry(c.baseline).or_default().push(c.p);
        }
        acc.into_iter().map(|(k, v)| (k, mean(&v))).collect()
    }

    pub fn summary(&self, scenario: Scenario, model: ModelKind) -> Option<&Summary> {
        self.summaries
            .iter()
            .find(|s| s.scenario == scenario && s.model == model)
    }

    pub fn to_json(&self) -> Result<String, MetricsError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self, MetricsError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Aligned plain-text rendering of the summaries and comparisons.
pub fn render_table(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "epsilon = {}  tau = {}  seeds = {}",
        report.epsilon,
        report.tau,
        report.seeds.len()
    );
    let _ = writeln!(
        out,
        "{:<8} {:<11} {:>5} {:>8} {:>8} {:>8}",
        "scenario", "model", "n", "mean", "stddev", "ci95"
    );
    for s in &report.summaries {
        let _ = writeln!(
            out,
            "{:<8} {:<11} {:>5} {:>8.4} {:>8.4} {:>8.4}",
            s.scenario.name(),
            s.model.name(),
            s.count,
            s.mean,
            s.stddev,
            s.ci95_half_width
        );
    }
    if !report.comparisons.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<11} {:<8} {:>8} {:>8} {:>9} {:>8} {:>10}",
            "model", "vs", "aafv", "other", "t", "df", "p"
        );
        for c in &report.comparisons {
            let t = c.t.map_or_else(|| "inf".to_string(), |t| format!("{t:.3}"));
            let _ = writeln!(
                out,
                "{:<11} {:<8} {:>8.4} {:>8.4} {:>9} {:>8.2} {:>10.3e}",
                c.model.name(),
                c.baseline.name(),
                c.aafv_mean,
                c.baseline_mean,
                t,
                c.df,
                c.p
            );
        }
        for (baseline, p) in &report.mean_p_value {
            let _ = writeln!(out, "mean p vs {baseline}: {p:.3e}");
        }
    }
    out
}

/// One row per result: `seed_index,seed,scenario,model,client,accuracy`.
pub fn seed_results_csv(results: &[SeedResult]) -> String {
    let mut out = String::from("seed_index,seed,scenario,model,client,accuracy\n");
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.seed_index, r.seed, r.scenario, r.model, r.client, r.accuracy
        );
    }
    out
}

fn write(path: PathBuf, body: &str) -> Result<(), MetricsError> {
    std::fs::write(&path, body).map_err(|source| MetricsError::Io { path, source })
}

/// Writes `report.json` and `summary.txt` into `dir`.
pub fn emit_report(report: &Report, dir: &Path) -> Result<(), MetricsError> {
    write(dir.join("report.json"), &report.to_json()?)?;
    write(dir.join("summary.txt"), &render_table(report))
}
