// SPDX-License-Identifier: Apache-2.0

//! Entry points behind the `aafv` subcommands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, ExperimentConfig};
use crate::dataio::{synth_biased_shards, write_features_csv, write_labeled_csv, DataError, SynthSpec};
use crate::experiment::{run_experiment, ExperimentError};
use crate::ldp::{audit_epsilon, AuditOutcome, LdpError, Mechanism};
use crate::metrics::Report;
use crate::seed::SeedStream;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_AUDIT_VIOLATION: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
    #[error("audit failed: worst log-ratio {worst} exceeds limit {limit}")]
    AuditViolation { worst: String, limit: f64 },
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Validation(_) => EXIT_VALIDATION,
            CommandError::Runtime(_) => EXIT_RUNTIME,
            CommandError::AuditViolation { .. } => EXIT_AUDIT_VIOLATION,
        }
    }
}

impl From<ConfigError> for CommandError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => CommandError::Runtime(e.to_string()),
            _ => CommandError::Validation(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CommandError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(c) => c.into(),
            ExperimentError::Invalid(_) => CommandError::Validation(e.to_string()),
            _ => CommandError::Runtime(e.to_string()),
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CommandError {
    CommandError::Runtime(format!("{}: {e}", path.display()))
}

#[derive(Clone, Debug)]
pub struct RunArgs {
    pub config: PathBuf,
    /// Overrides the config's `output_dir`.
    pub out_dir: Option<PathBuf>,
    /// Worker threads; 0 picks one per core.
    pub parallel: usize,
}

/// Where a run writes its bundle: `--out-dir`, else `output_dir` resolved
/// against the config's directory.
pub fn resolve_out_dir(config: &ExperimentConfig, override_dir: Option<&Path>) -> Result<PathBuf, CommandError> {
    match (override_dir, &config.output_dir) {
        (Some(dir), _) => Ok(dir.to_path_buf()),
        (None, Some(dir)) => Ok(config.base_dir.join(dir)),
        (None, None) => Err(CommandError::Validation(
            "no output directory: pass --out-dir or set output_dir in the config".into(),
        )),
    }
}

/// Parses the config, runs every seed and scenario, writes the bundle.
pub fn cmd_run(args: &RunArgs) -> Result<(Report, PathBuf), CommandError> {
    let config = ExperimentConfig::from_path(&args.config)?;
    let out_dir = resolve_out_dir(&config, args.out_dir.as_deref())?;
    let report = run_experiment(&config, &out_dir, args.parallel)?;
    Ok((report, out_dir))
}

#[derive(Clone, Debug)]
pub struct AuditArgs {
    pub mechanism: String,
    pub epsilon: f64,
    pub samples: usize,
    pub bins: usize,
    /// Allowed excess of the binned log-ratio over epsilon.
    pub slack: f64,
    pub seed: u64,
    /// JSON report destination; printed to stdout when absent.
    pub out: Option<PathBuf>,
}

/// Inputs whose pairwise outputs are compared.
pub const AUDIT_GRID: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

/// Binning slack for [`cmd_audit_ldp`], large enough to absorb sampling
/// noise of sparse tail bins at 1e6 samples and 20 bins.
pub const DEFAULT_AUDIT_SLACK: f64 = 0.15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditPair {
    #[serde(flatten)]
    pub outcome: AuditOutcome,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema_version: u32,
    pub mechanism: String,
    pub epsilon: f64,
    pub samples: usize,
    pub bins: usize,
    pub slack: f64,
    pub limit: f64,
    pub seed: u64,
    pub pairs: Vec<AuditPair>,
    /// `None` when some pair has an unbounded ratio.
    pub worst_log_ratio: Option<f64>,
    pub pass: bool,
}

pub fn parse_mechanism(name: &str, epsilon: f64) -> Result<Mechanism, CommandError> {
    match name {
        "piecewise" => Ok(Mechanism::Piecewise { epsilon }),
        "laplace" => Ok(Mechanism::Laplace { epsilon }),
        "passthrough" => Ok(Mechanism::Passthrough { epsilon }),
        other => Err(CommandError::Validation(format!(
            "unknown mechanism {other:?}; expected piecewise, laplace or passthrough"
        ))),
    }
}

fn audit_failure(e: LdpError) -> CommandError {
    match e {
        LdpError::InvalidEpsilon(_) | LdpError::Audit(_) => CommandError::Validation(e.to_string()),
        _ => CommandError::Runtime(e.to_string()),
    }
}

/// Audits every pair of [`AUDIT_GRID`] inputs. The report is written (or
/// printed) before a violation is signalled.
pub fn cmd_audit_ldp(args: &AuditArgs) -> Result<AuditReport, CommandError> {
    let mechanism = parse_mechanism(&args.mechanism, args.epsilon)?;
    if !(args.slack.is_finite() && args.slack >= 0.0) {
        return Err(CommandError::Validation(format!(
            "slack must be >= 0, got {}",
            args.slack
        )));
    }
    // Validate the budget and sample counts before doing any work.
    mechanism.output_bound().map_err(audit_failure)?;
    if args.samples < 100_000 || args.bins == 0 {
        return Err(CommandError::Validation(format!(
            "need samples >= 100000 and bins >= 1, got {} and {}",
            args.samples, args.bins
        )));
    }
    let limit = args.epsilon + args.slack;
    let streams = SeedStream::new(args.seed).child("audit");
    let mut pairs = Vec::new();
    for (i, &a) in AUDIT_GRID.iter().enumerate() {
        for (j, &b) in AUDIT_GRID.iter().enumerate().skip(i + 1) {
            let mut rng = streams.indexed("a", i).indexed("b", j).rng();
            let outcome = audit_epsilon(&mechanism, a, b, args.samples, args.bins, &mut rng).map_err(audit_failure)?;
            let pass = outcome.within(limit);
            pairs.push(AuditPair { outcome, pass });
        }
    }
    let worst_log_ratio = pairs
        .iter()
        .map(|p| p.outcome.max_log_ratio)
        .try_fold(0.0f64, |m, r| r.map(|r| m.max(r)));
    let pass = pairs.iter().all(|p| p.pass);
    let report = AuditReport {
        schema_version: 1,
        mechanism: mechanism.name().into(),
        epsilon: args.epsilon,
        samples: args.samples,
        bins: args.bins,
        slack: args.slack,
        limit,
        seed: args.seed,
        pairs,
        worst_log_ratio,
        pass,
    };
    let mut json = serde_json::to_string_pretty(&report).map_err(|e| CommandError::Runtime(e.to_string()))?;
    json.push('\n');
    match &args.out {
        Some(path) => std::fs::write(path, &json).map_err(|e| io_error(path, e))?,
        None => print!("{json}"),
    }
    if !pass {
        return Err(CommandError::AuditViolation {
            worst: worst_log_ratio.map_or_else(|| "unbounded".into(), |w| format!("{w:.4}")),
            limit,
        });
    }
    Ok(report)
}

/// Files written by [`cmd_synth`], in order.
pub fn synth_file_names(n_clients: usize) -> Vec<String> {
    let mut names = vec!["test.csv".to_string(), "unlabeled.csv".to_string()];
    names.extend((0..n_clients).map(|k| format!("client_{k}.csv")));
    names
}

/// Writes `test.csv`, `unlabeled.csv` (features only) and one
/// `client_<k>.csv` per client.
pub fn cmd_synth(spec: &SynthSpec, out_dir: &Path) -> Result<Vec<PathBuf>, CommandError> {
    spec.validate().map_err(|e| CommandError::Validation(e.to_string()))?;
    let parts = synth_biased_shards(spec).map_err(|e| CommandError::Runtime(e.to_string()))?;
    std::fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;
    let names = synth_file_names(spec.n_clients);
    let paths: Vec<PathBuf> = names.iter().map(|n| out_dir.join(n)).collect();
    let runtime = |e: DataError| CommandError::Runtime(e.to_string());
    write_labeled_csv(&paths[0], &parts.test).map_err(runtime)?;
    write_features_csv(&paths[1], parts.unlabeled.features()).map_err(runtime)?;
    for (client, path) in parts.clients.iter().zip(&paths[2..]) {
        write_labeled_csv(path, client).map_err(runtime)?;
    }
    Ok(paths)
}

/// Reads a synth spec from TOML.
pub fn load_synth_spec(path: &Path) -> Result<SynthSpec, CommandError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let spec: SynthSpec = toml::from_str(&text).map_err(|e| CommandError::Validation(e.to_string()))?;
    Ok(spec)
}
