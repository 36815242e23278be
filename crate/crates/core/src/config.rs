// SPDX-License-Identifier: Apache-2.0

//! Experiment configuration.
//!
//! A config is a single TOML file. Unknown keys anywhere are errors, and
//! validation reports every problem it finds rather than stopping at the
//! first. `epsilon` and `tau` have no defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataio::{LabelColumn, SynthSpec};
use crate::learners::{Arch, ModelKind, TrainParams};
use crate::metrics::Scenario;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

impl ConfigError {
    /// The individual validation problems, if this is a validation error.
    pub fn problems(&self) -> &[String] {
        match self {
            ConfigError::Invalid(p) => p,
            _ => &[],
        }
    }
}

fn default_seed_count() -> usize {
    1
}
fn default_scenarios() -> Vec<Scenario> {
    Scenario::ALL.to_vec()
}
fn default_e_com() -> usize {
    30
}
fn default_epochs() -> usize {
    300
}
fn default_epochs_per_round() -> usize {
    10
}
fn default_clip() -> f64 {
    1.0
}

/// How the FedAvg baseline forms its federations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FedAvgFederation {
    /// One federation per distinct roster kind: every client trains a copy
    /// of that kind on its own shard.
    #[default]
    PerKind,
    /// Federate the roster as given; it must be homogeneous.
    Roster,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FedAvgConfig {
    /// Per-coordinate clipping bound applied before Laplace noise.
    #[serde(default = "default_clip")]
    pub clip: f64,
    #[serde(default)]
    pub federation: FedAvgFederation,
}

impl Default for FedAvgConfig {
    fn default() -> Self {
        Self {
            clip: default_clip(),
            federation: FedAvgFederation::default(),
        }
    }
}

/// Synthetic data settings. Without `seed`, every run draws its own data
/// from the run seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_clients: usize,
    pub bias_strength: f64,
    #[serde(default = "default_label_noise")]
    pub label_noise: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_label_noise() -> f64 {
    SynthSpec::default().label_noise
}

impl SynthConfig {
    pub fn spec(&self, run_seed: u64) -> SynthSpec {
        SynthSpec {
            n_samples: self.n_samples,
            n_features: self.n_features,
            n_clients: self.n_clients,
            bias_strength: self.bias_strength,
            seed: self.seed.unwrap_or(run_seed),
            label_noise: self.label_noise,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetConfig {
    /// `path` is relative to the config file's directory.
    Csv {
        path: PathBuf,
        label_column: LabelColumn,
    },
    Synth(SynthConfig),
}

/// Row counts of a CSV split; the shuffle seed is derived per run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub test_count: usize,
    pub unlabeled_count: usize,
    pub client_counts: Vec<usize>,
}

/// One client's model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosterEntry {
    pub kind: ModelKind,
    #[serde(default)]
    pub hidden_dim: Option<usize>,
    #[serde(default)]
    pub train: TrainParams,
}

impl RosterEntry {
    pub fn arch(&self, input_dim: usize) -> Arch {
        Arch::for_kind(self.kind, input_dim, self.hidden_dim)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_seed_count")]
    pub seed_count: usize,
    #[serde(default = "default_scenarios")]
    pub scenarios: Vec<Scenario>,
    pub epsilon: f64,
    pub tau: f64,
    #[serde(default = "default_e_com")]
    pub e_com: usize,
    /// AAFV pre-training epochs.
    #[serde(default = "default_epochs")]
    pub pretrain_epochs: usize,
    /// Epochs of the isolated baseline.
    #[serde(default = "default_epochs")]
    pub local_epochs: usize,
    /// Epochs per round for AAFV revisits and FedAvg local updates.
    #[serde(default = "default_epochs_per_round")]
    pub local_epochs_per_round: usize,
    #[serde(default)]
    pub fedavg: FedAvgConfig,
    /// Overridden by `--out-dir`. Not part of the echoed config.
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub split: Option<SplitConfig>,
    pub roster: Vec<RosterEntry>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    /// Reads, parses and validates a config file.
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base)
    }

    /// Parses and validates config text; relative paths resolve against
    /// `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut config: ExperimentConfig = toml::from_str(text)?;
        config.base_dir = base_dir.to_path_buf();
        config.validate()?;
        Ok(config)
    }

    pub fn client_count(&self) -> usize {
        match (&self.dataset, &self.split) {
            (DatasetConfig::Synth(s), _) => s.n_clients,
            (DatasetConfig::Csv { .. }, Some(split)) => split.client_counts.len(),
            (DatasetConfig::Csv { .. }, None) => 0,
        }
    }

    pub fn runs(&self, scenario: Scenario) -> bool {
        self.scenarios.contains(&scenario)
    }

    /// Location of a CSV dataset.
    pub fn dataset_path(&self) -> Option<PathBuf> {
        match &self.dataset {
            DatasetConfig::Csv { path, .. } => Some(self.base_dir.join(path)),
            DatasetConfig::Synth(_) => None,
        }
    }

    /// The resolved config as JSON, with every default filled in.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Checks every constraint and returns all violations together.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut p = Vec::new();
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            p.push(format!("epsilon must be finite and > 0, got {}", self.epsilon));
        }
        if !(self.tau > 0.0 && self.tau < 0.5) {
            p.push(format!("tau must lie in the open interval (0, 0.5), got {}", self.tau));
        }
        if self.seed_count == 0 {
            p.push("seed_count must be >= 1".into());
        }
        if self.scenarios.is_empty() {
            p.push("scenarios must not be empty".into());
        }
        for s in Scenario::ALL {
            if self.scenarios.iter().filter(|x| **x == s).count() > 1 {
                p.push(format!("scenario {s} listed more than once"));
            }
        }
        if !(self.fedavg.clip.is_finite() && self.fedavg.clip > 0.0) {
            p.push(format!("fedavg.clip must be finite and > 0, got {}", self.fedavg.clip));
        }

        match (&self.dataset, &self.split) {
            (DatasetConfig::Csv { .. }, None) => p.push("a csv dataset needs a [split] section".into()),
            (DatasetConfig::Csv { .. }, Some(split)) => {
                if split.test_count == 0 {
                    p.push("split.test_count must be >= 1".into());
                }
                if split.unlabeled_count == 0 {
                    p.push("split.unlabeled_count must be >= 1".into());
                }
                if split.client_counts.contains(&0) {
                    p.push("split.client_counts entries must be >= 1".into());
                }
            }
            (DatasetConfig::Synth(_), Some(_)) => {
                p.push("[split] is not used with a synth dataset; the generator fixes the split".into())
            }
            (DatasetConfig::Synth(s), None) => {
                if let Err(e) = s.spec(0).validate() {
                    p.push(format!("dataset: {e}"));
                }
            }
        }

        let federated = self.runs(Scenario::Aafv) || self.runs(Scenario::Fedavg);
        let min = if federated { 2 } else { 1 };
        if self.roster.len() < min {
            p.push(format!(
                "roster needs at least {min} entries for the requested scenarios, got {}",
                self.roster.len()
            ));
        }
        let clients = self.client_count();
        if clients != 0 && clients != self.roster.len() {
            p.push(format!(
                "roster has {} entries but the dataset defines {clients} clients",
                self.roster.len()
            ));
        }
        for (i, r) in self.roster.iter().enumerate() {
            if let Err(e) = r.train.validate() {
                p.push(format!("roster[{i}]: {e}"));
            }
            match (r.kind, r.hidden_dim) {
                (ModelKind::Mlp, Some(0)) => p.push(format!("roster[{i}]: hidden_dim must be >= 1")),
                (ModelKind::Mlp, _) | (_, None) => {}
                (kind, Some(_)) => p.push(format!("roster[{i}]: hidden_dim only applies to mlp, not {kind}")),
            }
        }
        if self.runs(Scenario::Fedavg)
            && self.fedavg.federation == FedAvgFederation::Roster
            && self.roster.windows(2).any(|w| w[0] != w[1])
        {
            p.push(
                "fedavg.federation = \"roster\" needs a homogeneous roster (same kind and hyperparameters); \
                 FedAvg cannot average heterogeneous models"
                    .into(),
            );
        }

        if p.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(p))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
epsilon = 1.0
tau = 0.3

[dataset]
source = "synth"
n_samples = 300
n_features = 4
n_clients = 2
bias_strength = 0.5

[[roster]]
kind = "logistic"

[[roster]]
kind = "svm"
"#;

    fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        ExperimentConfig::from_toml(text, Path::new("."))
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.seed_count, 1);
        assert_eq!(c.e_com, 30);
        assert_eq!(c.pretrain_epochs, 300);
        assert_eq!(c.local_epochs_per_round, 10);
        assert_eq!(c.scenarios, Scenario::ALL.to_vec());
        assert_eq!(c.roster[0].train, TrainParams::default());
        let echo = c.echo();
        assert_eq!(echo["fedavg"]["clip"], 1.0);
        assert_eq!(echo["fedavg"]["federation"], "per_kind");
        assert_eq!(echo["roster"][1]["train"]["batch_size"], 32);
        assert_eq!(echo["dataset"]["label_noise"], 0.3);
        assert!(echo.get("output_dir").is_none());
    }

    #[test]
    fn tau_outside_the_open_half_interval() {
        let err = parse(&MINIMAL.replace("tau = 0.3", "tau = 0.6")).unwrap_err();
        assert!(err.problems().iter().any(|m| m.contains("(0, 0.5)")), "{err}");
    }

    #[test]
    fn all_problems_are_reported_together() {
        let text = MINIMAL
            .replace("tau = 0.3", "tau = 0.5\nseed_count = 0")
            .replace("epsilon = 1.0", "epsilon = 0.0");
        let err = parse(&text).unwrap_err();
        assert_eq!(err.problems().len(), 3, "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            parse(&format!("epsilom = 2.0\n{MINIMAL}")),
            Err(ConfigError::Parse(_))
        ));
        let nested = MINIMAL.replace("kind = \"svm\"", "kind = \"svm\"\nlearnig_rate = 0.1");
        assert!(matches!(parse(&nested), Err(ConfigError::Parse(_))));
        let in_dataset = MINIMAL.replace("n_clients = 2", "n_clients = 2\nbias = 1.0");
        assert!(matches!(parse(&in_dataset), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn epsilon_and_tau_are_mandatory() {
        assert!(matches!(
            parse(&MINIMAL.replace("tau = 0.3", "")),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn fedavg_over_a_mixed_roster_is_rejected() {
        let text = format!("{MINIMAL}\n[fedavg]\nfederation = \"roster\"\n");
        let err = parse(&text).unwrap_err();
        assert!(err.problems()[0].contains("homogeneous"), "{err}");
        let homogeneous = text.replace("kind = \"svm\"", "kind = \"logistic\"");
        parse(&homogeneous).unwrap();
    }

    #[test]
    fn roster_must_match_client_count() {
        let err = parse(&MINIMAL.replace("n_clients = 2", "n_clients = 3")).unwrap_err();
        assert!(err.problems().iter().any(|m| m.contains("3 clients")), "{err}");
    }

    #[test]
    fn csv_needs_a_split() {
        let text = r#"
epsilon = 1.0
tau = 0.3
scenarios = ["local"]
[dataset]
source = "csv"
path = "x.csv"
label_column = "Outcome"
[[roster]]
kind = "svm"
"#;
        let err = parse(text).unwrap_err();
        assert!(err.problems()[0].contains("[split]"));
        let with_split = format!("{text}\n[split]\ntest_count = 5\nunlabeled_count = 5\nclient_counts = [10]\n");
        let c = parse(&with_split).unwrap();
        assert_eq!(c.dataset_path().unwrap(), Path::new("./x.csv"));
        assert_eq!(c.client_count(), 1);
    }

    #[test]
    fn hidden_dim_is_mlp_only() {
        let err = parse(&MINIMAL.replace("kind = \"svm\"", "kind = \"svm\"\nhidden_dim = 3")).unwrap_err();
        assert!(err.problems()[0].contains("only applies to mlp"));
        parse(&MINIMAL.replace("kind = \"svm\"", "kind = \"mlp\"\nhidden_dim = 3")).unwrap();
    }
}
