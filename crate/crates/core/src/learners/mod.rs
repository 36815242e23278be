// SPDX-License-Identifier: Apache-2.0

//! Heterogeneous classifiers behind one interface.
//!
//! Every model exposes a real-valued decision score `s(x)`; its confidence
//! is `sigmoid(s(x))`, which puts perceptron and SVM margins on the same
//! `[0, 1]` scale as the probabilistic models. Training is plain minibatch
//! SGD over the model's loss.

mod linear;
mod mlp;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::{FeatureMatrix, LabeledDataset};

pub use linear::{LinearSvm, LogisticRegression, Perceptron};
pub use mlp::Mlp;

#[derive(Debug, thiserror::Error)]
pub enum LearnerError {
    #[error("feature dimension mismatch: model expects {expected}, data has {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("parameter vector has length {actual}, architecture needs {expected}")]
    ParamLength { expected: usize, actual: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite loss {loss} at epoch {epoch}")]
    NonFinite { epoch: usize, loss: f64 },
    #[error("invalid hyperparameter: {0}")]
    Invalid(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logistic,
    Perceptron,
    Svm,
    Mlp,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Logistic => "logistic",
            ModelKind::Perceptron => "perceptron",
            ModelKind::Svm => "svm",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Architecture descriptor. The parameter count is a function of this alone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Arch {
    Logistic { input_dim: usize },
    Perceptron { input_dim: usize },
    Svm { input_dim: usize },
    Mlp { input_dim: usize, hidden_dim: usize },
}

impl Arch {
    pub fn kind(&self) -> ModelKind {
        match self {
            Arch::Logistic { .. } => ModelKind::Logistic,
            Arch::Perceptron { .. } => ModelKind::Perceptron,
            Arch::Svm { .. } => ModelKind::Svm,
            Arch::Mlp { .. } => ModelKind::Mlp,
        }
    }

    pub fn input_dim(&self) -> usize {
        match *self {
            Arch::Logistic { input_dim }
            | Arch::Perceptron { input_dim }
            | Arch::Svm { input_dim }
            | Arch::Mlp { input_dim, .. } => input_dim,
        }
    }

    pub fn param_len(&self) -> usize {
        match *self {
            Arch::Mlp { input_dim, hidden_dim } => hidden_dim * input_dim + hidden_dim + hidden_dim + 1,
            _ => self.input_dim() + 1,
        }
    }

    /// Default architecture for `kind` on `input_dim` features. The MLP
    /// hidden width is `floor((input_dim + 1) / 2)`.
    pub fn for_kind(kind: ModelKind, input_dim: usize, hidden_dim: Option<usize>) -> Self {
        match kind {
            ModelKind::Logistic => Arch::Logistic { input_dim },
            ModelKind::Perceptron => Arch::Perceptron { input_dim },
            ModelKind::Svm => Arch::Svm { input_dim },
            ModelKind::Mlp => Arch::Mlp {
                input_dim,
                hidden_dim: hidden_dim.unwrap_or(input_dim.div_ceil(2)).max(1),
            },
        }
    }

    /// Freshly initialized model: weights uniform in (-0.05, 0.05), biases 0.
    pub fn init(&self, train: TrainParams, rng: &mut impl Rng) -> Result<Box<dyn Learner>, LearnerError> {
        let mut params = vec![0.0; self.param_len()];
        for (i, p) in params.iter_mut().enumerate() {
            if !self.is_bias(i) {
                *p = rng.gen_range(-0.05..0.05);
            }
        }
        self.with_params(train, params)
    }

    fn is_bias(&self, index: usize) -> bool {
        match *self {
            Arch::Mlp { input_dim, hidden_dim } => {
                let w1 = hidden_dim * input_dim;
                (w1..w1 + hidden_dim).contains(&index) || index == self.param_len() - 1
            }
            _ => index == self.input_dim(),
        }
    }

    pub fn with_params(&self, train: TrainParams, params: Vec<f64>) -> Result<Box<dyn Learner>, LearnerError> {
        train.validate()?;
        if params.len() != self.param_len() {
            return Err(LearnerError::ParamLength {
                expected: self.param_len(),
                actual: params.len(),
            });
        }
        if self.input_dim() == 0 {
            return Err(LearnerError::Invalid("input_dim must be >= 1".into()));
        }
        Ok(match *self {
            Arch::Logistic { input_dim } => Box::new(LogisticRegression::new(input_dim, train, params)),
            Arch::Perceptron { input_dim } => Box::new(Perceptron::new(input_dim, train, params)),
            Arch::Svm { input_dim } => Box::new(LinearSvm::new(input_dim, train, params)),
            Arch::Mlp { input_dim, hidden_dim } => {
                if hidden_dim == 0 {
                    return Err(LearnerError::Invalid("hidden_dim must be >= 1".into()));
                }
                Box::new(Mlp::new(input_dim, hidden_dim, train, params))
            }
        })
    }
}

fn default_learning_rate() -> f64 {
    0.01
}
fn default_batch_size() -> usize {
    32
}
fn default_l2() -> f64 {
    1e-3
}

/// SGD hyperparameters. `l2` is only used by the SVM objective.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainParams {
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_l2")]
    pub l2: f64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            learning_rate: default_learning_rate(),
            batch_size: default_batch_size(),
            l2: default_l2(),
        }
    }
}

impl TrainParams {
    pub fn validate(&self) -> Result<(), LearnerError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(LearnerError::Invalid("learning_rate must be > 0".into()));
        }
        if self.batch_size == 0 {
            return Err(LearnerError::Invalid("batch_size must be >= 1".into()));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(LearnerError::Invalid("l2 must be >= 0".into()));
        }
        Ok(())
    }
}

pub fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of `sigmoid(s)` against `y`, computed stably.
pub(crate) fn bce_with_logit(s: f64, y: u8) -> f64 {
    s.max(0.0) - f64::from(y) * s + (-s.abs()).exp().ln_1p()
}

/// A trainable binary classifier.
///
/// Implementors provide the decision score and the minibatch objective;
/// confidence, labels and training are derived from those.
pub trait Learner: Send + Sync + std::fmt::Debug {
    fn arch(&self) -> Arch;

    fn train_params(&self) -> TrainParams;

    fn params(&self) -> &[f64];

    fn params_mut(&mut self) -> &mut [f64];

    /// Real-valued decision score for one row.
    fn score_row(&self, row: &[f64]) -> f64;

    /// Mean loss over `indices` of `data`; writes the gradient into `grad`
    /// (overwriting it).
    fn batch_loss_grad(&self, data: &LabeledDataset, indices: &[usize], grad: &mut [f64]) -> f64;

    fn clone_box(&self) -> Box<dyn Learner>;

    fn kind(&self) -> ModelKind {
        self.arch().kind()
    }

    fn check_dim(&self, cols: usize) -> Result<(), LearnerError> {
        let expected = self.arch().input_dim();
        if cols != expected {
            return Err(LearnerError::DimensionMismatch { expected, actual: cols });
        }
        Ok(())
    }

    fn set_params(&mut self, params: &[f64]) -> Result<(), LearnerError> {
        let expected = self.arch().param_len();
        if params.len() != expected {
            return Err(LearnerError::ParamLength {
                expected,
                actual: params.len(),
            });
        }
        self.params_mut().copy_from_slice(params);
        Ok(())
    }

    fn decision_scores(&self, features: &FeatureMatrix) -> Result<Vec<f64>, LearnerError> {
        self.check_dim(features.cols())?;
        Ok(features.iter_rows().map(|r| self.score_row(r)).collect())
    }

    /// Confidence that each row is positive, in `[0, 1]`.
    fn predict_proba(&self, features: &FeatureMatrix) -> Result<Vec<f64>, LearnerError> {
        Ok(self.decision_scores(features)?.into_iter().map(sigmoid).collect())
    }

    /// Label 1 iff confidence >= `cut`; a confidence of exactly 0.5 is
    /// positive at the default cut.
    fn predict_label(&self, features: &FeatureMatrix, cut: f64) -> Result<Vec<u8>, LearnerError> {
        Ok(self
            .predict_proba(features)?
            .into_iter()
            .map(|p| u8::from(p >= cut))
            .collect())
    }

    /// Mean loss and gradient over a whole batch.
    fn loss_and_grad(&self, batch: &LabeledDataset) -> Result<(f64, Vec<f64>), LearnerError> {
        if batch.is_empty() {
            return Err(LearnerError::EmptyBatch);
        }
        self.check_dim(batch.cols())?;
        let idx: Vec<usize> = (0..batch.len()).collect();
        let mut grad = vec![0.0; self.arch().param_len()];
        let loss = self.batch_loss_grad(batch, &idx, &mut grad);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(LearnerError::NonFinite { epoch: 0, loss });
        }
        Ok((loss, grad))
    }
}

impl Clone for Box<dyn Learner> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

/// Per-epoch mean training loss.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epoch_losses: Vec<f64>,
}

impl TrainLog {
    pub fn epochs(&self) -> usize {
        self.epoch_losses.len()
    }
}

/// Minibatch SGD for `epochs` passes, reshuffling each epoch.
pub fn fit(
    learner: &mut dyn Learner,
    data: &LabeledDataset,
    epochs: usize,
    rng: &mut impl Rng,
) -> Result<TrainLog, LearnerError> {
    if epochs == 0 {
        return Ok(TrainLog::default());
    }
    if data.is_empty() {
        return Err(LearnerError::EmptyBatch);
    }
    learner.check_dim(data.cols())?;
    let train = learner.train_params();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grad = vec![0.0; learner.arch().param_len()];
    let mut log = TrainLog {
        epoch_losses: Vec::with_capacity(epochs),
    };
    for epoch in 0..epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        for batch in order.chunks(train.batch_size) {
            let loss = learner.batch_loss_grad(data, batch, &mut grad);
            if !loss.is_finite() {
                return Err(LearnerError::NonFinite { epoch, loss });
            }
            total += loss * batch.len() as f64;
            for (p, g) in learner.params_mut().iter_mut().zip(&grad) {
                *p -= train.learning_rate * g;
            }
        }
        let mean = total / data.len() as f64;
        if !mean.is_finite() || learner.params().iter().any(|p| !p.is_finite()) {
            return Err(LearnerError::NonFinite { epoch, loss: mean });
        }
        log.epoch_losses.push(mean);
    }
    Ok(log)
}

/// Serialized model: architecture, hyperparameters and parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub arch: Arch,
    pub train: TrainParams,
    pub params: Vec<f64>,
}

pub const CHECKPOINT_VERSION: u32 = 1;

impl Checkpoint {
    pub fn of(learner: &dyn Learner) -> Self {
        Self {
            format_version: CHECKPOINT_VERSION,
            arch: learner.arch(),
            train: learner.train_params(),
            params: learner.params().to_vec(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LearnerError> {
        let ck: Checkpoint = serde_json::from_str(text).map_err(|e| LearnerError::Checkpoint(e.to_string()))?;
        if ck.format_version != CHECKPOINT_VERSION {
            return Err(LearnerError::Checkpoint(format!(
                "unsupported format version {}",
                ck.format_version
            )));
        }
        Ok(ck)
    }

    pub fn restore(&self) -> Result<Box<dyn Learner>, LearnerError> {
        self.arch.with_params(self.train, self.params.clone())
    }
}
