// SPDX-License-Identifier: Apache-2.0

//! Linear models `s(x) = w.x + b` that differ only in their training loss.

use std::fmt::Debug;
use std::marker::PhantomData;

use super::{bce_with_logit, sigmoid, Arch, Learner, ModelKind, TrainParams};
use crate::dataio::LabeledDataset;

/// Per-sample loss as a function of the decision score, and its derivative.
pub trait Surrogate: Copy + Debug + Default + Send + Sync + 'static {
    const KIND: ModelKind;

    fn loss(score: f64, label: u8) -> (f64, f64);

    /// Coefficient of the `l2 / 2 * |w|^2` penalty (bias excluded).
    fn ridge(_train: &TrainParams) -> f64 {
        0.0
    }
}

fn signed(label: u8) -> f64 {
    if label == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Binary cross-entropy on `sigmoid(s)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct LogLoss;

impl Surrogate for LogLoss {
    const KIND: ModelKind = ModelKind::Logistic;

    fn loss(score: f64, label: u8) -> (f64, f64) {
        (bce_with_logit(score, label), sigmoid(score) - f64::from(label))
    }
}

/// `max(0, -y s)` with `y` in {-1, +1}. A zero margin counts as a mistake.
#[derive(Clone, Copy, Debug, Default)]
pub struct PerceptronLoss;

impl Surrogate for PerceptronLoss {
    const KIND: ModelKind = ModelKind::Perceptron;

    fn loss(score: f64, label: u8) -> (f64, f64) {
        let y = signed(label);
        if y * score <= 0.0 {
            (-y * score, -y)
        } else {
            (0.0, 0.0)
        }
    }
}

/// `max(0, 1 - y s)` plus the L2 penalty.
#[derive(Clone, Copy, Debug, Default)]
pub struct HingeLoss;

impl Surrogate for HingeLoss {
    const KIND: ModelKind = ModelKind::Svm;

    fn loss(score: f64, label: u8) -> (f64, f64) {
        let y = signed(label);
        if y * score < 1.0 {
            (1.0 - y * score, -y)
        } else {
            (0.0, 0.0)
        }
    }

    fn ridge(train: &TrainParams) -> f64 {
        train.l2
    }
}

/// Parameters are laid out as `[w_0, .., w_{C-1}, b]`.
#[derive(Clone, Debug)]
pub struct LinearModel<S> {
    input_dim: usize,
    train: TrainParams,
    params: Vec<f64>,
    _loss: PhantomData<S>,
}

pub type LogisticRegression = LinearModel<LogLoss>;
pub type Perceptron = LinearModel<PerceptronLoss>;
pub type LinearSvm = LinearModel<HingeLoss>;

impl<S: Surrogate> LinearModel<S> {
    pub(crate) fn new(input_dim: usize, train: TrainParams, params: Vec<f64>) -> Self {
        debug_assert_eq!(params.len(), input_dim + 1);
        Self {
            input_dim,
            train,
            params,
            _loss: PhantomData,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.params[..self.input_dim]
    }

    pub fn bias(&self) -> f64 {
        self.params[self.input_dim]
    }
}

impl<S: Surrogate> Learner for LinearModel<S> {
    fn arch(&self) -> Arch {
        Arch::for_kind(S::KIND, self.input_dim, None)
    }

    fn train_params(&self) -> TrainParams {
        self.train
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn score_row(&self, row: &[f64]) -> f64 {
        self.weights().iter().zip(row).map(|(w, x)| w * x).sum::<f64>() + self.bias()
    }

    fn batch_loss_grad(&self, data: &LabeledDataset, indices: &[usize], grad: &mut [f64]) -> f64 {
        grad.fill(0.0);
        let n = indices.len() as f64;
        let mut loss = 0.0;
        for &i in indices {
            let row = data.features().row(i);
            let (l, dl) = S::loss(self.score_row(row), data.labels()[i]);
            loss += l;
            if dl != 0.0 {
                for (g, x) in grad.iter_mut().zip(row) {
                    *g += dl * x;
                }
                grad[self.input_dim] += dl;
            }
        }
        loss /= n;
        grad.iter_mut().for_each(|g| *g /= n);
        let lambda = S::ridge(&self.train);
        if lambda > 0.0 {
            let w = self.weights();
            loss += 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>();
            for (g, v) in grad.iter_mut().zip(w) {
                *g += lambda * v;
            }
        }
        loss
    }

    fn clone_box(&self) -> Box<dyn Learner> {
        Box::new(self.clone())
    }
}
