// SPDX-License-Identifier: Apache-2.0

use super::{bce_with_logit, sigmoid, Arch, Learner, TrainParams};
use crate::dataio::LabeledDataset;

/// One hidden ReLU layer, linear output, cross-entropy on `sigmoid(s)`.
///
/// Parameter layout: hidden weights `W1` (`hidden x input`, row-major),
/// hidden biases `b1`, output weights `w2`, output bias `b2`.
#[derive(Clone, Debug)]
pub struct Mlp {
    input_dim: usize,
    hidden_dim: usize,
    train: TrainParams,
    params: Vec<f64>,
}

impl Mlp {
    pub(crate) fn new(input_dim: usize, hidden_dim: usize, train: TrainParams, params: Vec<f64>) -> Self {
        Self {
            input_dim,
            hidden_dim,
            train,
            params,
        }
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let w1 = self.hidden_dim * self.input_dim;
        (w1, w1 + self.hidden_dim, w1 + 2 * self.hidden_dim)
    }

    /// Fills `hidden` with post-activation values and returns the score.
    fn forward(&self, row: &[f64], hidden: &mut [f64]) -> f64 {
        let (b1, w2, b2) = self.offsets();
        let p = &self.params;
        for (h, out) in hidden.iter_mut().enumerate() {
            let w = &p[h * self.input_dim..(h + 1) * self.input_dim];
            let pre = w.iter().zip(row).map(|(a, x)| a * x).sum::<f64>() + p[b1 + h];
            *out = pre.max(0.0);
        }
        hidden.iter().zip(&p[w2..b2]).map(|(a, w)| a * w).sum::<f64>() + p[b2]
    }
}

impl Learner for Mlp {
    fn arch(&self) -> Arch {
        Arch::Mlp {
            input_dim: self.input_dim,
            hidden_dim: self.hidden_dim,
        }
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
        let mut hidden = vec![0.0; self.hidden_dim];
        self.forward(row, &mut hidden)
    }

    fn batch_loss_grad(&self, data: &LabeledDataset, indices: &[usize], grad: &mut [f64]) -> f64 {
        grad.fill(0.0);
        let (b1, w2, b2) = self.offsets();
        let mut hidden = vec![0.0; self.hidden_dim];
        let mut loss = 0.0;
        for &i in indices {
            let row = data.features().row(i);
            let y = data.labels()[i];
            let s = self.forward(row, &mut hidden);
            loss += bce_with_logit(s, y);
            let ds = sigmoid(s) - f64::from(y);
            grad[b2] += ds;
            for h in 0..self.hidden_dim {
                grad[w2 + h] += ds * hidden[h];
                if hidden[h] > 0.0 {
                    let dpre = ds * self.params[w2 + h];
                    grad[b1 + h] += dpre;
                    let g = &mut grad[h * self.input_dim..(h + 1) * self.input_dim];
                    for (gj, x) in g.iter_mut().zip(row) {
                        *gj += dpre * x;
                    }
                }
            }
        }
        let n = indices.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        loss / n
    }

    fn clone_box(&self) -> Box<dyn Learner> {
        Box::new(self.clone())
    }
}
