// SPDX-License-Identifier: Apache-2.0

//! Empirical epsilon audit: histogram a mechanism's outputs for two inputs
//! and report the largest log-ratio of bin counts.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{laplace_noise, LdpError, PiecewiseParams, PrivacyBudget};

/// A mechanism on inputs in `[-1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mechanism", rename_all = "lowercase")]
pub enum Mechanism {
    Piecewise {
        epsilon: f64,
    },
    /// Laplace noise calibrated to the input range: sensitivity 2.
    Laplace {
        epsilon: f64,
    },
    /// Returns its input unchanged; a negative control that is not private.
    Passthrough {
        epsilon: f64,
    },
}

impl Mechanism {
    pub fn epsilon(&self) -> f64 {
        match *self {
            Mechanism::Piecewise { epsilon } | Mechanism::Laplace { epsilon } | Mechanism::Passthrough { epsilon } => {
                epsilon
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mechanism::Piecewise { .. } => "piecewise",
            Mechanism::Laplace { .. } => "laplace",
            Mechanism::Passthrough { .. } => "passthrough",
        }
    }

    /// Histogram range: `[-T, T]` with `T` the piecewise bound at this budget.
    pub fn output_bound(&self) -> Result<f64, LdpError> {
        Ok(PiecewiseParams::from_epsilon(self.epsilon())?.bound)
    }

    pub fn sample(&self, t: f64, rng: &mut impl Rng) -> Result<f64, LdpError> {
        if !(-1.0..=1.0).contains(&t) {
            return Err(LdpError::InputOutOfRange(t));
        }
        let budget = PrivacyBudget::new(self.epsilon())?;
        match self {
            Mechanism::Piecewise { .. } => PiecewiseParams::new(budget).perturb(t, rng),
            Mechanism::Laplace { .. } => Ok(t + laplace_noise(2.0 / budget.epsilon(), rng)),
            Mechanism::Passthrough { .. } => Ok(t),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditOutcome {
    pub t_a: f64,
    pub t_b: f64,
    pub bound: f64,
    /// Normalized densities per bin for each input.
    pub densities_a: Vec<f64>,
    pub densities_b: Vec<f64>,
    /// Max over bins hit by either input of `|ln(count_a / count_b)|`;
    /// `None` when some bin is hit by one input only (an unbounded ratio).
    pub max_log_ratio: Option<f64>,
}

impl AuditOutcome {
    pub fn within(&self, limit: f64) -> bool {
        self.max_log_ratio.is_some_and(|r| r <= limit)
    }
}

/// Samples `n_samples` outputs for each input, bins them on `[-T, T]`, and
/// compares the two histograms bin by bin. Outputs outside the range are
/// not binned.
pub fn audit_epsilon(
    mechanism: &Mechanism,
    t_a: f64,
    t_b: f64,
    n_samples: usize,
    n_bins: usize,
    rng: &mut impl Rng,
) -> Result<AuditOutcome, LdpError> {
    if n_samples < 100_000 {
        return Err(LdpError::Audit(format!("need at least 1e5 samples, got {n_samples}")));
    }
    if n_bins == 0 {
        return Err(LdpError::Audit("need at least one bin".into()));
    }
    let bound = mechanism.output_bound()?;
    let width = 2.0 * bound / n_bins as f64;
    let histogram = |t: f64, rng: &mut _| -> Result<Vec<u64>, LdpError> {
        let mut counts = vec![0u64; n_bins];
        for _ in 0..n_samples {
            let x = mechanism.sample(t, rng)?;
            if (-bound..=bound).contains(&x) {
                let bin = (((x + bound) / width) as usize).min(n_bins - 1);
                counts[bin] += 1;
            }
        }
        Ok(counts)
    };
    let a = histogram(t_a, rng)?;
    let b = histogram(t_b, rng)?;
    if a.iter().chain(&b).all(|&c| c == 0) {
        return Err(LdpError::Audit("no output fell inside the histogram range".into()));
    }

    let mut max_ratio = Some(0.0f64);
    for (&ca, &cb) in a.iter().zip(&b) {
        match (ca, cb) {
            (0, 0) => {}
            (0, _) | (_, 0) => max_ratio = None,
            _ => {
                let r = (ca as f64 / cb as f64).ln().abs();
                max_ratio = max_ratio.map(|m| m.max(r));
            }
        }
    }
    let density = |c: &[u64]| -> Vec<f64> { c.iter().map(|&k| k as f64 / (n_samples as f64 * width)).collect() };
    Ok(AuditOutcome {
        t_a,
        t_b,
        bound,
        densities_a: density(&a),
        densities_b: density(&b),
        max_log_ratio: max_ratio,
    })
}
