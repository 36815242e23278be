// SPDX-License-Identifier: Apache-2.0

//! Local differential privacy mechanisms.
//!
//! The piecewise mechanism perturbs a bounded real `t` in `[-1, 1]` to a
//! value in `[-T, T]` whose density is `rho` on a window `[l(t), r(t)]` of
//! width `T - 1` and `rho / e^eps` elsewhere. Confidence scores in `[0, 1]`
//! are mapped to that domain with `t = 2p - 1` and back with
//! `p = (t + 1) / 2`, so thresholds on perturbed scores stay on the
//! prediction scale.
//!
//! The Laplace mechanism backs the FedAvg baseline's parameter noise.

mod audit;
mod laplace;
mod piecewise;

use serde::{Deserialize, Serialize};

pub use audit::{audit_epsilon, AuditOutcome, Mechanism};
pub use laplace::{laplace_noise, laplace_perturb};
pub use piecewise::{perturb_predictions, PiecewiseParams};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LdpError {
    #[error("privacy budget must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("input {0} is outside [-1, 1]")]
    InputOutOfRange(f64),
    #[error("prediction {0} is outside [0, 1]")]
    PredictionOutOfRange(f64),
    #[error("sensitivity must be positive and finite, got {0}")]
    InvalidSensitivity(f64),
    #[error("audit: {0}")]
    Audit(String),
}

/// Privacy budget epsilon: positive and finite.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PrivacyBudget(f64);

impl PrivacyBudget {
    pub fn new(epsilon: f64) -> Result<Self, LdpError> {
        if epsilon.is_finite() && epsilon > 0.0 {
            Ok(Self(epsilon))
        } else {
            Err(LdpError::InvalidEpsilon(epsilon))
        }
    }

    pub fn epsilon(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for PrivacyBudget {
    type Error = LdpError;

    fn try_from(v: f64) -> Result<Self, LdpError> {
        Self::new(v)
    }
}

impl From<PrivacyBudget> for f64 {
    fn from(b: PrivacyBudget) -> f64 {
        b.0
    }
}
