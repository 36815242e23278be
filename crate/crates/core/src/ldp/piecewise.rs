// SPDX-License-Identifier: Apache-2.0

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{LdpError, PrivacyBudget};

/// Constants of the piecewise mechanism for one budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseParams {
    pub epsilon: f64,
    /// Output bound `T = (e^{eps/2} + 1) / (e^{eps/2} - 1)`.
    pub bound: f64,
    /// Window density `rho = (e^eps - e^{eps/2}) / (2 e^{eps/2} + 2)`.
    pub rho: f64,
}

impl PiecewiseParams {
    pub fn new(budget: PrivacyBudget) -> Self {
        let eps = budget.epsilon();
        let half = (eps / 2.0).exp();
        // e^{eps/2} - 1 loses precision for tiny budgets; exp_m1 does not.
        let bound = (half + 1.0) / (eps / 2.0).exp_m1();
        let rho = (eps.exp() - half) / (2.0 * half + 2.0);
        Self {
            epsilon: eps,
            bound,
            rho,
        }
    }

    pub fn from_epsilon(epsilon: f64) -> Result<Self, LdpError> {
        Ok(Self::new(PrivacyBudget::new(epsilon)?))
    }

    /// Density outside the window, `rho / e^eps`.
    pub fn tail_density(&self) -> f64 {
        self.rho / self.epsilon.exp()
    }

    /// Probability of sampling inside the window, `e^{eps/2} / (e^{eps/2} + 1)`.
    pub fn window_probability(&self) -> f64 {
        let half = (self.epsilon / 2.0).exp();
        half / (half + 1.0)
    }

    /// The high-density window `[l(t), r(t)]` with
    /// `l(t) = (T + 1) / 2 * t - (T - 1) / 2` and `r(t) = l(t) + T - 1`.
    pub fn interval(&self, t: f64) -> Result<(f64, f64), LdpError> {
        check_unit(t)?;
        Ok(self.window(t))
    }

    fn window(&self, t: f64) -> (f64, f64) {
        let big_t = self.bound;
        let l = (big_t + 1.0) / 2.0 * t - (big_t - 1.0) / 2.0;
        (l, l + big_t - 1.0)
    }

    /// Perturbs `t` in `[-1, 1]`.
    ///
    /// With probability `window_probability()` the output is uniform on the
    /// window; otherwise it is uniform on `[-T, l) U (r, T]`, realized by one
    /// uniform draw over the combined tail length `T + 1` so each side is
    /// chosen in proportion to its length.
    pub fn perturb(&self, t: f64, rng: &mut impl Rng) -> Result<f64, LdpError> {
        check_unit(t)?;
        let (l, r) = self.window(t);
        let big_t = self.bound;
        let alpha: f64 = rng.gen();
        let out = if alpha < self.window_probability() {
            l + rng.gen::<f64>() * (r - l)
        } else {
            let left = l + big_t;
            let pos = rng.gen::<f64>() * (big_t + 1.0);
            if pos < left {
                -big_t + pos
            } else {
                r + (pos - left)
            }
        };
        Ok(out.clamp(-big_t, big_t))
    }
}

fn check_unit(t: f64) -> Result<(), LdpError> {
    if (-1.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(LdpError::InputOutOfRange(t))
    }
}

/// Perturbs confidence scores: `t = 2p - 1`, perturb, `p' = (t' + 1) / 2`.
/// Outputs lie in `[(1 - T) / 2, (1 + T) / 2]`.
pub fn perturb_predictions(
    predictions: &[f64],
    params: &PiecewiseParams,
    rng: &mut impl Rng,
) -> Result<Vec<f64>, LdpError> {
    if let Some(&bad) = predictions.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(LdpError::PredictionOutOfRange(bad));
    }
    predictions
        .iter()
        .map(|&p| Ok((params.perturb(2.0 * p - 1.0, rng)? + 1.0) / 2.0))
        .collect()
}
