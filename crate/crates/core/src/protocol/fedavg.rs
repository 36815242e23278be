// SPDX-License-Identifier: Apache-2.0

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, FederationSetup, ProtocolError};
use crate::ldp::{laplace_noise, PrivacyBudget};
use crate::learners::Learner;
use crate::seed::SeedStream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FedAvgRound {
    pub round: usize,
    /// Test accuracy of the averaged model broadcast after this round.
    pub accuracy: f64,
}

#[derive(Debug)]
pub struct FedAvgOutcome {
    pub model: Box<dyn Learner>,
    pub traces: Vec<FedAvgRound>,
}

/// Clips each coordinate to `[-clip, clip]` and adds Laplace noise with
/// sensitivity `2 * clip` under `budget`.
pub fn privatize_upload(params: &[f64], clip: f64, budget: PrivacyBudget, rng: &mut impl Rng) -> Vec<f64> {
    let scale = 2.0 * clip / budget.epsilon();
    params
        .iter()
        .map(|p| p.clamp(-clip, clip) + laplace_noise(scale, rng))
        .collect()
}

/// Uniform coordinate-wise mean.
pub fn average_params(uploads: &[Vec<f64>]) -> Vec<f64> {
    let n = uploads.len() as f64;
    let mut avg = vec![0.0; uploads.first().map_or(0, Vec::len)];
    for u in uploads {
        for (a, v) in avg.iter_mut().zip(u) {
            *a += v;
        }
    }
    avg.iter_mut().for_each(|a| *a /= n);
    avg
}

/// FedAvg over a homogeneous federation. The server starts from client 0's
/// initial parameters; `setup.tau` and `setup.pretrain_epochs` are unused.
pub fn run_fedavg(setup: FederationSetup, clip: f64, seeds: &SeedStream) -> Result<FedAvgOutcome, ProtocolError> {
    setup.validate(2)?;
    if !(clip.is_finite() && clip > 0.0) {
        return Err(ProtocolError::Setup(format!("clip bound must be > 0, got {clip}")));
    }
    let arch = setup.clients[0].learner().arch();
    if let Some(c) = setup.clients.iter().find(|c| c.learner().arch() != arch) {
        return Err(ProtocolError::Setup(format!(
            "FedAvg needs a homogeneous roster: client 0 is {:?}, client {} is {:?}",
            arch,
            c.id(),
            c.learner().arch()
        )));
    }
    let FederationSetup {
        mut clients,
        test,
        epsilon,
        e_com,
        local_epochs_per_round,
        ..
    } = setup;

    let mut global = clients[0].learner().params().to_vec();
    let mut traces = Vec::with_capacity(e_com);
    for round in 1..=e_com {
        let uploads = clients
            .par_iter_mut()
            .map(|c| {
                c.learner_mut().set_params(&global)?;
                let stream = c.stream(seeds).indexed("round", round);
                c.train_private(local_epochs_per_round, &stream.child("train"))?;
                let mut rng = stream.child("noise").rng();
                Ok(privatize_upload(c.learner().params(), clip, epsilon, &mut rng))
            })
            .collect::<Result<Vec<_>, ProtocolError>>()?;
        global = average_params(&uploads);
        let mut model = clients[0].learner().clone_box();
        model.set_params(&global)?;
        traces.push(FedAvgRound {
            round,
            accuracy: evaluate(model.as_ref(), &test)?,
        });
    }
    let mut model = clients.swap_remove(0).into_learner();
    model.set_params(&global)?;
    Ok(FedAvgOutcome { model, traces })
}
