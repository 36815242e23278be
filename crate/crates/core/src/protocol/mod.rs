// SPDX-License-Identifier: Apache-2.0

//! The three training scenarios.
//!
//! * [`run_aafv`]: pre-train, then per communication round every client
//!   scores the public set, perturbs the scores with the piecewise
//!   mechanism and votes; a [`VoteServer`] consolidates; every client
//!   retrains on its private shard plus the pseudo-labeled public rows.
//! * [`run_fedavg`]: homogeneous clients train locally, clip and
//!   Laplace-perturb their parameters, and the server averages them.
//! * [`run_local`]: isolated training, nothing shared.
//!
//! Random streams are taken from the supplied [`SeedStream`]:
//! `client/<k>/pretrain` for pre-training (shared by AAFV and local
//! training, so a client starts AAFV from exactly its isolated model when
//! the epoch counts agree), `aafv/client/<k>/round/<e>/{perturb,revisit}`
//! for AAFV rounds and `client/<k>/round/<e>/{train,noise}` for FedAvg,
//! whose caller scopes the stream per federation.

mod aafv;
mod client;
mod fedavg;

use crate::dataio::{DataError, LabeledDataset, UnlabeledDataset};
use crate::ldp::{LdpError, PrivacyBudget};
use crate::learners::{fit, Learner, LearnerError};
use crate::seed::SeedStream;
use crate::voting::{Threshold, VotingError};

pub use aafv::{run_aafv, run_aafv_with, AafvOutcome, MajorityServer, RoundTrace, VoteServer};
pub use client::Client;
pub use fedavg::{average_params, privatize_upload, run_fedavg, FedAvgOutcome, FedAvgRound};

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Ldp(#[from] LdpError),
    #[error(transparent)]
    Voting(#[from] VotingError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("invalid federation: {0}")]
    Setup(String),
}

/// Everything a federated run needs.
#[derive(Debug)]
pub struct FederationSetup {
    pub clients: Vec<Client>,
    pub unlabeled: UnlabeledDataset,
    pub test: LabeledDataset,
    pub epsilon: PrivacyBudget,
    pub tau: Threshold,
    pub e_com: usize,
    pub pretrain_epochs: usize,
    pub local_epochs_per_round: usize,
}

impl FederationSetup {
    pub(crate) fn validate(&self, min_clients: usize) -> Result<(), ProtocolError> {
        if self.clients.len() < min_clients {
            return Err(ProtocolError::Setup(format!(
                "need at least {min_clients} clients, got {}",
                self.clients.len()
            )));
        }
        let dim = self.test.cols();
        if self.unlabeled.features().cols() != dim {
            return Err(ProtocolError::Setup(format!(
                "public set has {} features, test set {dim}",
                self.unlabeled.features().cols()
            )));
        }
        if let Some(c) = self.clients.iter().find(|c| c.input_dim() != dim) {
            return Err(ProtocolError::Setup(format!(
                "client {} has {} features, test set {dim}",
                c.id(),
                c.input_dim()
            )));
        }
        if self.test.is_empty() {
            return Err(ProtocolError::Setup("test set is empty".into()));
        }
        Ok(())
    }
}

/// Fraction of test rows whose predicted label matches.
pub fn evaluate(learner: &dyn Learner, test: &LabeledDataset) -> Result<f64, ProtocolError> {
    if test.is_empty() {
        return Err(ProtocolError::Setup("test set is empty".into()));
    }
    let predicted = learner.predict_label(test.features(), 0.5)?;
    let correct = predicted.iter().zip(test.labels()).filter(|(p, y)| p == y).count();
    Ok(correct as f64 / test.len() as f64)
}

/// Trains every client in isolation for `epochs` epochs.
pub fn run_local(
    clients: Vec<Client>,
    epochs: usize,
    seeds: &SeedStream,
) -> Result<Vec<Box<dyn Learner>>, ProtocolError> {
    use rayon::prelude::*;
    clients
        .into_par_iter()
        .map(|mut c| {
            c.pretrain(epochs, seeds)?;
            Ok(c.into_learner())
        })
        .collect()
}

pub(crate) fn train_on(
    learner: &mut dyn Learner,
    data: &LabeledDataset,
    epochs: usize,
    stream: &SeedStream,
) -> Result<(), ProtocolError> {
    fit(learner, data, epochs, &mut stream.rng())?;
    Ok(())
}
