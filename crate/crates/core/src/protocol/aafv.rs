// SPDX-License-Identifier: Apache-2.0

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, FederationSetup, ProtocolError};
use crate::ldp::PiecewiseParams;
use crate::learners::Learner;
use crate::seed::SeedStream;
use crate::voting::{build_pseudo_dataset, consolidate, GlobalVotes, VoteMatrix};

/// The aggregation side of AAFV. It sees nothing but the uploaded votes.
pub trait VoteServer {
    fn consolidate(&mut self, uploads: &VoteMatrix) -> GlobalVotes;
}

/// Strict-majority consolidation.
#[derive(Clone, Copy, Debug, Default)]
pub struct MajorityServer;

impl VoteServer for MajorityServer {
    fn consolidate(&mut self, uploads: &VoteMatrix) -> GlobalVotes {
        consolidate(uploads)
    }
}

/// What happened in one communication round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    /// 1-based.
    pub round: usize,
    pub client_abstains: Vec<usize>,
    pub global_abstains: usize,
    pub pseudo_size: usize,
    /// True when every global vote abstained and retraining was skipped.
    pub revisit_skipped: bool,
    /// Test accuracy of each client after this round's revisit.
    pub client_accuracy: Vec<f64>,
}

#[derive(Debug)]
pub struct AafvOutcome {
    pub learners: Vec<Box<dyn Learner>>,
    /// Test accuracy of each client right after pre-training.
    pub pretrained_accuracy: Vec<f64>,
    pub traces: Vec<RoundTrace>,
}

/// Runs AAFV with the strict-majority server.
pub fn run_aafv(setup: FederationSetup, seeds: &SeedStream) -> Result<AafvOutcome, ProtocolError> {
    run_aafv_with(setup, seeds, &mut MajorityServer)
}

/// Runs AAFV against an arbitrary vote server.
pub fn run_aafv_with(
    setup: FederationSetup,
    seeds: &SeedStream,
    server: &mut dyn VoteServer,
) -> Result<AafvOutcome, ProtocolError> {
    setup.validate(2)?;
    let FederationSetup {
        mut clients,
        unlabeled,
        test,
        epsilon,
        tau,
        e_com,
        pretrain_epochs,
        local_epochs_per_round,
    } = setup;
    let params = PiecewiseParams::new(epsilon);
    let scope = seeds.child("aafv");

    clients
        .par_iter_mut()
        .try_for_each(|c| c.pretrain(pretrain_epochs, seeds))?;
    let accuracy = |clients: &[super::Client]| -> Result<Vec<f64>, ProtocolError> {
        clients.iter().map(|c| evaluate(c.learner(), &test)).collect()
    };
    let pretrained_accuracy = accuracy(&clients)?;

    let mut traces = Vec::with_capacity(e_com);
    for round in 1..=e_com {
        let uploads = clients
            .par_iter()
            .map(|c| {
                let stream = c.stream(&scope).indexed("round", round).child("perturb");
                c.vote(&unlabeled, &params, tau, &stream)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let votes = VoteMatrix::new(uploads)?;
        let global = server.consolidate(&votes);
        let pseudo = build_pseudo_dataset(&unlabeled, &global)?;

        let skipped = pseudo.is_empty();
        if skipped {
            log::warn!("round {round}: every global vote abstained, skipping revisit");
        } else {
            clients.par_iter_mut().try_for_each(|c| {
                let stream = c.stream(&scope).indexed("round", round).child("revisit");
                c.revisit(&pseudo, local_epochs_per_round, &stream)
            })?;
        }
        traces.push(RoundTrace {
            round,
            client_abstains: votes.abstain_counts(),
            global_abstains: global.abstain_count(),
            pseudo_size: pseudo.len(),
            revisit_skipped: skipped,
            client_accuracy: accuracy(&clients)?,
        });
    }

    Ok(AafvOutcome {
        learners: clients.into_iter().map(|c| c.into_learner()).collect(),
        pretrained_accuracy,
        traces,
    })
}
