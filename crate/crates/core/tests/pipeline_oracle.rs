// SPDX-License-Identifier: Apache-2.0

//! With an effectively noiseless budget and a threshold next to 0.5, the
//! first round of votes must equal the pretrained models' hard labels, and
//! the server's labels must equal a brute-force majority of those.

mod common;

use aafv_core::dataio::{synth_biased_shards, SynthSpec};
use aafv_core::ldp::PrivacyBudget;
use aafv_core::learners::{Arch, ModelKind, TrainParams};
use aafv_core::protocol::{run_aafv_with, run_local, Client, FederationSetup};
use aafv_core::voting::{Threshold, Vote};
use aafv_core::SeedStream;

use common::{brute_majority, RecordingServer};

const KINDS: [ModelKind; 3] = [ModelKind::Logistic, ModelKind::Svm, ModelKind::Mlp];
const TAU: f64 = 0.5 - 1e-9;

fn clients(parts: &aafv_core::dataio::SplitParts) -> Vec<Client> {
    KINDS
        .iter()
        .enumerate()
        .map(|(k, kind)| {
            let learner = Arch::for_kind(*kind, parts.test.cols(), None)
                .init(
                    TrainParams::default(),
                    &mut SeedStream::new(11).indexed("init", k).rng(),
                )
                .unwrap();
            Client::new(k, learner, parts.clients[k].clone()).unwrap()
        })
        .collect()
}

#[test]
fn noiseless_round_matches_hard_labels_and_majority() {
    let spec = SynthSpec {
        n_samples: 900,
        n_features: 6,
        ..SynthSpec::default()
    };
    let parts = synth_biased_shards(&spec).unwrap();
    let seeds = SeedStream::new(5);
    let pretrain_epochs = 20;

    let pretrained = run_local(clients(&parts), pretrain_epochs, &seeds).unwrap();

    let setup = FederationSetup {
        clients: clients(&parts),
        unlabeled: parts.unlabeled.clone(),
        test: parts.test.clone(),
        epsilon: PrivacyBudget::new(200.0).unwrap(),
        tau: Threshold::new(TAU).unwrap(),
        e_com: 1,
        pretrain_epochs,
        local_epochs_per_round: 1,
    };
    let mut server = RecordingServer::default();
    let out = run_aafv_with(setup, &seeds, &mut server).unwrap();
    let uploads = server.uploads.lock().unwrap();
    assert_eq!(uploads.len(), 1);
    let votes = &uploads[0];

    let mut compared = 0;
    for (k, learner) in pretrained.iter().enumerate() {
        let proba = learner.predict_proba(parts.unlabeled.features()).unwrap();
        for (i, p) in proba.iter().enumerate() {
            if (p - 0.5).abs() < 1e-6 {
                continue;
            }
            let expect = if *p >= 0.5 { Vote::Positive } else { Vote::Negative };
            assert_eq!(votes.client_votes(k)[i], expect, "client {k} sample {i} p={p}");
            compared += 1;
        }
    }
    assert!(compared > 2 * parts.unlabeled.len());

    let expected_abstains = (0..votes.samples())
        .filter(|&i| {
            let column: Vec<Vote> = (0..votes.clients()).map(|k| votes.client_votes(k)[i]).collect();
            brute_majority(&column) == Vote::Abstain
        })
        .count();
    assert_eq!(out.traces[0].global_abstains, expected_abstains);
    assert_eq!(out.traces[0].pseudo_size + expected_abstains, parts.unlabeled.len());
}
