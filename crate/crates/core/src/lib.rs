// SPDX-License-Identifier: Apache-2.0

//! Abstention-aware federated voting (AAFV) simulator.
//!
//! Heterogeneous local classifiers improve each other by exchanging only
//! locally-perturbed, thresholded votes on a shared unlabeled dataset. The
//! crate also carries the two comparison baselines (FedAvg with Laplace
//! parameter noise, and isolated local training), the privacy mechanisms and
//! their statistical audits, and a reproducible multi-seed experiment runner.
//!
//! Module map:
//!
//!  - [`dataio`]: CSV loading, z-score normalization, seeded splits, and the
//!    synthetic biased-shard generator.
//!  - [`learners`]: the [`learners::Learner`] interface and four SGD-trained
//!    models (logistic regression, perceptron, linear SVM, one-hidden-layer MLP).
//!  - [`ldp`]: the piecewise mechanism, the Laplace mechanism, and the
//!    binned epsilon audit.
//!  - [`voting`]: abstention-aware local votes, majority consolidation and
//!    pseudo-labeled dataset construction.
//!  - [`protocol`]: the AAFV loop, the FedAvg baseline and local training.
//!  - [`metrics`]: multi-seed summaries, Welch's t-test and report emission.
//!  - [`config`], [`seed`], [`experiment`], [`commands`]: configuration,
//!    seed derivation and the command entry points used by the `aafv` binary.

pub mod commands;
pub mod config;
pub mod dataio;
pub mod experiment;
pub mod ldp;
pub mod learners;
pub mod metrics;
pub mod protocol;
pub mod seed;
pub mod voting;

pub use seed::{derive_stream, SeedRng, SeedStream};
