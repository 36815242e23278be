// SPDX-License-Identifier: Apache-2.0

use super::{train_on, ProtocolError};
use crate::dataio::{LabeledDataset, UnlabeledDataset};
use crate::ldp::{perturb_predictions, PiecewiseParams};
use crate::learners::{Learner, ModelKind};
use crate::seed::SeedStream;
use crate::voting::{local_vote, PseudoLabeledDataset, Threshold, Vote};

/// A participant: its model and its private shard.
///
/// The shard is only ever read inside this type's own training calls; the
/// only thing a client hands outward during AAFV is its vote vector.
#[derive(Debug)]
pub struct Client {
    id: usize,
    learner: Box<dyn Learner>,
    private: LabeledDataset,
}

impl Client {
    pub fn new(id: usize, learner: Box<dyn Learner>, private: LabeledDataset) -> Result<Self, ProtocolError> {
        learner.check_dim(private.cols())?;
        if private.is_empty() {
            return Err(ProtocolError::Setup(format!("client {id} has no private data")));
        }
        Ok(Self { id, learner, private })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn kind(&self) -> ModelKind {
        self.learner.kind()
    }

    pub fn input_dim(&self) -> usize {
        self.learner.arch().input_dim()
    }

    pub fn learner(&self) -> &dyn Learner {
        self.learner.as_ref()
    }

    pub(crate) fn learner_mut(&mut self) -> &mut dyn Learner {
        self.learner.as_mut()
    }

    pub fn into_learner(self) -> Box<dyn Learner> {
        self.learner
    }

    pub(crate) fn stream(&self, seeds: &SeedStream) -> SeedStream {
        seeds.indexed("client", self.id)
    }

    /// Supervised training on the private shard.
    pub fn pretrain(&mut self, epochs: usize, seeds: &SeedStream) -> Result<(), ProtocolError> {
        let stream = self.stream(seeds).child("pretrain");
        train_on(self.learner.as_mut(), &self.private, epochs, &stream)
    }

    /// Scores the public set, perturbs the scores and votes.
    pub fn vote(
        &self,
        public: &UnlabeledDataset,
        params: &PiecewiseParams,
        tau: Threshold,
        stream: &SeedStream,
    ) -> Result<Vec<Vote>, ProtocolError> {
        let scores = self.learner.predict_proba(public.features())?;
        let perturbed = perturb_predictions(&scores, params, &mut stream.rng())?;
        Ok(local_vote(&perturbed, tau))
    }

    /// Continues training on the private shard joined with the pseudo set.
    pub fn revisit(
        &mut self,
        pseudo: &PseudoLabeledDataset,
        epochs: usize,
        stream: &SeedStream,
    ) -> Result<(), ProtocolError> {
        let pool = LabeledDataset::concat(&[&pseudo.data, &self.private])?;
        train_on(self.learner.as_mut(), &pool, epochs, stream)
    }

    /// Plain local training on the private shard with an explicit stream.
    pub(crate) fn train_private(&mut self, epochs: usize, stream: &SeedStream) -> Result<(), ProtocolError> {
        train_on(self.learner.as_mut(), &self.private, epochs, stream)
    }
}
