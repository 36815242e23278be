// SPDX-License-Identifier: Apache-2.0

//! Label-keyed seed derivation.
//!
//! Every random stream in an experiment is named by a path of labels under a
//! master seed, e.g. `seed/7/aafv/client/2/round/13/perturb`. The stream's
//! generator is seeded with SHA-256 over the master seed and the
//! length-prefixed labels, so streams depend only on their own name: adding a
//! scenario, reordering clients or running seeds in parallel never changes
//! any other stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// The generator used for every stream.
pub type SeedRng = ChaCha8Rng;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SeedStream {
    master: u64,
    labels: Vec<String>,
}

impl SeedStream {
    pub fn new(master: u64) -> Self {
        Self {
            master,
            labels: Vec::new(),
        }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Appends one label to the derivation path.
    pub fn child(&self, label: impl Into<String>) -> Self {
        let mut labels = self.labels.clone();
        labels.push(label.into());
        Self {
            master: self.master,
            labels,
        }
    }

    /// Appends `label` followed by the decimal index, e.g. `client`, `2`.
    pub fn indexed(&self, label: &str, index: usize) -> Self {
        self.child(label).child(index.to_string())
    }

    fn digest(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update(b"aafv-seed-v1");
        hasher.update(self.master.to_le_bytes());
        for label in &self.labels {
            hasher.update((label.len() as u64).to_le_bytes());
            hasher.update(label.as_bytes());
        }
        hasher.finalize().into()
    }

    /// A fresh generator for this stream. Calling it twice yields two
    /// generators producing the same sequence.
    pub fn rng(&self) -> SeedRng {
        ChaCha8Rng::from_seed(self.digest())
    }

    /// A 64-bit seed derived from this stream, used where a plain integer
    /// seed is needed (per-run masters, split shuffles).
    pub fn derive_u64(&self) -> u64 {
        let d = self.digest();
        u64::from_le_bytes(d[..8].try_into().expect("digest is 32 bytes"))
    }
}

/// Derives the generator named by `labels` under `master`.
pub fn derive_stream(master: u64, labels: &[&str]) -> SeedRng {
    debug_assert!(!labels.is_empty(), "stream labels must be non-empty");
    labels.iter().fold(SeedStream::new(master), |s, l| s.child(*l)).rng()
}
