// SPDX-License-Identifier: Apache-2.0

//! Synthetic stand-in for a large credentialed clinical dataset.
//!
//! Latent features `z ~ N(0, I)` are labeled by a random hyperplane through
//! the origin with Gaussian label noise. Test and public rows are reported as
//! drawn. Client `k` observes its rows through a constant offset
//! `bias_strength * (cos(a_k) w + sin(a_k) u)`, where `w` is the hyperplane
//! normal, `u` a fixed orthogonal unit vector and the angles `a_k = 2 pi k / K`
//! are spread evenly around the circle. With two or more clients every
//! offset has a nonzero component along `w`. Labels still come from
//! the unshifted `z`, so each shard teaches its model a shifted decision
//! boundary; the offsets sum to zero, so the pooled data is unbiased.

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DataError, FeatureMatrix, LabeledDataset, SplitParts, UnlabeledDataset};
use crate::seed::SeedRng;

fn default_label_noise() -> f64 {
    0.3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_clients: usize,
    pub bias_strength: f64,
    pub seed: u64,
    /// Standard deviation of the Gaussian noise added to the latent margin
    /// before thresholding.
    #[serde(default = "default_label_noise")]
    pub label_noise: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_samples: 3000,
            n_features: 50,
            n_clients: 3,
            bias_strength: 0.5,
            seed: 7,
            label_noise: default_label_noise(),
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        let mut problems = Vec::new();
        if self.n_features < 2 {
            problems.push("n_features must be >= 2".to_string());
        }
        if self.n_clients < 2 {
            problems.push("n_clients must be >= 2".to_string());
        }
        if !(self.bias_strength.is_finite() && self.bias_strength >= 0.0) {
            problems.push("bias_strength must be finite and >= 0".to_string());
        }
        if !(self.label_noise.is_finite() && self.label_noise >= 0.0) {
            problems.push("label_noise must be finite and >= 0".to_string());
        }
        if self.n_clients >= 2 && self.client_rows() < 2 {
            problems.push(format!(
                "n_samples {} leaves fewer than 2 rows per client",
                self.n_samples
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(DataError::Invalid(problems.join("; ")))
        }
    }

    /// 20% of the rows.
    pub fn test_rows(&self) -> usize {
        self.n_samples / 5
    }

    /// 16% of the rows.
    pub fn unlabeled_rows(&self) -> usize {
        self.n_samples * 4 / 25
    }

    /// The remainder, shared evenly; leftovers are not generated.
    pub fn client_rows(&self) -> usize {
        (self.n_samples - self.test_rows() - self.unlabeled_rows()) / self.n_clients.max(1)
    }
}

fn gaussian(rng: &mut SeedRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Generator {
    rng: SeedRng,
    normal: Vec<f64>,
    label_noise: f64,
    cols: usize,
}

impl Generator {
    fn shard(&mut self, rows: usize, offset: &[f64]) -> Result<LabeledDataset, DataError> {
        let mut values = Vec::with_capacity(rows * self.cols);
        let mut labels = Vec::with_capacity(rows);
        for _ in 0..rows {
            let z = gaussian(&mut self.rng, self.cols);
            let noise: f64 = StandardNormal.sample(&mut self.rng);
            let margin = dot(&z, &self.normal) + self.label_noise * noise;
            labels.push(u8::from(margin > 0.0));
            values.extend(z.iter().zip(offset).map(|(x, o)| x + o));
        }
        LabeledDataset::new(FeatureMatrix::new(rows, self.cols, values)?, labels)
    }
}

/// Generates test, public and biased client shards. Deterministic in `spec`.
pub fn synth_biased_shards(spec: &SynthSpec) -> Result<SplitParts, DataError> {
    spec.validate()?;
    let cols = spec.n_features;
    let mut rng = SeedRng::seed_from_u64(spec.seed);
    let normal = unit(gaussian(&mut rng, cols));
    let raw = gaussian(&mut rng, cols);
    // Gram-Schmidt against the hyperplane normal.
    let proj = dot(&raw, &normal);
    let ortho = unit(raw.iter().zip(&normal).map(|(r, n)| r - proj * n).collect());

    let mut gen = Generator {
        rng,
        normal,
        label_noise: spec.label_noise,
        cols,
    };
    let zero = vec![0.0; cols];
    let test = gen.shard(spec.test_rows(), &zero)?;
    let unlabeled = UnlabeledDataset::from_labeled(gen.shard(spec.unlabeled_rows(), &zero)?);
    let mut clients = Vec::with_capacity(spec.n_clients);
    for k in 0..spec.n_clients {
        let angle = std::f64::consts::TAU * k as f64 / spec.n_clients as f64;
        let (s, c) = angle.sin_cos();
        let offset: Vec<f64> = gen
            .normal
            .iter()
            .zip(&ortho)
            .map(|(n, o)| spec.bias_strength * (c * n + s * o))
            .collect();
        clients.push(gen.shard(spec.client_rows(), &offset)?);
    }
    Ok(SplitParts {
        test,
        unlabeled,
        clients,
    })
}
