// SPDX-License-Identifier: Apache-2.0

//! Independent oracles and test doubles shared by the integration tests.

#![allow(dead_code)]

use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use aafv_core::dataio::{FeatureMatrix, LabeledDataset};
use aafv_core::learners::{Arch, Learner, ModelKind, TrainParams};
use aafv_core::protocol::{MajorityServer, VoteServer};
use aafv_core::voting::{GlobalVotes, Vote, VoteMatrix};
use rand::Rng;

pub fn repo_root() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

// ---------------------------------------------------------------------------
// Piecewise pdf, integrated numerically.

/// The output density of the piecewise mechanism at `x` for input `t`,
/// written out from the mechanism's definition.
pub fn piecewise_pdf(eps: f64, t: f64, x: f64) -> f64 {
    let e_half = (eps / 2.0).exp();
    let big_t = (e_half + 1.0) / (e_half - 1.0);
    let p = (eps.exp() - e_half) / (2.0 * e_half + 2.0);
    let l = (big_t + 1.0) / 2.0 * t - (big_t - 1.0) / 2.0;
    let r = l + big_t - 1.0;
    if x < -big_t || x > big_t {
        0.0
    } else if (l..=r).contains(&x) {
        p
    } else {
        p / eps.exp()
    }
}

pub struct PdfMoments {
    pub bound: f64,
    pub mass: f64,
    pub mean: f64,
    pub variance: f64,
    pub window_mass: f64,
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Mass, mean, variance and window mass of the pdf, by composite Simpson
/// integration over each constant piece.
pub fn piecewise_moments(eps: f64, t: f64) -> PdfMoments {
    let e_half = (eps / 2.0).exp();
    let big_t = (e_half + 1.0) / (e_half - 1.0);
    let l = (big_t + 1.0) / 2.0 * t - (big_t - 1.0) / 2.0;
    let r = l + big_t - 1.0;
    let mid = |a: f64, b: f64| (a + b) / 2.0;
    let pieces = [(-big_t, l), (l, r), (r, big_t)];
    let moment = |k: i32| -> f64 {
        pieces
            .iter()
            .map(|&(a, b)| {
                let d = piecewise_pdf(eps, t, mid(a, b));
                simpson(|x| d * x.powi(k), a, b, 2000)
            })
            .sum()
    };
    let mass = moment(0);
    let mean = moment(1);
    let variance = moment(2) - mean * mean;
    let window_mass = simpson(|_| piecewise_pdf(eps, t, mid(l, r)), l, r, 2);
    PdfMoments {
        bound: big_t,
        mass,
        mean,
        variance,
        window_mass,
    }
}

// ---------------------------------------------------------------------------
// Vote counting.

/// Counts the three symbols and applies the strict-majority rule.
pub fn brute_majority(column: &[Vote]) -> Vote {
    let mut zeros = 0;
    let mut ones = 0;
    for v in column {
        match v.symbol() {
            '0' => zeros += 1,
            '1' => ones += 1,
            _ => {}
        }
    }
    if ones > zeros {
        Vote::Positive
    } else if zeros > ones {
        Vote::Negative
    } else {
        Vote::Abstain
    }
}

/// Every sequence of `k` votes, in base-3 order.
pub fn all_vote_combinations(k: usize) -> Vec<Vec<Vote>> {
    let symbols = [Vote::Negative, Vote::Positive, Vote::Abstain];
    (0..3usize.pow(k as u32))
        .map(|mut code| {
            (0..k)
                .map(|_| {
                    let v = symbols[code % 3];
                    code /= 3;
                    v
                })
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Finite differences.

pub struct GradFixture {
    pub learner: Box<dyn Learner>,
    pub batch: LabeledDataset,
}

fn mlp_preactivations(params: &[f64], input_dim: usize, hidden_dim: usize, row: &[f64]) -> Vec<f64> {
    let b1 = hidden_dim * input_dim;
    (0..hidden_dim)
        .map(|h| {
            params[h * input_dim..(h + 1) * input_dim]
                .iter()
                .zip(row)
                .map(|(w, x)| w * x)
                .sum::<f64>()
                + params[b1 + h]
        })
        .collect()
}

/// Distance from the nearest point where the loss is not differentiable.
fn kink_distance(learner: &dyn Learner, batch: &LabeledDataset) -> f64 {
    let mut nearest = f64::INFINITY;
    for (row, &y) in batch.features().iter_rows().zip(batch.labels()) {
        let margin = if y == 1 { 1.0 } else { -1.0 } * learner.score_row(row);
        match learner.arch() {
            Arch::Perceptron { .. } => nearest = nearest.min(margin.abs()),
            Arch::Svm { .. } => nearest = nearest.min((margin - 1.0).abs()),
            Arch::Mlp { input_dim, hidden_dim } => {
                for a in mlp_preactivations(learner.params(), input_dim, hidden_dim, row) {
                    nearest = nearest.min(a.abs());
                }
            }
            Arch::Logistic { .. } => {}
        }
    }
    nearest
}

/// A random batch and parameter vector at least `clearance` away from any
/// kink of `kind`'s loss.
pub fn grad_fixture(kind: ModelKind, rng: &mut impl Rng, clearance: f64) -> GradFixture {
    loop {
        let dim = rng.gen_range(2..7);
        let rows = rng.gen_range(3..12);
        let arch = Arch::for_kind(kind, dim, Some(rng.gen_range(2..5)));
        let params: Vec<f64> = (0..arch.param_len()).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let train = TrainParams {
            l2: 0.05,
            ..TrainParams::default()
        };
        let learner = arch.with_params(train, params).expect("valid fixture params");
        let values: Vec<f64> = (0..rows * dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let labels: Vec<u8> = (0..rows).map(|_| rng.gen_range(0..2)).collect();
        let batch = LabeledDataset::new(FeatureMatrix::new(rows, dim, values).unwrap(), labels).unwrap();
        if kink_distance(learner.as_ref(), &batch) > clearance {
            return GradFixture { learner, batch };
        }
    }
}

/// Central differences of the batch loss.
pub fn numeric_gradient(learner: &dyn Learner, batch: &LabeledDataset, h: f64) -> Vec<f64> {
    let idx: Vec<usize> = (0..batch.len()).collect();
    let mut scratch = vec![0.0; learner.params().len()];
    let mut probe = learner.clone_box();
    let base = learner.params().to_vec();
    (0..base.len())
        .map(|j| {
            let mut p = base.clone();
            p[j] = base[j] + h;
            probe.set_params(&p).unwrap();
            let up = probe.batch_loss_grad(batch, &idx, &mut scratch);
            p[j] = base[j] - h;
            probe.set_params(&p).unwrap();
            let down = probe.batch_loss_grad(batch, &idx, &mut scratch);
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Largest componentwise `|a - n| / max(|a|, |n|, floor)`.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Welch reference values.

pub struct WelchFixture {
    pub a: &'static [f64],
    pub b: &'static [f64],
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

/// Two-sided p-values from a 50-digit evaluation of the Student-t CDF.
pub const WELCH_REFERENCE: [WelchFixture; 10] = [
    WelchFixture {
        a: &[1.0, 2.0, 3.0, 4.0, 5.0],
        b: &[2.0, 3.0, 4.0, 5.0, 6.0],
        t: -1.0,
        df: 8.0,
        p: 0.34659350708733425,
    },
    WelchFixture {
        a: &[0.7, 0.8],
        b: &[0.75, 0.9, 0.85],
        t: -1.2499999999999993,
        df: 2.426540284360188,
        p: 0.31831094322025658,
    },
    WelchFixture {
        a: &[1.1, 2.3, 1.9, 3.4, 2.2, 2.8],
        b: &[3.1, 4.2, 3.9, 5.0, 4.4],
        t: -4.1102238670233745,
        df: 8.9320463917813747,
        p: 0.0026789464358397491,
    },
    WelchFixture {
        a: &[10.0, 12.0, 9.0, 11.0, 13.0, 10.0, 12.0],
        b: &[8.0, 9.0, 7.0, 10.0, 8.0],
        t: 3.519578746806757,
        df: 9.7623263385589724,
        p: 0.0057497236634394503,
    },
    WelchFixture {
        a: &[0.71, 0.73, 0.70, 0.74, 0.72, 0.75, 0.69, 0.73],
        b: &[0.70, 0.71, 0.69, 0.72, 0.70, 0.68, 0.71, 0.70],
        t: 2.373861859036065,
        df: 11.617725258493338,
        p: 0.035783076938364847,
    },
    WelchFixture {
        a: &[5.0, 5.5, 4.8, 5.2],
        b: &[5.1, 5.3, 4.9, 5.6, 5.0, 5.4],
        t: -0.49784459634898879,
        df: 5.9677058797489124,
        p: 0.63640380468917939,
    },
    WelchFixture {
        a: &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0],
        b: &[1.5, 1.6, 1.4, 1.5, 1.55],
        t: -0.058846158198680551,
        df: 9.6927140554353653,
        p: 0.95427014535170774,
    },
    WelchFixture {
        a: &[100.0, 101.0, 99.0, 102.0, 98.0],
        b: &[110.0, 112.0, 108.0, 111.0, 109.0],
        t: -10.0,
        df: 8.0,
        p: 8.488181527628492e-6,
    },
    WelchFixture {
        a: &[0.5, 0.9, 0.1, 0.7, 0.3],
        b: &[0.45, 0.55, 0.5, 0.52, 0.48, 0.51],
        t: -0.011727754709126084,
        df: 4.0785153242493585,
        p: 0.99119413837379789,
    },
    WelchFixture {
        a: &[2.0, 4.0, 6.0],
        b: &[1.0, 1.5, 2.5, 3.0, 10.0, 12.0, 0.5],
        t: -0.16977626910923625,
        df: 7.889240277703331,
        p: 0.86945873489110993,
    },
];

// ---------------------------------------------------------------------------
// Information-flow doubles.

fn row_key(row: &[f64]) -> Vec<u64> {
    row.iter().map(|v| v.to_bits()).collect()
}

pub fn row_set<'a>(matrices: impl IntoIterator<Item = &'a FeatureMatrix>) -> Arc<HashSet<Vec<u64>>> {
    Arc::new(
        matrices
            .into_iter()
            .flat_map(|m| m.iter_rows().map(row_key).collect::<Vec<_>>())
            .collect(),
    )
}

/// Wraps a learner and flags any row it is shown outside the rows it may
/// legitimately see.
#[derive(Debug, Clone)]
pub struct SpyLearner {
    pub inner: Box<dyn Learner>,
    /// Rows allowed in training batches: own shard and public set.
    pub train_rows: Arc<HashSet<Vec<u64>>>,
    /// Rows allowed in scoring calls: own shard, public and test sets.
    pub score_rows: Arc<HashSet<Vec<u64>>>,
    pub violations: Arc<AtomicUsize>,
    pub rows_seen: Arc<AtomicUsize>,
}

impl SpyLearner {
    fn check(&self, allowed: &HashSet<Vec<u64>>, row: &[f64]) {
        self.rows_seen.fetch_add(1, Ordering::Relaxed);
        if !allowed.contains(&row_key(row)) {
            self.violations.fetch_add(1, Ordering::Relaxed);
        }
    }
}

impl Learner for SpyLearner {
    fn arch(&self) -> Arch {
        self.inner.arch()
    }
    fn train_params(&self) -> TrainParams {
        self.inner.train_params()
    }
    fn params(&self) -> &[f64] {
        self.inner.params()
    }
    fn params_mut(&mut self) -> &mut [f64] {
        self.inner.params_mut()
    }
    fn score_row(&self, row: &[f64]) -> f64 {
        self.check(&self.score_rows, row);
        self.inner.score_row(row)
    }
    fn batch_loss_grad(&self, data: &LabeledDataset, indices: &[usize], grad: &mut [f64]) -> f64 {
        for row in data.features().iter_rows() {
            self.check(&self.train_rows, row);
        }
        self.inner.batch_loss_grad(data, indices, grad)
    }
    fn clone_box(&self) -> Box<dyn Learner> {
        Box::new(self.clone())
    }
}

/// Majority server that records exactly what it was given.
#[derive(Default)]
pub struct RecordingServer {
    pub uploads: Arc<Mutex<Vec<VoteMatrix>>>,
}

impl VoteServer for RecordingServer {
    fn consolidate(&mut self, uploads: &VoteMatrix) -> GlobalVotes {
        self.uploads.lock().unwrap().push(uploads.clone());
        MajorityServer.consolidate(uploads)
    }
}
