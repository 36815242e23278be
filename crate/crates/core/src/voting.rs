// SPDX-License-Identifier: Apache-2.0

//! Abstention-aware votes and their majority consolidation.
//!
//! A client votes Negative when its perturbed confidence is `<= tau`,
//! Positive when it is `>= 1 - tau`, and abstains in between. The server
//! counts only non-abstaining votes and takes a strict majority; ties,
//! including the all-abstain case, become a global abstention. Rows with a
//! global vote become pseudo-labeled training data.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataio::{LabeledDataset, UnlabeledDataset};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum VotingError {
    #[error("tau must lie in (0, 0.5), got {0}")]
    InvalidTau(f64),
    #[error("vote matrix is empty")]
    Empty,
    #[error("client {client} voted on {actual} samples, expected {expected}")]
    RaggedVotes {
        client: usize,
        expected: usize,
        actual: usize,
    },
    #[error("{votes} global votes for {rows} unlabeled rows")]
    LengthMismatch { votes: usize, rows: usize },
    #[error("bad vote symbol {0:?}")]
    BadSymbol(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Vote {
    Negative,
    Positive,
    Abstain,
}

impl Vote {
    pub fn symbol(self) -> char {
        match self {
            Vote::Negative => '0',
            Vote::Positive => '1',
            Vote::Abstain => '*',
        }
    }

    pub fn from_symbol(s: &str) -> Result<Self, VotingError> {
        match s {
            "0" => Ok(Vote::Negative),
            "1" => Ok(Vote::Positive),
            "*" => Ok(Vote::Abstain),
            other => Err(VotingError::BadSymbol(other.to_string())),
        }
    }

    /// The binary label carried by a non-abstaining vote.
    pub fn label(self) -> Option<u8> {
        match self {
            Vote::Negative => Some(0),
            Vote::Positive => Some(1),
            Vote::Abstain => None,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Vote::Negative => Vote::Positive,
            Vote::Positive => Vote::Negative,
            Vote::Abstain => Vote::Abstain,
        }
    }
}

impl fmt::Display for Vote {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Abstention threshold tau, restricted to `(0, 0.5)` so the three vote
/// regions never overlap.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Threshold(f64);

impl Threshold {
    pub fn new(tau: f64) -> Result<Self, VotingError> {
        if tau > 0.0 && tau < 0.5 {
            Ok(Self(tau))
        } else {
            Err(VotingError::InvalidTau(tau))
        }
    }

    pub fn tau(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Threshold {
    type Error = VotingError;

    fn try_from(v: f64) -> Result<Self, VotingError> {
        Self::new(v)
    }
}

impl From<Threshold> for f64 {
    fn from(t: Threshold) -> f64 {
        t.0
    }
}

/// Votes on perturbed confidences. Applies to the whole perturbed range,
/// including values outside `[0, 1]`.
pub fn local_vote(perturbed: &[f64], tau: Threshold) -> Vec<Vote> {
    let t = tau.tau();
    perturbed
        .iter()
        .map(|&p| {
            if p <= t {
                Vote::Negative
            } else if p >= 1.0 - t {
                Vote::Positive
            } else {
                Vote::Abstain
            }
        })
        .collect()
}

/// Votes of K clients on the same N_u samples, one row per client.
#[derive(Clone, Debug, PartialEq)]
pub struct VoteMatrix {
    samples: usize,
    rows: Vec<Vec<Vote>>,
}

impl VoteMatrix {
    pub fn new(rows: Vec<Vec<Vote>>) -> Result<Self, VotingError> {
        let samples = rows.first().ok_or(VotingError::Empty)?.len();
        for (client, r) in rows.iter().enumerate() {
            if r.len() != samples {
                return Err(VotingError::RaggedVotes {
                    client,
                    expected: samples,
                    actual: r.len(),
                });
            }
        }
        Ok(Self { samples, rows })
    }

    pub fn clients(&self) -> usize {
        self.rows.len()
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn client_votes(&self, client: usize) -> &[Vote] {
        &self.rows[client]
    }

    pub fn abstain_counts(&self) -> Vec<usize> {
        self.rows
            .iter()
            .map(|r| r.iter().filter(|v| **v == Vote::Abstain).count())
            .collect()
    }

    /// One line per sample, one column per client (`client0..`).
    pub fn to_csv(&self) -> String {
        let header: Vec<String> = (0..self.clients()).map(|k| format!("client{k}")).collect();
        let mut out = format!("sample,{}\n", header.join(","));
        for i in 0..self.samples {
            out.push_str(&i.to_string());
            for r in &self.rows {
                out.push(',');
                out.push(r[i].symbol());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, VotingError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(VotingError::Empty)?;
        let clients = header.split(',').count().saturating_sub(1);
        let mut rows = vec![Vec::new(); clients];
        for line in lines.filter(|l| !l.is_empty()) {
            let fields: Vec<&str> = line.split(',').skip(1).collect();
            if fields.len() != clients {
                return Err(VotingError::BadSymbol(line.to_string()));
            }
            for (k, f) in fields.iter().enumerate() {
                rows[k].push(Vote::from_symbol(f)?);
            }
        }
        Self::new(rows)
    }
}

/// Consolidated per-sample votes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalVotes(pub Vec<Vote>);

impl GlobalVotes {
    pub fn votes(&self) -> &[Vote] {
        &self.0
    }

    pub fn abstain_count(&self) -> usize {
        self.0.iter().filter(|v| **v == Vote::Abstain).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample,global\n");
        for (i, v) in self.0.iter().enumerate() {
            out.push_str(&format!("{i},{v}\n"));
        }
        out
    }
}

/// Strict majority of non-abstaining votes per sample; ties abstain.
pub fn consolidate(votes: &VoteMatrix) -> GlobalVotes {
    let global = (0..votes.samples())
        .map(|i| {
            let (mut pos, mut neg) = (0usize, 0usize);
            for r in &votes.rows {
                match r[i] {
                    Vote::Positive => pos += 1,
                    Vote::Negative => neg += 1,
                    Vote::Abstain => {}
                }
            }
            match pos.cmp(&neg) {
                std::cmp::Ordering::Greater => Vote::Positive,
                std::cmp::Ordering::Less => Vote::Negative,
                std::cmp::Ordering::Equal => Vote::Abstain,
            }
        })
        .collect();
    GlobalVotes(global)
}

/// Public rows that received a global vote, labeled by it.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoLabeledDataset {
    pub data: LabeledDataset,
    /// Indices into the unlabeled set, ascending.
    pub source_rows: Vec<usize>,
}

impl PseudoLabeledDataset {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

pub fn build_pseudo_dataset(
    unlabeled: &UnlabeledDataset,
    global: &GlobalVotes,
) -> Result<PseudoLabeledDataset, VotingError> {
    if global.0.len() != unlabeled.len() {
        return Err(VotingError::LengthMismatch {
            votes: global.0.len(),
            rows: unlabeled.len(),
        });
    }
    let (rows, labels): (Vec<usize>, Vec<u8>) = global
        .0
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.label().map(|y| (i, y)))
        .unzip();
    let features = unlabeled.features().select(&rows);
    // Labels come from votes and rows from the same filter, so both are valid.
    let data = LabeledDataset::new(features, labels).expect("pseudo labels are aligned and binary");
    Ok(PseudoLabeledDataset {
        data,
        source_rows: rows,
    })
}
