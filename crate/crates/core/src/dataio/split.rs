// SPDX-License-Identifier: Apache-2.0

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::{DataError, LabeledDataset, UnlabeledDataset};
use crate::seed::SeedRng;

/// Sizes of the test, public and per-client portions, plus the shuffle seed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub test_count: usize,
    pub unlabeled_count: usize,
    pub client_counts: Vec<usize>,
    pub shuffle_seed: u64,
}

impl SplitPlan {
    pub fn total(&self) -> usize {
        self.test_count + self.unlabeled_count + self.client_counts.iter().sum::<usize>()
    }

    pub fn validate(&self, available: usize) -> Result<(), DataError> {
        if self.test_count == 0 || self.unlabeled_count == 0 {
            return Err(DataError::Invalid("split counts must be >= 1".into()));
        }
        if self.client_counts.is_empty() || self.client_counts.contains(&0) {
            return Err(DataError::Invalid(
                "split needs at least one client, each with >= 1 row".into(),
            ));
        }
        if self.total() > available {
            return Err(DataError::Invalid(format!(
                "split asks for {} rows but only {available} are available",
                self.total()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitParts {
    pub test: LabeledDataset,
    pub unlabeled: UnlabeledDataset,
    pub clients: Vec<LabeledDataset>,
}

/// Shuffles row indices with a seeded Fisher-Yates pass, then slices them
/// contiguously into test, unlabeled and client portions. Leftover rows are
/// dropped.
pub fn split(data: &LabeledDataset, plan: &SplitPlan) -> Result<SplitParts, DataError> {
    plan.validate(data.len())?;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = SeedRng::seed_from_u64(plan.shuffle_seed);
    order.shuffle(&mut rng);

    let mut cursor = 0;
    let mut take = |n: usize| {
        let part = &order[cursor..cursor + n];
        cursor += n;
        data.select(part)
    };
    let test = take(plan.test_count);
    let unlabeled = UnlabeledDataset::from_labeled(take(plan.unlabeled_count));
    let clients = plan.client_counts.iter().map(|&n| take(n)).collect();
    Ok(SplitParts {
        test,
        unlabeled,
        clients,
    })
}
