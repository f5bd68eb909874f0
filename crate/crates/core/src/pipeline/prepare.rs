use std::collections::BTreeMap;

use crate::error::{domain, Result};
use crate::ordinal::ThresholdSpec;

use super::balance::{balance_training, BalancePlan};
use super::dataset::StoredSample;
use super::label::{default_role, SplitRole};
use super::sample::LabeledSample;

/// Train, validation and test samples after role assignment.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PreparedSplits {
    pub train: Vec<LabeledSample>,
    pub validation: Vec<LabeledSample>,
    pub test: Vec<LabeledSample>,
}

impl PreparedSplits {
    pub fn get(&self, role: SplitRole) -> &[LabeledSample] {
        match role {
            SplitRole::Train => &self.train,
            SplitRole::Validation => &self.validation,
            SplitRole::Test => &self.test,
        }
    }

    pub fn roles(&self) -> [(SplitRole, &[LabeledSample]); 3] {
        [
            (SplitRole::Train, &self.train),
            (SplitRole::Validation, &self.validation),
            (SplitRole::Test, &self.test),
        ]
    }
}

/// Relabels under `threshold`, routes samples to train/val/test by partition
/// and, when `balance` is given, balances the training split only.
pub fn prepare_splits(
    samples: &[StoredSample],
    threshold: ThresholdSpec,
    balance: Option<(&BalancePlan, u64)>,
) -> Result<PreparedSplits> {
    let mut by_role: BTreeMap<SplitRole, Vec<LabeledSample>> = BTreeMap::new();
    for s in samples {
        by_role
            .entry(default_role(s.partition))
            .or_default()
            .push(s.sample.relabel(threshold));
    }
    let mut take = |role: SplitRole| -> Result<Vec<LabeledSample>> {
        by_role
            .remove(&role)
            .ok_or_else(|| domain(format!("no samples fall in the {role} split")))
    };
    let (train, validation, test) = (
        take(SplitRole::Train)?,
        take(SplitRole::Validation)?,
        take(SplitRole::Test)?,
    );
    let train = match balance {
        Some((plan, seed)) => balance_training(&train, plan, seed)?,
        None => train,
    };
    Ok(PreparedSplits {
        train,
        validation,
        test,
    })
}
