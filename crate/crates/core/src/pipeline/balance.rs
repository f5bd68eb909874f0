//! Training-set balancing: every FL sample is kept and joined by five
//! augmented variants, NF subclasses are undersampled without replacement.

use std::collections::BTreeMap;

use rand::seq::index;

use crate::error::{domain, Result};
use crate::ordinal::{binarize, BinaryLabel, FlareClass, ThresholdSpec};
use crate::par::Exec;

use super::augment::{augment, AugmentKind};
use super::sample::{rng_for, LabeledSample};

/// Copies per FL sample after augmentation (original plus five variants).
pub const AUGMENTATION_FACTOR: usize = 6;

/// Flare-quiet retention rate. Calibrated so 182,880 FQ samples keep exactly
/// 11,073, which balances NF against FL at 20,136 each.
pub const FQ_RETENTION: f64 = 11_073.0 / 182_880.0;
/// Retention rate for A, B and C samples.
pub const WEAK_FLARE_RETENTION: f64 = 0.30;

/// Per-subclass undersampling rates for NF samples. Subclasses without a rate
/// are kept whole.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancePlan {
    rates: BTreeMap<FlareClass, f64>,
}

impl BalancePlan {
    pub fn new(rates: BTreeMap<FlareClass, f64>) -> Result<Self> {
        for (c, &r) in &rates {
            if !(r > 0.0 && r <= 1.0) {
                return Err(domain(format!(
                    "undersampling rate for {c} must be in (0, 1], got {r}"
                )));
            }
        }
        Ok(BalancePlan { rates })
    }

    pub fn rate(&self, class: FlareClass) -> f64 {
        self.rates.get(&class).copied().unwrap_or(1.0)
    }

    pub fn rates(&self) -> &BTreeMap<FlareClass, f64> {
        &self.rates
    }
}

impl Default for BalancePlan {
    fn default() -> Self {
        let rates = [
            (FlareClass::FQ, FQ_RETENTION),
            (FlareClass::A, WEAK_FLARE_RETENTION),
            (FlareClass::B, WEAK_FLARE_RETENTION),
            (FlareClass::C, WEAK_FLARE_RETENTION),
        ]
        .into_iter()
        .collect();
        BalancePlan { rates }
    }
}

/// Number of NF samples kept from `n` at `rate`.
pub fn undersample_count(rate: f64, n: usize) -> usize {
    (rate * n as f64).round() as usize
}

/// Count-level balancing: the per-subclass sizes `balance_training` would
/// produce.
pub fn balanced_counts(
    counts: &BTreeMap<FlareClass, usize>,
    threshold: ThresholdSpec,
    plan: &BalancePlan,
) -> BTreeMap<FlareClass, usize> {
    counts
        .iter()
        .map(|(&c, &n)| {
            let out = match binarize(c, threshold) {
                BinaryLabel::FL => n * AUGMENTATION_FACTOR,
                BinaryLabel::NF => undersample_count(plan.rate(c), n),
            };
            (c, out)
        })
        .collect()
}

/// Balances a training split. Output order: input order, with each FL sample
/// immediately followed by its augmented variants. Augmented copies get fresh
/// ids counting up from the largest input id.
pub fn balance_training(
    samples: &[LabeledSample],
    plan: &BalancePlan,
    seed: u64,
) -> Result<Vec<LabeledSample>> {
    balance_training_with(samples, plan, seed, Exec::default())
}

pub fn balance_training_with(
    samples: &[LabeledSample],
    plan: &BalancePlan,
    seed: u64,
    exec: Exec,
) -> Result<Vec<LabeledSample>> {
    let mut keep = vec![false; samples.len()];
    for class in FlareClass::ALL {
        let members: Vec<usize> = samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.subclass() == class)
            .map(|(i, _)| i)
            .collect();
        if members.is_empty() {
            continue;
        }
        if members
            .iter()
            .all(|&i| samples[i].label() == BinaryLabel::FL)
        {
            members.iter().for_each(|&i| keep[i] = true);
            continue;
        }
        let k = undersample_count(plan.rate(class), members.len());
        // stream offset keeps class selection apart from per-sample streams
        let mut rng = rng_for(seed, u64::MAX - class.ordinal_index() as u64);
        for j in index::sample(&mut rng, members.len(), k) {
            keep[members[j]] = true;
        }
    }

    let augmented: Vec<Option<Vec<LabeledSample>>> = exec
        .map_range(samples.len(), |i| {
            let s = &samples[i];
            if s.label() != BinaryLabel::FL {
                return Ok(None);
            }
            AugmentKind::standard_set(seed, s.sample_id())
                .into_iter()
                .map(|kind| augment(s, kind))
                .collect::<Result<Vec<_>>>()
                .map(Some)
        })
        .into_iter()
        .collect::<Result<_>>()?;

    let mut next_id = samples
        .iter()
        .map(|s| s.sample_id())
        .max()
        .map_or(0, |m| m + 1);
    let mut out = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        if !keep[i] {
            continue;
        }
        out.push(s.clone());
        if let Some(variants) = &augmented[i] {
            for v in variants {
                out.push(v.clone().with_id(next_id));
                next_id += 1;
            }
        }
    }
    Ok(out)
}

/// Per-subclass counts of a sample list.
pub fn class_counts(samples: &[LabeledSample]) -> BTreeMap<FlareClass, usize> {
    let mut counts = BTreeMap::new();
    for s in samples {
        *counts.entry(s.subclass()).or_insert(0) += 1;
    }
    counts
}
