//! Fixed-seed desk-scale comparison of BCE and BCE-PP on synthetic data with
//! the flare-class mix of the full dataset at 1/50 scale.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::Result;
use crate::metrics::{ConfusionMatrix, SkillScores};
use crate::ordinal::{FlareClass, ThresholdSpec};
use crate::par::Exec;
use crate::pipeline::{
    partition_samples, prepare_splits, synth_dataset_with, BalancePlan, PreparedSplits,
    StoredSample, SynthSpec, DEFAULT_SYNTH_SIZE,
};

use super::model::{FeatureSpec, ModelSpec, Standardizer};
use super::train::{evaluate, train, EpochLog, LossKind, Split, TrainConfig, DEFAULT_CUTOFF};

/// Per-class totals over train, validation and test of the source dataset.
pub fn full_dataset_counts() -> BTreeMap<FlareClass, usize> {
    use FlareClass::*;
    [
        (FQ, 182_880 + 92_716 + 95_770),
        (A, 19 + 44),
        (B, 12_130 + 6_210 + 4_472),
        (C, 18_060 + 8_191 + 10_460),
        (M, 3_168 + 1_384 + 1_853),
        (X, 188 + 154 + 320),
    ]
    .into_iter()
    .collect()
}

/// Counts divided by `scale`, rounded to nearest.
pub fn scaled_counts(scale: usize) -> BTreeMap<FlareClass, usize> {
    full_dataset_counts()
        .into_iter()
        .map(|(c, n)| (c, ((n as f64) / scale as f64).round() as usize))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSpec {
    pub seed: u64,
    pub scale: usize,
    pub image_size: usize,
    pub features: FeatureSpec,
    pub model: ModelSpec,
    pub epochs: usize,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        let features = FeatureSpec::default();
        BenchmarkSpec {
            seed: 42,
            scale: 50,
            image_size: DEFAULT_SYNTH_SIZE,
            features,
            model: ModelSpec::linear(features.dim()),
            epochs: super::train::DEFAULT_EPOCHS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRun {
    pub config: TrainConfig,
    pub history: Vec<EpochLog>,
    pub validation: (ConfusionMatrix, SkillScores),
    pub test: (ConfusionMatrix, SkillScores),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub spec: BenchmarkSpec,
    pub split_sizes: [(usize, usize); 3],
    pub bce: BenchmarkRun,
    pub bce_pp: BenchmarkRun,
}

/// Synthesizes, partitions and balances the benchmark dataset.
pub fn benchmark_splits(spec: &BenchmarkSpec, exec: Exec) -> Result<PreparedSplits> {
    let synth = SynthSpec {
        counts: scaled_counts(spec.scale),
        image_size: spec.image_size,
        seed: spec.seed,
        threshold: ThresholdSpec::default(),
    };
    let samples = synth_dataset_with(&synth, exec)?;
    let assignment = partition_samples(&samples)?;
    let stored: Vec<StoredSample> = samples
        .into_iter()
        .map(|sample| StoredSample {
            partition: assignment
                .partition(sample.region_id())
                .expect("every region is assigned"),
            sample,
        })
        .collect();
    prepare_splits(
        &stored,
        ThresholdSpec::default(),
        Some((&BalancePlan::default(), spec.seed)),
    )
}

pub fn run_benchmark(spec: &BenchmarkSpec, exec: Exec) -> Result<BenchmarkReport> {
    let splits = benchmark_splits(spec, exec)?;
    let [mut train_split, mut val_split, mut test_split] =
        [&splits.train, &splits.validation, &splits.test]
            .map(|s| Split::from_samples(s, spec.features, exec));
    let scaler = Standardizer::fit(&train_split.features);
    for split in [&mut train_split, &mut val_split, &mut test_split] {
        scaler.apply_all(&mut split.features);
    }
    let split_sizes = [&train_split, &val_split, &test_split].map(|s| {
        (
            s.count(crate::ordinal::BinaryLabel::NF),
            s.count(crate::ordinal::BinaryLabel::FL),
        )
    });

    let run = |kind: LossKind| -> Result<BenchmarkRun> {
        let mut config = TrainConfig::defaults(kind);
        config.seed = spec.seed;
        config.epochs = spec.epochs;
        let out = train(&train_split, &val_split, spec.model.clone(), &config, exec)?;
        Ok(BenchmarkRun {
            validation: evaluate(&out.model, &val_split, DEFAULT_CUTOFF, exec)?,
            test: evaluate(&out.model, &test_split, DEFAULT_CUTOFF, exec)?,
            config,
            history: out.history,
        })
    };
    Ok(BenchmarkReport {
        spec: spec.clone(),
        split_sizes,
        bce: run(LossKind::Bce)?,
        bce_pp: run(LossKind::BcePp)?,
    })
}

impl BenchmarkReport {
    /// Plain-text summary with confusion counts for both losses.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "seed={} scale=1/{}", self.spec.seed, self.spec.scale);
        for (name, (nf, fl)) in ["train", "val", "test"].iter().zip(self.split_sizes) {
            let _ = writeln!(out, "{name}: NF={nf} FL={fl}");
        }
        for run in [&self.bce, &self.bce_pp] {
            let first = run.history.first().map_or(f64::NAN, |e| e.train_loss);
            let last = run.history.last().map_or(f64::NAN, |e| e.train_loss);
            let _ = writeln!(
                out,
                "{}: epochs={} train_loss {first:.6} -> {last:.6}",
                run.config.loss_kind,
                run.history.len()
            );
            for (split, (cm, s)) in [("val", run.validation), ("test", run.test)] {
                let _ = writeln!(
                    out,
                    "  {split}: tp={} fp={} tn={} fn={} tss={:.4} hss={:.4} css={:.4}",
                    cm.tp, cm.fp, cm.tn, cm.fn_, s.tss, s.hss, s.css
                );
            }
        }
        out
    }
}
