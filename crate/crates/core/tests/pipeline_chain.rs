use std::collections::BTreeMap;

use proptest::prelude::*;

use bcepp_core::ordinal::{FlareClass, ThresholdSpec};
use bcepp_core::par::Exec;
use bcepp_core::pipeline::*;

fn raster(w: usize, h: usize) -> impl Strategy<Value = Raster> {
    prop::collection::vec(-2000.0f64..2000.0, w * h)
        .prop_map(move |v| Raster::new(w, h, v).unwrap())
}

fn raster_and_bitmap() -> impl Strategy<Value = (Raster, Bitmap)> {
    (1usize..24, 1usize..24).prop_flat_map(|(w, h)| {
        (
            raster(w, h),
            prop::collection::vec(any::<bool>(), w * h)
                .prop_map(move |m| Bitmap::new(w, h, m).unwrap()),
        )
    })
}

proptest! {
    #[test]
    fn chain_output_is_square_and_in_range((r, b) in raster_and_bitmap(), size in 1usize..20) {
        let out = preprocess_to(&r, &b, size).unwrap();
        prop_assert_eq!((out.width(), out.height()), (size, size));
        prop_assert!(out.values().iter().all(|v| (0.0..=255.0).contains(v)));
    }

    #[test]
    fn cleaning_steps_are_idempotent((r, b) in raster_and_bitmap()) {
        let c = clip_flux(&r);
        prop_assert_eq!(clip_flux(&c), c.clone());
        let z = zero_noise(&c);
        prop_assert_eq!(zero_noise(&z), z.clone());
        let m = apply_bitmap(&z, &b).unwrap();
        prop_assert_eq!(apply_bitmap(&m, &b).unwrap(), m);
    }

    #[test]
    fn window_sums_match_direct_summation(r in raster(12, 9), row in 0usize..9, col in 0usize..12) {
        let sat = SummedAreaTable::unsigned(&r);
        let (h, w) = (9 - row, 12 - col);
        let direct: f64 = (row..row + h)
            .flat_map(|i| (col..col + w).map(move |j| (i, j)))
            .map(|(i, j)| r.get(i, j).abs())
            .sum();
        let fast = sat.window_sum(row, col, h, w);
        prop_assert!((fast - direct).abs() <= 1e-6 * direct.max(1.0));
    }
}

fn small_spec(seed: u64) -> SynthSpec {
    let counts: BTreeMap<FlareClass, usize> = [
        (FlareClass::FQ, 30),
        (FlareClass::B, 6),
        (FlareClass::C, 6),
        (FlareClass::M, 6),
        (FlareClass::X, 6),
    ]
    .into_iter()
    .collect();
    SynthSpec {
        image_size: 8,
        ..SynthSpec::new(counts, seed)
    }
}

#[test]
fn synthetic_data_survives_a_disk_round_trip() {
    let samples = synth_dataset(&small_spec(3)).unwrap();
    let assignment = partition_samples(&samples).unwrap();
    let stored: Vec<StoredSample> = samples
        .into_iter()
        .map(|s| StoredSample {
            partition: assignment.partition(s.region_id()).unwrap(),
            sample: s,
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), MANIFEST_FILE, &stored).unwrap();
    let back = read_dataset(dir.path(), MANIFEST_FILE, ThresholdSpec::default()).unwrap();
    assert_eq!(back, stored);
    assert_eq!(
        read_manifest(&dir.path().join(MANIFEST_FILE))
            .unwrap()
            .len(),
        stored.len()
    );
}

#[test]
fn regions_never_straddle_partitions() {
    let samples = synth_dataset(&small_spec(5)).unwrap();
    let assignment = partition_samples(&samples).unwrap();
    for s in &samples {
        let p = assignment.partition(s.region_id()).unwrap();
        assert!(samples
            .iter()
            .filter(|o| o.region_id() == s.region_id())
            .all(|o| assignment.partition(o.region_id()) == Some(p)));
    }
}

#[test]
fn executors_agree_on_synthesis_and_balancing() {
    let spec = small_spec(11);
    let seq = synth_dataset_with(&spec, Exec::Sequential).unwrap();
    assert_eq!(seq, synth_dataset_with(&spec, Exec::default()).unwrap());
    let plan = BalancePlan::default();
    assert_eq!(
        balance_training_with(&seq, &plan, 2, Exec::Sequential).unwrap(),
        balance_training_with(&seq, &plan, 2, Exec::default()).unwrap()
    );
}

#[test]
fn prepared_splits_only_balance_training() {
    let spec = SynthSpec {
        image_size: 4,
        ..small_spec(9)
    };
    let mut big = spec.clone();
    big.counts.values_mut().for_each(|n| *n *= 10);
    let samples = synth_dataset(&big).unwrap();
    let assignment = partition_samples(&samples).unwrap();
    let stored: Vec<StoredSample> = samples
        .into_iter()
        .map(|s| StoredSample {
            partition: assignment.partition(s.region_id()).unwrap(),
            sample: s,
        })
        .collect();
    let plain = prepare_splits(&stored, ThresholdSpec::default(), None).unwrap();
    let balanced = prepare_splits(
        &stored,
        ThresholdSpec::default(),
        Some((&BalancePlan::default(), 1)),
    )
    .unwrap();
    assert_eq!(plain.validation, balanced.validation);
    assert_eq!(plain.test, balanced.test);
    let fl = |v: &[LabeledSample]| {
        v.iter()
            .filter(|s| s.label() == bcepp_core::ordinal::BinaryLabel::FL)
            .count()
    };
    assert_eq!(fl(&balanced.train), AUGMENTATION_FACTOR * fl(&plain.train));
}
