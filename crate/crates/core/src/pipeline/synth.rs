//! Synthetic active-region magnetograms.
//!
//! Each raw raster holds a bipolar pair of Gaussian flux concentrations over
//! a noisy background. Field strength, footprint and separation grow with the
//! flare subclass, with enough jitter that neighbouring subclasses overlap.
//! Rasters then go through the regular preprocessing chain.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{domain, Result};
use crate::ordinal::{FlareClass, ThresholdSpec};
use crate::par::Exec;

use super::preprocess::preprocess_to;
use super::raster::{Bitmap, Raster};
use super::sample::{rng_for, LabeledSample};

/// Default side length of synthetic images.
pub const DEFAULT_SYNTH_SIZE: usize = 16;
const SAMPLES_PER_REGION: usize = 6;
const METADATA_STREAM: u64 = u64::MAX - 64;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub counts: BTreeMap<FlareClass, usize>,
    pub image_size: usize,
    pub seed: u64,
    pub threshold: ThresholdSpec,
}

impl SynthSpec {
    pub fn new(counts: BTreeMap<FlareClass, usize>, seed: u64) -> Self {
        SynthSpec {
            counts,
            image_size: DEFAULT_SYNTH_SIZE,
            seed,
            threshold: ThresholdSpec::default(),
        }
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }
}

/// Raw gauss-valued raster plus its region-of-interest bitmap.
pub fn synth_raw<R: Rng>(class: FlareClass, size: usize, rng: &mut R) -> (Raster, Bitmap) {
    let k = class.ordinal_index() as f64;
    let jitter = Normal::<f64>::new(0.0, 0.15).expect("valid sigma");
    let shape_jitter = Normal::<f64>::new(0.0, 0.2).expect("valid sigma");
    let s = size as f64;

    let amplitude = (30.0 + 38.0 * k) * jitter.sample(rng).exp();
    let width = s * (0.07 + 0.018 * k) * shape_jitter.sample(rng).exp();
    let separation = s * (0.14 + 0.03 * k) * shape_jitter.sample(rng).exp();
    let angle = rng.gen_range(0.0..std::f64::consts::TAU);
    let center = (s - 1.0) / 2.0;
    let (dr, dc) = (
        angle.sin() * separation / 2.0,
        angle.cos() * separation / 2.0,
    );
    let pos = (center + dr, center + dc);
    let neg = (center - dr, center - dc);
    let noise = Normal::new(0.0, 12.0 + 3.0 * k).expect("valid sigma");

    let blob = |r: f64, c: f64, at: (f64, f64)| {
        let d2 = (r - at.0).powi(2) + (c - at.1).powi(2);
        (-d2 / (2.0 * width * width)).exp()
    };
    let raster = Raster::from_fn(size, size, |r, c| {
        let (r, c) = (r as f64, c as f64);
        amplitude * (blob(r, c, pos) - blob(r, c, neg)) + noise.sample(rng)
    })
    .expect("finite synthetic values");
    let radius = 0.48 * s;
    let bitmap = Bitmap::from_fn(size, size, |r, c| {
        (r as f64 - center).powi(2) + (c as f64 - center).powi(2) <= radius * radius
    })
    .expect("valid shape");
    (raster, bitmap)
}

/// Generates a labeled, preprocessed dataset. Identical specs give identical
/// output regardless of thread count.
pub fn synth_dataset(spec: &SynthSpec) -> Result<Vec<LabeledSample>> {
    synth_dataset_with(spec, Exec::default())
}

pub fn synth_dataset_with(spec: &SynthSpec, exec: Exec) -> Result<Vec<LabeledSample>> {
    if spec.image_size == 0 {
        return Err(domain("synthetic image size must be positive"));
    }
    let classes: Vec<FlareClass> = spec
        .counts
        .iter()
        .flat_map(|(&c, &n)| std::iter::repeat_n(c, n))
        .collect();
    if classes.is_empty() {
        return Ok(Vec::new());
    }

    let mut meta_rng = rng_for(spec.seed, METADATA_STREAM);
    let n_regions = classes.len().div_ceil(SAMPLES_PER_REGION) as u64;
    let epoch = Utc.with_ymd_and_hms(2010, 5, 1, 0, 0, 0).unwrap();
    let span_hours = 8 * 365 * 24;
    let region_start: Vec<DateTime<Utc>> = (0..n_regions)
        .map(|_| epoch + Duration::hours(meta_rng.gen_range(0..span_hours)))
        .collect();
    let meta: Vec<(u64, DateTime<Utc>)> = classes
        .iter()
        .map(|_| {
            let region = meta_rng.gen_range(0..n_regions);
            let t = region_start[region as usize] + Duration::hours(meta_rng.gen_range(0..72));
            (region + 1, t)
        })
        .collect();

    exec.map_range(classes.len(), |i| {
        let mut rng = rng_for(spec.seed, i as u64);
        let (raw, bitmap) = synth_raw(classes[i], spec.image_size, &mut rng);
        let image = preprocess_to(&raw, &bitmap, spec.image_size)?;
        let (region, t) = meta[i];
        LabeledSample::new(i as u64, region, t, classes[i], spec.threshold, image)
    })
    .into_iter()
    .collect()
}
