use chrono::{DateTime, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Result};
use crate::ordinal::{binarize, BinaryLabel, FlareClass, ThresholdSpec};

use super::preprocess::{PROCESSED_SIZE, SCALED_MAX};
use super::raster::Raster;

/// A preprocessed image with its flare labels and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    sample_id: u64,
    region_id: u64,
    timestamp: DateTime<Utc>,
    subclass: FlareClass,
    label: BinaryLabel,
    image: Raster,
}

impl LabeledSample {
    /// Validates that the image is square with values in [0, 255], and
    /// derives the binary label from `subclass` under `threshold`.
    pub fn new(
        sample_id: u64,
        region_id: u64,
        timestamp: DateTime<Utc>,
        subclass: FlareClass,
        threshold: ThresholdSpec,
        image: Raster,
    ) -> Result<Self> {
        check_image(&image)?;
        Ok(LabeledSample {
            sample_id,
            region_id,
            timestamp,
            subclass,
            label: binarize(subclass, threshold),
            image,
        })
    }

    pub fn sample_id(&self) -> u64 {
        self.sample_id
    }

    pub fn region_id(&self) -> u64 {
        self.region_id
    }

    pub fn timestamp(&self) -> DateTime<Utc> {
        self.timestamp
    }

    pub fn subclass(&self) -> FlareClass {
        self.subclass
    }

    pub fn label(&self) -> BinaryLabel {
        self.label
    }

    pub fn image(&self) -> &Raster {
        &self.image
    }

    /// True when the image has the full 512x512 model input size.
    pub fn is_full_resolution(&self) -> bool {
        self.image.width() == PROCESSED_SIZE && self.image.height() == PROCESSED_SIZE
    }

    /// Same metadata, new image.
    pub fn with_image(&self, image: Raster) -> Result<Self> {
        check_image(&image)?;
        Ok(LabeledSample {
            image,
            ..self.clone()
        })
    }

    pub(crate) fn with_id(mut self, sample_id: u64) -> Self {
        self.sample_id = sample_id;
        self
    }

    /// Re-derives the label under another threshold.
    pub fn relabel(&self, threshold: ThresholdSpec) -> Self {
        LabeledSample {
            label: binarize(self.subclass, threshold),
            ..self.clone()
        }
    }
}

fn check_image(image: &Raster) -> Result<()> {
    if image.width() != image.height() {
        return Err(domain(format!(
            "sample image must be square, got {}x{}",
            image.width(),
            image.height()
        )));
    }
    if let Some(v) = image
        .values()
        .iter()
        .find(|v| !(0.0..=SCALED_MAX).contains(*v))
    {
        return Err(domain(format!("sample pixel {v} outside [0, 255]")));
    }
    Ok(())
}

/// Independent random stream for `(seed, stream)`; used so per-sample
/// randomness never depends on processing order.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
