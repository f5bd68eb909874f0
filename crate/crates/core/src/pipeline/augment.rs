//! Augmentations for flare (FL) training samples. All operate on scaled
//! [0, 255] images.

use rand::Rng;

use crate::error::{domain, Result};
use crate::ordinal::BinaryLabel;

use super::preprocess::{gauss_span_to_scaled, NOISE_FLOOR_GAUSS, SCALED_MAX};
use super::raster::Raster;
use super::sample::{rng_for, LabeledSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AugmentKind {
    VerticalFlip,
    HorizontalFlip,
    /// Uniform noise of up to +/-25 G (in scaled units), then clamped.
    Noise {
        seed: u64,
    },
    /// 3x3 Gaussian, sigma = 1, edge replicate.
    Blur,
    /// Magnetic polarity inversion, `v -> 255 - v` in scaled units.
    Polarity,
}

impl AugmentKind {
    /// The five variants used when balancing, with the noise stream keyed on
    /// `(seed, sample_id)`.
    pub fn standard_set(seed: u64, sample_id: u64) -> [AugmentKind; 5] {
        [
            AugmentKind::VerticalFlip,
            AugmentKind::HorizontalFlip,
            AugmentKind::Noise {
                seed: noise_seed(seed, sample_id),
            },
            AugmentKind::Blur,
            AugmentKind::Polarity,
        ]
    }
}

fn noise_seed(seed: u64, sample_id: u64) -> u64 {
    use rand::RngCore;
    rng_for(seed, sample_id).next_u64()
}

pub fn augment(s: &LabeledSample, kind: AugmentKind) -> Result<LabeledSample> {
    if s.label() != BinaryLabel::FL {
        return Err(domain(format!(
            "augmentation applies to FL samples only; sample {} is NF",
            s.sample_id()
        )));
    }
    s.with_image(augment_image(s.image(), kind))
}

pub fn augment_image(img: &Raster, kind: AugmentKind) -> Raster {
    match kind {
        AugmentKind::VerticalFlip => flip_vertical(img),
        AugmentKind::HorizontalFlip => flip_horizontal(img),
        AugmentKind::Noise { seed } => add_noise(img, seed),
        AugmentKind::Blur => gaussian_blur_3x3(img),
        AugmentKind::Polarity => img.map(|v| SCALED_MAX - v),
    }
}

/// Mirrors rows top to bottom.
pub fn flip_vertical(img: &Raster) -> Raster {
    let h = img.height();
    Raster::from_fn(img.width(), h, |r, c| img.get(h - 1 - r, c)).expect("same shape")
}

/// Mirrors columns left to right.
pub fn flip_horizontal(img: &Raster) -> Raster {
    let w = img.width();
    Raster::from_fn(w, img.height(), |r, c| img.get(r, w - 1 - c)).expect("same shape")
}

fn add_noise(img: &Raster, seed: u64) -> Raster {
    let amp = gauss_span_to_scaled(NOISE_FLOOR_GAUSS);
    let mut rng = rng_for(seed, 0);
    let values = img
        .values()
        .iter()
        .map(|&v| (v + rng.gen_range(-amp..=amp)).clamp(0.0, SCALED_MAX))
        .collect();
    img.with_values(values)
}

/// Normalized 3x3 Gaussian weights for sigma = 1.
pub fn gaussian_kernel_3x3() -> [[f64; 3]; 3] {
    let g = |d: i32| (-(d * d) as f64 / 2.0).exp();
    let mut k = [[0.0; 3]; 3];
    let mut total = 0.0;
    for (i, row) in k.iter_mut().enumerate() {
        for (j, w) in row.iter_mut().enumerate() {
            *w = g(i as i32 - 1) * g(j as i32 - 1);
            total += *w;
        }
    }
    for w in k.iter_mut().flatten() {
        *w /= total;
    }
    k
}

pub fn gaussian_blur_3x3(img: &Raster) -> Raster {
    let k = gaussian_kernel_3x3();
    let (w, h) = (img.width() as isize, img.height() as isize);
    let at = |r: isize, c: isize| img.get(r.clamp(0, h - 1) as usize, c.clamp(0, w - 1) as usize);
    Raster::from_fn(img.width(), img.height(), |r, c| {
        let mut acc = 0.0;
        for (i, row) in k.iter().enumerate() {
            for (j, &kw) in row.iter().enumerate() {
                acc += kw * at(r as isize + i as isize - 1, c as isize + j as isize - 1);
            }
        }
        acc.clamp(0.0, SCALED_MAX)
    })
    .expect("same shape")
}
