//! Magnetogram preprocessing: clip, noise floor, ROI mask, 512x512 fit, scale.

use crate::error::{domain, shape, Result};

use super::raster::{Bitmap, Raster};

/// Field strength saturation, gauss.
pub const CLIP_GAUSS: f64 = 256.0;
/// Values with |v| at or below this are treated as noise, gauss.
pub const NOISE_FLOOR_GAUSS: f64 = 25.0;
/// Side length of model input images.
pub const PROCESSED_SIZE: usize = 512;
/// Upper end of the scaled image range.
pub const SCALED_MAX: f64 = 255.0;

pub fn clip_flux(r: &Raster) -> Raster {
    r.map(|v| v.clamp(-CLIP_GAUSS, CLIP_GAUSS))
}

pub fn zero_noise(r: &Raster) -> Raster {
    r.map(|v| if v.abs() <= NOISE_FLOOR_GAUSS { 0.0 } else { v })
}

pub fn apply_bitmap(r: &Raster, b: &Bitmap) -> Result<Raster> {
    if r.width() != b.width() || r.height() != b.height() {
        return Err(shape(format!(
            "bitmap is {}x{} but raster is {}x{}",
            b.width(),
            b.height(),
            r.width(),
            r.height()
        )));
    }
    let values = r
        .values()
        .iter()
        .zip(b.mask())
        .map(|(&v, &m)| if m { v } else { 0.0 })
        .collect();
    Ok(r.with_values(values))
}

/// Summed-area table over |v|, with one row and column of zero padding.
#[derive(Debug, Clone)]
pub struct SummedAreaTable {
    width: usize,
    height: usize,
    sums: Vec<f64>,
}

impl SummedAreaTable {
    pub fn unsigned(r: &Raster) -> Self {
        let (w, h) = (r.width(), r.height());
        let stride = w + 1;
        let mut sums = vec![0.0; stride * (h + 1)];
        for row in 0..h {
            let mut running = 0.0;
            for col in 0..w {
                running += r.get(row, col).abs();
                sums[(row + 1) * stride + col + 1] = sums[row * stride + col + 1] + running;
            }
        }
        SummedAreaTable {
            width: w,
            height: h,
            sums,
        }
    }

    /// Sum over rows `[row, row + height)` and columns `[col, col + width)`.
    pub fn window_sum(&self, row: usize, col: usize, height: usize, width: usize) -> f64 {
        debug_assert!(row + height <= self.height && col + width <= self.width);
        let stride = self.width + 1;
        let at = |r: usize, c: usize| self.sums[r * stride + c];
        at(row + height, col + width) - at(row, col + width) - at(row + height, col) + at(row, col)
    }
}

/// Origin `(row, col)` of the `size`x`size` window with the largest total
/// unsigned flux. Ties go to the smallest row, then the smallest column.
pub fn max_flux_window(r: &Raster, size: usize) -> Result<(usize, usize)> {
    if size == 0 || size > r.width() || size > r.height() {
        return Err(domain(format!(
            "window {size} does not fit a {}x{} raster",
            r.width(),
            r.height()
        )));
    }
    let sat = SummedAreaTable::unsigned(r);
    let mut best = (0, 0);
    let mut best_sum = f64::NEG_INFINITY;
    for row in 0..=r.height() - size {
        for col in 0..=r.width() - size {
            let s = sat.window_sum(row, col, size, size);
            if s > best_sum {
                best_sum = s;
                best = (row, col);
            }
        }
    }
    Ok(best)
}

/// Zero-pads to at least `size` in each dimension, content anchored top-left.
pub fn pad_to(r: &Raster, size: usize) -> Raster {
    let w = r.width().max(size);
    let h = r.height().max(size);
    if w == r.width() && h == r.height() {
        return r.clone();
    }
    Raster::from_fn(w, h, |row, col| {
        if row < r.height() && col < r.width() {
            r.get(row, col)
        } else {
            0.0
        }
    })
    .expect("padding preserves finiteness")
}

/// Brings a raster to exactly `size`x`size`: small rasters are zero-padded
/// (top-left anchor), larger ones are cropped to the max-USFLUX window.
pub fn fit_window(r: &Raster, size: usize) -> Result<Raster> {
    if size == 0 {
        return Err(domain("window size must be positive"));
    }
    let padded = pad_to(r, size);
    if padded.width() == size && padded.height() == size {
        return Ok(padded);
    }
    let (row, col) = max_flux_window(&padded, size)?;
    padded.crop(row, col, size, size)
}

pub fn fit_512(r: &Raster) -> Result<Raster> {
    fit_window(r, PROCESSED_SIZE)
}

/// Affine map from [-256, 256] G onto [0, 255].
pub fn scale_0_255(r: &Raster) -> Result<Raster> {
    if let Some(v) = r.values().iter().find(|v| v.abs() > CLIP_GAUSS) {
        return Err(domain(format!(
            "value {v} outside [-256, 256]; clip before scaling"
        )));
    }
    Ok(r.map(gauss_to_scaled))
}

pub fn gauss_to_scaled(v: f64) -> f64 {
    (v + CLIP_GAUSS) * SCALED_MAX / (2.0 * CLIP_GAUSS)
}

/// Size of a gauss interval in scaled units.
pub fn gauss_span_to_scaled(g: f64) -> f64 {
    g * SCALED_MAX / (2.0 * CLIP_GAUSS)
}

/// Full chain: clip, zero noise, mask, fit to `size`, scale to [0, 255].
pub fn preprocess_to(r: &Raster, b: &Bitmap, size: usize) -> Result<Raster> {
    let masked = apply_bitmap(&zero_noise(&clip_flux(r)), b)?;
    scale_0_255(&fit_window(&masked, size)?)
}

/// [`preprocess_to`] at the 512x512 model input size.
pub fn preprocess(r: &Raster, b: &Bitmap) -> Result<Raster> {
    preprocess_to(r, b, PROCESSED_SIZE)
}
