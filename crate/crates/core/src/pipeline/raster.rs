//! Raster and bitmap grids and their ASCII file format.
//!
//! ```text
//! P_RASTER v1 <width> <height>
//! <row 0 values, space separated>
//! ...
//! ```
//!
//! Bitmaps use the header `P_BITMAP v1` and 0/1 values. Reals are written in
//! shortest round-trip form, so a write/read cycle is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{domain, shape, Error, Result};

const RASTER_MAGIC: &str = "P_RASTER";
const BITMAP_MAGIC: &str = "P_BITMAP";
const FORMAT_VERSION: &str = "v1";

/// Row-major grid of magnetic field values in gauss (or scaled units once
/// preprocessed).
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(domain(format!(
                "raster must be at least 1x1, got {width}x{height}"
            )));
        }
        if values.len() != width * height {
            return Err(shape(format!(
                "{width}x{height} raster needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(domain(format!("raster value {i} is not finite")));
        }
        Ok(Raster {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                values.push(f(row, col));
            }
        }
        Self::new(width, height, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.width..(row + 1) * self.width]
    }

    /// Applies `f` to every value. The result must stay finite.
    pub(crate) fn map(&self, f: impl Fn(f64) -> f64) -> Raster {
        Raster {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> Raster {
        debug_assert_eq!(values.len(), self.values.len());
        Raster {
            width: self.width,
            height: self.height,
            values,
        }
    }

    /// Total unsigned flux, sum of |v|.
    pub fn unsigned_flux(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn crop(&self, row: usize, col: usize, height: usize, width: usize) -> Result<Raster> {
        if row + height > self.height || col + width > self.width {
            return Err(shape(format!(
                "crop {height}x{width} at ({row}, {col}) exceeds {}x{} raster",
                self.height, self.width
            )));
        }
        Raster::from_fn(width, height, |r, c| self.get(row + r, col + c))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{RASTER_MAGIC} {FORMAT_VERSION} {} {}\n",
            self.width, self.height
        );
        for row in 0..self.height {
            let line: Vec<String> = self.row(row).iter().map(|v| format!("{v}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (width, height, body) = parse_header(text, RASTER_MAGIC)?;
        let values = body
            .split_ascii_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("raster value {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Raster::new(width, height, values)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Region-of-interest mask with the same shape as its raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmap {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl Bitmap {
    pub fn new(width: usize, height: usize, mask: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(domain(format!(
                "bitmap must be at least 1x1, got {width}x{height}"
            )));
        }
        if mask.len() != width * height {
            return Err(shape(format!(
                "{width}x{height} bitmap needs {} entries, got {}",
                width * height,
                mask.len()
            )));
        }
        Ok(Bitmap {
            width,
            height,
            mask,
        })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        let mut mask = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                mask.push(f(row, col));
            }
        }
        Self::new(width, height, mask)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn count_set(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{BITMAP_MAGIC} {FORMAT_VERSION} {} {}\n",
            self.width, self.height
        );
        for row in self.mask.chunks(self.width) {
            for (i, &m) in row.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{}", u8::from(m));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (width, height, body) = parse_header(text, BITMAP_MAGIC)?;
        let mask = body
            .split_ascii_whitespace()
            .map(|t| match t {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::Parse(format!(
                    "bitmap entry must be 0 or 1, got {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Bitmap::new(width, height, mask)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

fn parse_header<'a>(text: &'a str, magic: &str) -> Result<(usize, usize, &'a str)> {
    let (header, body) = text.split_once('\n').unwrap_or((text, ""));
    let fields: Vec<&str> = header.split_ascii_whitespace().collect();
    match fields.as_slice() {
        [m, v, w, h] if *m == magic && *v == FORMAT_VERSION => {
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| Error::Parse(format!("bad dimension {s:?}: {e}")))
            };
            Ok((parse(w)?, parse(h)?, body))
        }
        _ => Err(Error::Parse(format!(
            "expected header \"{magic} {FORMAT_VERSION} <width> <height>\", got {header:?}"
        ))),
    }
}
