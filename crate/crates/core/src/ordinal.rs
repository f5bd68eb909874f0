//! Flare class taxonomy, binary thresholding and ordinal proximity weights.

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};

/// NOAA flare class, ordered by peak soft X-ray flux. `FQ` (flare-quiet) sits
/// below the A-class floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FlareClass {
    FQ,
    A,
    B,
    C,
    M,
    X,
}

impl FlareClass {
    pub const ALL: [FlareClass; 6] = [
        FlareClass::FQ,
        FlareClass::A,
        FlareClass::B,
        FlareClass::C,
        FlareClass::M,
        FlareClass::X,
    ];

    pub const fn ordinal_index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<FlareClass> {
        Self::ALL.get(index).copied()
    }

    pub const fn token(self) -> &'static str {
        match self {
            FlareClass::FQ => "FQ",
            FlareClass::A => "A",
            FlareClass::B => "B",
            FlareClass::C => "C",
            FlareClass::M => "M",
            FlareClass::X => "X",
        }
    }

    /// Open lower flux bound of the class in W/m^2; `None` for FQ.
    pub const fn lower_flux_bound(self) -> Option<f64> {
        match self {
            FlareClass::FQ => None,
            FlareClass::A => Some(1e-8),
            FlareClass::B => Some(1e-7),
            FlareClass::C => Some(1e-6),
            FlareClass::M => Some(1e-5),
            FlareClass::X => Some(1e-4),
        }
    }
}

impl fmt::Display for FlareClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for FlareClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FlareClass::ALL
            .into_iter()
            .find(|c| c.token() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown flare class token {s:?}")))
    }
}

/// Peak X-ray flux in W/m^2. Zero means no detectable emission.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PeakFlux(f64);

impl PeakFlux {
    pub fn new(flux: f64) -> Result<Self> {
        if flux.is_nan() || flux < 0.0 {
            return Err(domain(format!("peak flux must be >= 0, got {flux}")));
        }
        Ok(PeakFlux(flux))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Maps a peak flux onto its class. Bounds are strict, so a flux exactly on a
/// decade boundary belongs to the lower class.
pub fn class_from_flux(flux: PeakFlux) -> FlareClass {
    FlareClass::ALL
        .into_iter()
        .rev()
        .find(|c| c.lower_flux_bound().is_some_and(|lo| flux.0 > lo))
        .unwrap_or(FlareClass::FQ)
}

/// Convenience wrapper that validates a raw flux first.
pub fn class_from_raw_flux(flux: f64) -> Result<FlareClass> {
    PeakFlux::new(flux).map(class_from_flux)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinaryLabel {
    /// No strong flare (target 0).
    NF,
    /// Flare at or above the threshold (target 1).
    FL,
}

impl BinaryLabel {
    pub fn target(self) -> f64 {
        match self {
            BinaryLabel::NF => 0.0,
            BinaryLabel::FL => 1.0,
        }
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(BinaryLabel::NF),
            1 => Ok(BinaryLabel::FL),
            _ => Err(Error::Parse(format!(
                "binary label must be 0 or 1, got {v}"
            ))),
        }
    }
}

impl fmt::Display for BinaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinaryLabel::NF => "NF",
            BinaryLabel::FL => "FL",
        })
    }
}

impl FromStr for BinaryLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "NF" | "0" => Ok(BinaryLabel::NF),
            "FL" | "1" => Ok(BinaryLabel::FL),
            other => Err(Error::Parse(format!("unknown binary label {other:?}"))),
        }
    }
}

/// Binary split point: classes at or above `min_positive_class` are FL.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ThresholdSpec {
    min_positive_class: FlareClass,
}

impl ThresholdSpec {
    pub fn new(min_positive_class: FlareClass) -> Result<Self> {
        if min_positive_class == FlareClass::FQ {
            return Err(domain("threshold >=FQ leaves the NF side empty"));
        }
        Ok(ThresholdSpec { min_positive_class })
    }

    pub fn min_positive_class(self) -> FlareClass {
        self.min_positive_class
    }
}

impl Default for ThresholdSpec {
    fn default() -> Self {
        ThresholdSpec {
            min_positive_class: FlareClass::M,
        }
    }
}

impl fmt::Display for ThresholdSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, ">={}", self.min_positive_class)
    }
}

impl FromStr for ThresholdSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let token = s
            .trim()
            .strip_prefix(">=")
            .ok_or_else(|| Error::Parse(format!("threshold must look like \">=M\", got {s:?}")))?;
        ThresholdSpec::new(token.parse()?)
    }
}

pub fn binarize(class: FlareClass, threshold: ThresholdSpec) -> BinaryLabel {
    if class >= threshold.min_positive_class {
        BinaryLabel::FL
    } else {
        BinaryLabel::NF
    }
}

/// Per-class proximity weights. Stored as integer decimal exponents so that
/// `log10(beta)` is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OrdinalWeights {
    log_beta: [u32; 6],
}

impl OrdinalWeights {
    pub fn log_beta(&self, class: FlareClass) -> u32 {
        self.log_beta[class.ordinal_index()]
    }

    /// `log10(beta)` as a float multiplier for the loss.
    pub fn log_beta_f64(&self, class: FlareClass) -> f64 {
        f64::from(self.log_beta(class))
    }

    pub fn beta(&self, class: FlareClass) -> f64 {
        // Small integer powers of ten are exactly representable.
        10f64.powi(self.log_beta(class) as i32)
    }

    pub fn log_beta_table(&self) -> [u32; 6] {
        self.log_beta
    }
}

/// Distance-to-split weighting: the class on either side of the split has
/// distance 0, growing by one per ordinal step away; `log_beta = max_d + 1 - d`.
/// For `>=M` this is the table FQ:1, A:2, B:3, C:4, M:4, X:3. Thresholds other
/// than `>=M` extrapolate the same rule.
pub fn proximity_weights(threshold: ThresholdSpec) -> OrdinalWeights {
    let boundary = threshold.min_positive_class.ordinal_index();
    let distance = |idx: usize| -> u32 {
        if idx >= boundary {
            (idx - boundary) as u32
        } else {
            (boundary - 1 - idx) as u32
        }
    };
    let w_max = (0..6).map(distance).max().unwrap_or(0) + 1;
    let mut log_beta = [0u32; 6];
    for (idx, slot) in log_beta.iter_mut().enumerate() {
        *slot = w_max - distance(idx);
    }
    OrdinalWeights { log_beta }
}
