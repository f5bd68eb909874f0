//! Confusion matrices and forecast skill scores (TSS, HSS, CSS). FL is the
//! positive class.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign};

use crate::error::{domain, shape, Error, Result};
use crate::ordinal::BinaryLabel;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub const fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        ConfusionMatrix { tp, fp, tn, fn_ }
    }

    /// Number of actual positives.
    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    /// Number of actual negatives.
    pub fn negatives(&self) -> u64 {
        self.tn + self.fp
    }

    pub fn total(&self) -> u64 {
        self.positives() + self.negatives()
    }

    pub fn record(&mut self, actual: BinaryLabel, predicted: BinaryLabel) {
        match (actual, predicted) {
            (BinaryLabel::FL, BinaryLabel::FL) => self.tp += 1,
            (BinaryLabel::NF, BinaryLabel::FL) => self.fp += 1,
            (BinaryLabel::NF, BinaryLabel::NF) => self.tn += 1,
            (BinaryLabel::FL, BinaryLabel::NF) => self.fn_ += 1,
        }
    }

    pub fn scale(&self, k: u64) -> Self {
        ConfusionMatrix::new(self.tp * k, self.fp * k, self.tn * k, self.fn_ * k)
    }

    pub fn scores(&self) -> Result<SkillScores> {
        SkillScores::from_confusion(self)
    }
}

impl Add for ConfusionMatrix {
    type Output = ConfusionMatrix;

    fn add(self, o: Self) -> Self {
        ConfusionMatrix::new(
            self.tp + o.tp,
            self.fp + o.fp,
            self.tn + o.tn,
            self.fn_ + o.fn_,
        )
    }
}

impl AddAssign for ConfusionMatrix {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl std::iter::Sum for ConfusionMatrix {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(ConfusionMatrix::default(), Add::add)
    }
}

/// Tallies predictions with the rule `score >= cutoff` means FL.
pub fn confusion_from_predictions(
    targets: &[BinaryLabel],
    scores: &[f64],
    cutoff: f64,
) -> Result<ConfusionMatrix> {
    if targets.len() != scores.len() {
        return Err(shape(format!(
            "{} targets but {} scores",
            targets.len(),
            scores.len()
        )));
    }
    if targets.is_empty() {
        return Err(domain("no predictions to tally"));
    }
    if !(cutoff > 0.0 && cutoff < 1.0) {
        return Err(domain(format!("cutoff must lie in (0, 1), got {cutoff}")));
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &s) in targets.iter().zip(scores) {
        let predicted = if s >= cutoff {
            BinaryLabel::FL
        } else {
            BinaryLabel::NF
        };
        cm.record(t, predicted);
    }
    Ok(cm)
}

/// True skill statistic: recall minus false-alarm rate.
pub fn tss(cm: &ConfusionMatrix) -> Result<f64> {
    let (p, n) = (cm.positives(), cm.negatives());
    if p == 0 || n == 0 {
        return Err(Error::UndefinedScore(format!(
            "TSS needs both classes present (P = {p}, N = {n})"
        )));
    }
    Ok(cm.tp as f64 / p as f64 - cm.fp as f64 / n as f64)
}

/// Heidke skill score. Numerator and denominator are formed exactly in 128-bit
/// integers; the only rounding is the final division.
pub fn hss(cm: &ConfusionMatrix) -> Result<f64> {
    let (tp, fp, tn, fn_) = (
        i128::from(cm.tp),
        i128::from(cm.fp),
        i128::from(cm.tn),
        i128::from(cm.fn_),
    );
    let p = tp + fn_;
    let n = tn + fp;
    let numerator = 2 * (tp * tn - fn_ * fp);
    let denominator = p * (fn_ + tn) + (tp + fp) * n;
    if denominator == 0 {
        return Err(Error::UndefinedScore("HSS denominator is zero".to_string()));
    }
    Ok(numerator as f64 / denominator as f64)
}

/// Composite skill score: geometric mean of TSS and HSS, zero if either is
/// negative.
pub fn css(cm: &ConfusionMatrix) -> Result<f64> {
    Ok(composite(tss(cm)?, hss(cm)?))
}

fn composite(tss: f64, hss: f64) -> f64 {
    if tss < 0.0 || hss < 0.0 {
        0.0
    } else {
        (tss * hss).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkillScores {
    pub tss: f64,
    pub hss: f64,
    pub css: f64,
}

impl SkillScores {
    pub fn from_confusion(cm: &ConfusionMatrix) -> Result<Self> {
        let tss = tss(cm)?;
        let hss = hss(cm)?;
        Ok(SkillScores {
            tss,
            hss,
            css: composite(tss, hss),
        })
    }

    /// Model-selection order: higher CSS first, then TSS, then HSS. `Less`
    /// means `self` ranks ahead of `other`.
    pub fn selection_cmp(&self, other: &Self) -> Ordering {
        other
            .css
            .total_cmp(&self.css)
            .then(other.tss.total_cmp(&self.tss))
            .then(other.hss.total_cmp(&self.hss))
    }
}

/// Confusion counts plus scores, rendered as `key=value` lines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub confusion: ConfusionMatrix,
    pub scores: SkillScores,
}

impl MetricsReport {
    pub fn new(confusion: ConfusionMatrix) -> Result<Self> {
        Ok(MetricsReport {
            confusion,
            scores: confusion.scores()?,
        })
    }

    pub const KEYS: [&'static str; 7] = ["tp", "fp", "tn", "fn", "tss", "hss", "css"];

    /// Parses the output of `Display`. Scores are read back at the printed
    /// four-decimal precision.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = std::collections::HashMap::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {line:?}")))?;
            values.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| {
            values
                .get(k)
                .ok_or_else(|| Error::Parse(format!("missing key {k}")))
        };
        let count = |k: &str| -> Result<u64> {
            get(k)?
                .parse()
                .map_err(|e| Error::Parse(format!("{k}: {e}")))
        };
        let score = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|e| Error::Parse(format!("{k}: {e}")))
        };
        Ok(MetricsReport {
            confusion: ConfusionMatrix::new(count("tp")?, count("fp")?, count("tn")?, count("fn")?),
            scores: SkillScores {
                tss: score("tss")?,
                hss: score("hss")?,
                css: score("css")?,
            },
        })
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cm = &self.confusion;
        writeln!(f, "tp={}", cm.tp)?;
        writeln!(f, "fp={}", cm.fp)?;
        writeln!(f, "tn={}", cm.tn)?;
        writeln!(f, "fn={}", cm.fn_)?;
        writeln!(f, "tss={:.4}", self.scores.tss)?;
        writeln!(f, "hss={:.4}", self.scores.hss)?;
        writeln!(f, "css={:.4}", self.scores.css)
    }
}
