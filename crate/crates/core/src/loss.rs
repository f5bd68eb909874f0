//! Binary cross-entropy and its ordinal proximity-penalized variant (BCE-PP).
//!
//! Everything is computed in logit space. The per-sample BCE term is
//!
//! ```text
//! bce(z, y) = max(z, 0) - z*y + ln(1 + exp(-|z|))
//! ```
//!
//! which equals `-[y ln p + (1-y) ln(1-p)]` with `p = sigmoid(z)` but never
//! evaluates `ln(0)`. BCE-PP scales each term by `alpha * log10(beta_c)` where
//! `beta_c` is the proximity weight of the sample's subclass, before the
//! reduction.

use crate::error::{domain, shape, Result};
use crate::ordinal::{binarize, BinaryLabel, FlareClass, OrdinalWeights, ThresholdSpec};
use crate::par::Exec;

/// Recommended range for the scaling factor. Values outside it are accepted.
pub const RECOMMENDED_ALPHA: (f64, f64) = (0.25, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    #[default]
    Mean,
    Sum,
    None,
}

/// Result of a loss evaluation: a scalar for `Mean`/`Sum`, per-sample terms for
/// `None`.
#[derive(Debug, Clone, PartialEq)]
pub enum LossValue {
    Scalar(f64),
    PerSample(Vec<f64>),
}

impl LossValue {
    /// The scalar value; panics on a per-sample result.
    pub fn scalar(&self) -> f64 {
        match self {
            LossValue::Scalar(v) => *v,
            LossValue::PerSample(_) => panic!("per-sample loss has no scalar value"),
        }
    }

    pub fn per_sample(&self) -> &[f64] {
        match self {
            LossValue::PerSample(v) => v,
            LossValue::Scalar(_) => panic!("reduced loss has no per-sample values"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossConfig {
    pub alpha: f64,
    pub weights: OrdinalWeights,
    pub reduction: Reduction,
}

impl LossConfig {
    pub fn new(alpha: f64, weights: OrdinalWeights, reduction: Reduction) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(domain(format!(
                "alpha must be a positive finite number, got {alpha}"
            )));
        }
        if !alpha_in_recommended_range(alpha) {
            log::warn!(
                "alpha = {alpha} is outside the recommended range [{}, {}]",
                RECOMMENDED_ALPHA.0,
                RECOMMENDED_ALPHA.1
            );
        }
        Ok(LossConfig {
            alpha,
            weights,
            reduction,
        })
    }

    /// Per-sample multiplier `alpha * log10(beta_c)`.
    pub fn multiplier(&self, class: FlareClass) -> f64 {
        self.alpha * self.weights.log_beta_f64(class)
    }
}

pub fn alpha_in_recommended_range(alpha: f64) -> bool {
    (RECOMMENDED_ALPHA.0..=RECOMMENDED_ALPHA.1).contains(&alpha)
}

/// A validated batch of (logit, target, subclass) triples.
#[derive(Debug, Clone, PartialEq)]
pub struct LossBatch {
    logits: Vec<f64>,
    targets: Vec<BinaryLabel>,
    subclasses: Vec<FlareClass>,
}

impl LossBatch {
    pub fn new(
        logits: Vec<f64>,
        targets: Vec<BinaryLabel>,
        subclasses: Vec<FlareClass>,
        threshold: ThresholdSpec,
    ) -> Result<Self> {
        if logits.is_empty() {
            return Err(domain("loss batch must contain at least one sample"));
        }
        if logits.len() != targets.len() || logits.len() != subclasses.len() {
            return Err(shape(format!(
                "batch lengths differ: {} logits, {} targets, {} subclasses",
                logits.len(),
                targets.len(),
                subclasses.len()
            )));
        }
        if let Some(i) = logits.iter().position(|z| !z.is_finite()) {
            return Err(domain(format!("logit {i} is not finite")));
        }
        for (i, (&t, &c)) in targets.iter().zip(&subclasses).enumerate() {
            if binarize(c, threshold) != t {
                return Err(domain(format!(
                    "sample {i}: target {t} inconsistent with subclass {c} under {threshold}"
                )));
            }
        }
        Ok(LossBatch {
            logits,
            targets,
            subclasses,
        })
    }

    /// Builds a batch deriving each target from its subclass.
    pub fn from_subclasses(
        logits: Vec<f64>,
        subclasses: Vec<FlareClass>,
        threshold: ThresholdSpec,
    ) -> Result<Self> {
        let targets = subclasses.iter().map(|&c| binarize(c, threshold)).collect();
        Self::new(logits, targets, subclasses, threshold)
    }

    pub fn len(&self) -> usize {
        self.logits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logits.is_empty()
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn targets(&self) -> &[BinaryLabel] {
        &self.targets
    }

    pub fn subclasses(&self) -> &[FlareClass] {
        &self.subclasses
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Per-sample BCE from a logit.
pub fn bce_term(logit: f64, target: BinaryLabel) -> f64 {
    match target {
        BinaryLabel::FL => softplus(-logit),
        BinaryLabel::NF => softplus(logit),
    }
}

/// Per-sample BCE from a probability in the open interval (0, 1).
pub fn bce_term_from_prob(p: f64, target: BinaryLabel) -> f64 {
    match target {
        BinaryLabel::FL => -p.ln(),
        BinaryLabel::NF => -(-p).ln_1p(),
    }
}

fn reduce(terms: Vec<f64>, reduction: Reduction) -> LossValue {
    match reduction {
        Reduction::None => LossValue::PerSample(terms),
        Reduction::Sum => LossValue::Scalar(terms.iter().sum()),
        Reduction::Mean => LossValue::Scalar(terms.iter().sum::<f64>() / terms.len() as f64),
    }
}

pub fn bce(batch: &LossBatch, reduction: Reduction) -> LossValue {
    bce_with(batch, reduction, Exec::default())
}

pub fn bce_with(batch: &LossBatch, reduction: Reduction, exec: Exec) -> LossValue {
    let terms = exec.map_zip(&batch.logits, &batch.targets, |&z, &y| bce_term(z, y));
    reduce(terms, reduction)
}

/// BCE-PP with the reduction stored in `cfg`.
pub fn bce_pp(batch: &LossBatch, cfg: &LossConfig) -> LossValue {
    bce_pp_with(batch, cfg, Exec::default())
}

pub fn bce_pp_with(batch: &LossBatch, cfg: &LossConfig, exec: Exec) -> LossValue {
    let terms = exec.map_range(batch.len(), |i| {
        cfg.multiplier(batch.subclasses[i]) * bce_term(batch.logits[i], batch.targets[i])
    });
    reduce(terms, cfg.reduction)
}

fn grad_scale(reduction: Reduction, n: usize) -> f64 {
    match reduction {
        Reduction::Mean => 1.0 / n as f64,
        Reduction::Sum | Reduction::None => 1.0,
    }
}

/// `dL/dz_i = (p_i - y_i)`, divided by N under mean reduction. Under `None`
/// each entry is the derivative of the sample's own term.
pub fn bce_grad(batch: &LossBatch, reduction: Reduction) -> Vec<f64> {
    let scale = grad_scale(reduction, batch.len());
    batch
        .logits
        .iter()
        .zip(&batch.targets)
        .map(|(&z, &y)| scale * (sigmoid(z) - y.target()))
        .collect()
}

pub fn bce_pp_grad(batch: &LossBatch, cfg: &LossConfig) -> Vec<f64> {
    let scale = grad_scale(cfg.reduction, batch.len());
    batch
        .logits
        .iter()
        .zip(&batch.targets)
        .zip(&batch.subclasses)
        .map(|((&z, &y), &c)| scale * cfg.multiplier(c) * (sigmoid(z) - y.target()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub p: f64,
    pub loss_bce: f64,
    pub loss_bce_pp: f64,
}

/// Loss as a function of predicted probability for one subclass and target.
pub fn loss_curve(
    subclass: FlareClass,
    target: BinaryLabel,
    cfg: &LossConfig,
    grid: &[f64],
) -> Result<Vec<CurvePoint>> {
    let mult = cfg.multiplier(subclass);
    grid.iter()
        .map(|&p| {
            if !(p > 0.0 && p < 1.0) {
                return Err(domain(format!("curve grid point {p} is outside (0, 1)")));
            }
            let loss_bce = bce_term_from_prob(p, target);
            Ok(CurvePoint {
                p,
                loss_bce,
                loss_bce_pp: mult * loss_bce,
            })
        })
        .collect()
}

/// `n` evenly spaced interior points `i / (n + 1)`, `i = 1..=n`.
pub fn open_unit_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

/// Formats a value with nine significant digits.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    if (-4..9).contains(&magnitude) {
        let decimals = (8 - magnitude).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.8e}")
    }
}

/// CSV rendering of a curve: header `p,loss_bce,loss_bce_pp`.
pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("p,loss_bce,loss_bce_pp\n");
    for pt in points {
        out.push_str(&format!(
            "{},{},{}\n",
            format_sig9(pt.p),
            format_sig9(pt.loss_bce),
            format_sig9(pt.loss_bce_pp)
        ));
    }
    out
}
