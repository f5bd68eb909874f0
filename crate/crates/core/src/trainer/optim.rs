//! SGD with L2 weight decay and a reduce-on-plateau learning-rate schedule.

use crate::error::{domain, shape, Result};

/// One SGD update, `p <- p - lr * (g + weight_decay * p)`.
pub fn sgd_step(params: &mut [f64], grads: &[f64], lr: f64, weight_decay: f64) -> Result<()> {
    if params.len() != grads.len() {
        return Err(shape(format!(
            "{} parameters but {} gradients",
            params.len(),
            grads.len()
        )));
    }
    if !(lr.is_finite() && lr >= 0.0) {
        return Err(domain(format!(
            "learning rate must be finite and >= 0, got {lr}"
        )));
    }
    if !(weight_decay.is_finite() && weight_decay >= 0.0) {
        return Err(domain(format!(
            "weight decay must be finite and >= 0, got {weight_decay}"
        )));
    }
    for (p, g) in params.iter_mut().zip(grads) {
        *p -= lr * (g + weight_decay * *p);
    }
    Ok(())
}

pub const PLATEAU_FACTOR: f64 = 0.9;
pub const PLATEAU_PATIENCE: usize = 2;

/// Reduce-on-plateau schedule. After `patience` consecutive epochs without a
/// strict improvement in validation loss the learning rate is multiplied by
/// `factor` and the counter resets.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerState {
    initial_lr: f64,
    current_lr: f64,
    best_val_loss: f64,
    epochs_since_improvement: usize,
    reductions: u32,
    factor: f64,
    patience: usize,
}

impl SchedulerState {
    pub fn new(initial_lr: f64) -> Self {
        Self::with_params(initial_lr, PLATEAU_FACTOR, PLATEAU_PATIENCE)
    }

    pub fn with_params(initial_lr: f64, factor: f64, patience: usize) -> Self {
        SchedulerState {
            initial_lr,
            current_lr: initial_lr,
            best_val_loss: f64::INFINITY,
            epochs_since_improvement: 0,
            reductions: 0,
            factor,
            patience: patience.max(1),
        }
    }

    pub fn current_lr(&self) -> f64 {
        self.current_lr
    }

    pub fn best_val_loss(&self) -> f64 {
        self.best_val_loss
    }

    pub fn epochs_since_improvement(&self) -> usize {
        self.epochs_since_improvement
    }

    pub fn reductions(&self) -> u32 {
        self.reductions
    }

    pub fn step(&mut self, val_loss: f64) {
        if val_loss < self.best_val_loss {
            self.best_val_loss = val_loss;
            self.epochs_since_improvement = 0;
            return;
        }
        self.epochs_since_improvement += 1;
        if self.epochs_since_improvement >= self.patience {
            self.reductions += 1;
            self.current_lr = decayed_lr(self.initial_lr, self.factor, self.reductions);
            self.epochs_since_improvement = 0;
        }
    }
}

/// `initial * factor^k`, evaluated on the shortest decimal forms of both
/// inputs and rounded once, so 0.01 * 0.9^2 is exactly the double nearest
/// 0.0081. Falls back to `powi` if the decimal mantissa would overflow.
pub fn decayed_lr(initial: f64, factor: f64, k: u32) -> f64 {
    fn decimal(x: f64) -> Option<(u128, i32)> {
        let s = format!("{x:e}");
        let (mantissa, exp) = s.split_once('e')?;
        let exp: i32 = exp.parse().ok()?;
        let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        let digits: u128 = format!("{int}{frac}").parse().ok()?;
        Some((digits, exp - frac.len() as i32))
    }
    let exact = || -> Option<f64> {
        let (mi, ei) = decimal(initial)?;
        let (mf, ef) = decimal(factor)?;
        let m = mi.checked_mul(mf.checked_pow(k)?)?;
        let e = ei + ef * k as i32;
        format!("{m}e{e}").parse().ok()
    };
    if !(initial.is_finite() && factor.is_finite() && initial > 0.0 && factor > 0.0) {
        return initial * factor.powi(k as i32);
    }
    exact().unwrap_or_else(|| initial * factor.powi(k as i32))
}
