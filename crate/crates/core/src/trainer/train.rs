use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use sha2::{Digest, Sha256};

use crate::error::{domain, Error, Result};
use crate::loss::{
    bce_grad, bce_pp_grad, bce_pp_with, bce_with, sigmoid, LossBatch, LossConfig, Reduction,
};
use crate::metrics::{confusion_from_predictions, ConfusionMatrix, SkillScores};
use crate::ordinal::{proximity_weights, BinaryLabel, FlareClass, ThresholdSpec};
use crate::par::Exec;
use crate::pipeline::{rng_for, LabeledSample};

use super::model::{FeatureSpec, Model, ModelSpec};
use super::optim::{sgd_step, SchedulerState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    Bce,
    BcePp,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Bce => "bce",
            LossKind::BcePp => "bce-pp",
        })
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bce" => Ok(LossKind::Bce),
            "bce-pp" | "bce_pp" => Ok(LossKind::BcePp),
            other => Err(Error::Parse(format!("unknown loss {other:?}"))),
        }
    }
}

pub const DEFAULT_EPOCHS: usize = 50;
pub const DEFAULT_CUTOFF: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub loss_kind: LossKind,
    pub initial_lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    /// Ignored for plain BCE.
    pub alpha: f64,
    pub epochs: usize,
    pub seed: u64,
    pub threshold: ThresholdSpec,
}

impl TrainConfig {
    /// Tuned defaults: BCE uses lr 0.01 / decay 0.01, BCE-PP uses
    /// lr 0.001 / decay 0.001 / alpha 0.75; both batch 64, 50 epochs.
    pub fn defaults(loss_kind: LossKind) -> Self {
        let (initial_lr, weight_decay) = match loss_kind {
            LossKind::Bce => (0.01, 0.01),
            LossKind::BcePp => (0.001, 0.001),
        };
        TrainConfig {
            loss_kind,
            initial_lr,
            weight_decay,
            batch_size: 64,
            alpha: 0.75,
            epochs: DEFAULT_EPOCHS,
            seed: 0,
            threshold: ThresholdSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.initial_lr.is_finite() && self.initial_lr >= 0.0) {
            return Err(domain(format!(
                "initial lr must be >= 0, got {}",
                self.initial_lr
            )));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(domain(format!(
                "weight decay must be >= 0, got {}",
                self.weight_decay
            )));
        }
        if self.batch_size == 0 {
            return Err(domain("batch size must be positive"));
        }
        if self.loss_kind == LossKind::BcePp && !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(domain(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn loss_config(&self, reduction: Reduction) -> Result<Option<LossConfig>> {
        match self.loss_kind {
            LossKind::Bce => Ok(None),
            LossKind::BcePp => {
                LossConfig::new(self.alpha, proximity_weights(self.threshold), reduction).map(Some)
            }
        }
    }

    /// Canonical `key=value` rendering, also the input of [`TrainConfig::hash`].
    pub fn canonical(&self) -> String {
        format!(
            "loss={}\nlr={:?}\nweight_decay={:?}\nbatch_size={}\nalpha={:?}\nepochs={}\nseed={}\nthreshold={}\n",
            self.loss_kind,
            self.initial_lr,
            self.weight_decay,
            self.batch_size,
            self.alpha,
            self.epochs,
            self.seed,
            self.threshold
        )
    }

    /// SHA-256 of the canonical rendering, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Feature vectors with labels, ready for training or evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<BinaryLabel>,
    pub subclasses: Vec<FlareClass>,
}

impl Split {
    pub fn from_samples(samples: &[LabeledSample], features: FeatureSpec, exec: Exec) -> Self {
        Split {
            features: exec.map(samples, |s| features.extract(s.image())),
            targets: samples.iter().map(|s| s.label()).collect(),
            subclasses: samples.iter().map(|s| s.subclass()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.features.first().map(Vec::len)
    }

    pub fn count(&self, label: BinaryLabel) -> usize {
        self.targets.iter().filter(|&&t| t == label).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_scores: SkillScores,
    /// Learning rate used during the epoch.
    pub lr: f64,
}

pub const EPOCH_LOG_HEADER: &str = "epoch,train_loss,val_loss,val_tss,val_hss,val_css,lr";

/// CSV rendering with full round-trip precision.
pub fn epoch_log_csv(history: &[EpochLog]) -> String {
    let mut out = format!("{EPOCH_LOG_HEADER}\n");
    for e in history {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            e.epoch,
            e.train_loss,
            e.val_loss,
            e.val_scores.tss,
            e.val_scores.hss,
            e.val_scores.css,
            e.lr
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Parameters after the final epoch.
    pub model: Model,
    pub history: Vec<EpochLog>,
    /// Epoch with the highest validation CSS (informational).
    pub best_css_epoch: usize,
}

const SHUFFLE_STREAM: u64 = 2;

/// Mean loss and per-sample logit gradients (mean reduction) for a subset.
fn loss_and_logit_grads(
    logits: Vec<f64>,
    split: &Split,
    idx: &[usize],
    cfg: &TrainConfig,
    loss_cfg: Option<&LossConfig>,
    exec: Exec,
) -> Result<(f64, Vec<f64>)> {
    if let Some(z) = logits.iter().find(|z| !z.is_finite()) {
        // epoch is filled in by the caller
        return Err(Error::Divergence {
            epoch: 0,
            detail: format!("non-finite logit {z}"),
        });
    }
    let batch = LossBatch::new(
        logits,
        idx.iter().map(|&i| split.targets[i]).collect(),
        idx.iter().map(|&i| split.subclasses[i]).collect(),
        cfg.threshold,
    )?;
    Ok(match loss_cfg {
        None => (
            bce_with(&batch, Reduction::Mean, exec).scalar(),
            bce_grad(&batch, Reduction::Mean),
        ),
        Some(lc) => (
            bce_pp_with(&batch, lc, exec).scalar(),
            bce_pp_grad(&batch, lc),
        ),
    })
}

/// Mean training-objective loss over a whole split.
pub fn split_loss(model: &Model, split: &Split, cfg: &TrainConfig, exec: Exec) -> Result<f64> {
    split_loss_inner(
        model,
        split,
        cfg,
        cfg.loss_config(Reduction::Mean)?.as_ref(),
        exec,
    )
}

fn split_loss_inner(
    model: &Model,
    split: &Split,
    cfg: &TrainConfig,
    loss_cfg: Option<&LossConfig>,
    exec: Exec,
) -> Result<f64> {
    let logits = exec.map(&split.features, |x| model.forward(x));
    let idx: Vec<usize> = (0..split.len()).collect();
    loss_and_logit_grads(logits, split, &idx, cfg, loss_cfg, exec).map(|(l, _)| l)
}

/// Gradient of the mean loss over `idx` with respect to every parameter.
pub fn batch_gradient(
    model: &Model,
    split: &Split,
    idx: &[usize],
    cfg: &TrainConfig,
) -> Result<(f64, Vec<f64>)> {
    batch_gradient_inner(
        model,
        split,
        idx,
        cfg,
        cfg.loss_config(Reduction::Mean)?.as_ref(),
    )
}

fn batch_gradient_inner(
    model: &Model,
    split: &Split,
    idx: &[usize],
    cfg: &TrainConfig,
    loss_cfg: Option<&LossConfig>,
) -> Result<(f64, Vec<f64>)> {
    let logits = idx
        .iter()
        .map(|&i| model.forward(&split.features[i]))
        .collect();
    let (loss, dlogits) =
        loss_and_logit_grads(logits, split, idx, cfg, loss_cfg, Exec::Sequential)?;
    let mut grad = vec![0.0; model.params().len()];
    for (&i, &d) in idx.iter().zip(&dlogits) {
        model.accumulate_grad(&split.features[i], d, &mut grad);
    }
    Ok((loss, grad))
}

/// Trains with minibatch SGD and the plateau schedule. A run is sequential
/// and bit-reproducible for a fixed config; `exec` only parallelizes the
/// per-epoch validation pass.
pub fn train(
    train_split: &Split,
    val_split: &Split,
    spec: ModelSpec,
    cfg: &TrainConfig,
    exec: Exec,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_split.is_empty() || val_split.is_empty() {
        return Err(domain("training and validation splits must be nonempty"));
    }
    for (name, split) in [("train", train_split), ("validation", val_split)] {
        if split.dim() != Some(spec.input_dim) {
            return Err(domain(format!(
                "{name} features have dimension {:?}, model expects {}",
                split.dim(),
                spec.input_dim
            )));
        }
    }

    let loss_cfg = cfg.loss_config(Reduction::Mean)?;
    let mut model = Model::init(spec, cfg.seed)?;
    let mut scheduler = SchedulerState::new(cfg.initial_lr);
    let mut shuffle_rng = rng_for(cfg.seed, SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..train_split.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let lr = scheduler.current_lr();
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let (loss, grad) =
                batch_gradient_inner(&model, train_split, chunk, cfg, loss_cfg.as_ref())
                    .map_err(|e| at_epoch(e, epoch))?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence {
                    epoch,
                    detail: format!("non-finite training loss {loss}"),
                });
            }
            loss_sum += loss * chunk.len() as f64;
            sgd_step(model.params_mut(), &grad, lr, cfg.weight_decay)?;
        }
        let train_loss = loss_sum / train_split.len() as f64;
        let val_loss = split_loss_inner(&model, val_split, cfg, loss_cfg.as_ref(), exec)
            .map_err(|e| at_epoch(e, epoch))?;
        if !val_loss.is_finite() || model.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Divergence {
                epoch,
                detail: format!("non-finite validation loss {val_loss}"),
            });
        }
        let (_, val_scores) = evaluate(&model, val_split, DEFAULT_CUTOFF, exec)?;
        history.push(EpochLog {
            epoch,
            train_loss,
            val_loss,
            val_scores,
            lr,
        });
        log::debug!(
            "epoch {epoch}: train {train_loss:.6} val {val_loss:.6} css {:.4}",
            val_scores.css
        );
        scheduler.step(val_loss);
    }

    let best_css_epoch = history
        .iter()
        .min_by(|a, b| {
            a.val_scores
                .selection_cmp(&b.val_scores)
                .then(a.epoch.cmp(&b.epoch))
        })
        .map_or(0, |e| e.epoch);
    Ok(TrainOutcome {
        model,
        history,
        best_css_epoch,
    })
}

fn at_epoch(e: Error, epoch: usize) -> Error {
    match e {
        Error::Divergence { detail, .. } => Error::Divergence { epoch, detail },
        other => other,
    }
}

/// Forward pass, sigmoid, threshold at `cutoff`, score.
pub fn evaluate(
    model: &Model,
    split: &Split,
    cutoff: f64,
    exec: Exec,
) -> Result<(ConfusionMatrix, SkillScores)> {
    let probs = exec.map(&split.features, |x| sigmoid(model.forward(x)));
    let cm = confusion_from_predictions(&split.targets, &probs, cutoff)?;
    Ok((cm, cm.scores()?))
}
