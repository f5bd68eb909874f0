//! Exhaustive hyperparameter grid with a CSS-ranked leaderboard.

use crate::error::{domain, Result};
use crate::metrics::{ConfusionMatrix, SkillScores};
use crate::par::Exec;

use super::model::ModelSpec;
use super::train::{evaluate, train, LossKind, Split, TrainConfig, DEFAULT_CUTOFF};

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub learning_rates: Vec<f64>,
    pub weight_decays: Vec<f64>,
    pub batch_sizes: Vec<usize>,
    pub alphas: Vec<f64>,
}

impl SearchSpace {
    /// Decades 1e-5..1e-2 for lr and decay, batches {48, 64, 80},
    /// alpha {0.25, 0.5, 0.75, 1}.
    pub fn full() -> Self {
        let decades = vec![0.00001, 0.0001, 0.001, 0.01];
        SearchSpace {
            learning_rates: decades.clone(),
            weight_decays: decades,
            batch_sizes: vec![48, 64, 80],
            alphas: vec![0.25, 0.5, 0.75, 1.0],
        }
    }

    /// Single point taken from `cfg`.
    pub fn point(cfg: &TrainConfig) -> Self {
        SearchSpace {
            learning_rates: vec![cfg.initial_lr],
            weight_decays: vec![cfg.weight_decay],
            batch_sizes: vec![cfg.batch_size],
            alphas: vec![cfg.alpha],
        }
    }

    /// Cartesian product applied on top of `base`. The alpha axis collapses
    /// to the base value for plain BCE, which has no alpha.
    pub fn configs(&self, base: &TrainConfig) -> Vec<TrainConfig> {
        let alphas = match base.loss_kind {
            LossKind::Bce => vec![base.alpha],
            LossKind::BcePp => self.alphas.clone(),
        };
        let mut out = Vec::new();
        for &lr in &self.learning_rates {
            for &wd in &self.weight_decays {
                for &bs in &self.batch_sizes {
                    for &alpha in &alphas {
                        out.push(TrainConfig {
                            initial_lr: lr,
                            weight_decay: wd,
                            batch_size: bs,
                            alpha,
                            ..base.clone()
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeaderboardEntry {
    pub config: TrainConfig,
    pub confusion: ConfusionMatrix,
    pub scores: SkillScores,
}

/// Trains one model per grid point (independently, possibly in parallel) and
/// ranks them by validation CSS, then TSS, then HSS. Exact ties keep grid
/// order.
pub fn grid_search(
    space: &SearchSpace,
    base: &TrainConfig,
    spec: &ModelSpec,
    train_split: &Split,
    val_split: &Split,
    exec: Exec,
) -> Result<Vec<LeaderboardEntry>> {
    let configs = space.configs(base);
    if configs.is_empty() {
        return Err(domain("search space has an empty axis"));
    }
    let mut board = exec
        .map(&configs, |cfg| -> Result<LeaderboardEntry> {
            let out = train(train_split, val_split, spec.clone(), cfg, Exec::Sequential)?;
            let (confusion, scores) =
                evaluate(&out.model, val_split, DEFAULT_CUTOFF, Exec::Sequential)?;
            Ok(LeaderboardEntry {
                config: cfg.clone(),
                confusion,
                scores,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    board.sort_by(|a, b| a.scores.selection_cmp(&b.scores));
    Ok(board)
}

pub const LEADERBOARD_HEADER: &str =
    "rank,loss,lr,weight_decay,batch_size,alpha,tp,fp,tn,fn,tss,hss,css";

pub fn leaderboard_csv(board: &[LeaderboardEntry]) -> String {
    let mut out = format!("{LEADERBOARD_HEADER}\n");
    for (rank, e) in board.iter().enumerate() {
        let c = &e.config;
        let cm = &e.confusion;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{:.4},{:.4},{:.4}\n",
            rank + 1,
            c.loss_kind,
            c.initial_lr,
            c.weight_decay,
            c.batch_size,
            c.alpha,
            cm.tp,
            cm.fp,
            cm.tn,
            cm.fn_,
            e.scores.tss,
            e.scores.hss,
            e.scores.css
        ));
    }
    out
}
