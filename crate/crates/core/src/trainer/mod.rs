//! Desk-scale training harness: feature extraction, linear/MLP heads,
//! SGD with a plateau schedule, grid search and checkpoints.

mod benchmark;
mod checkpoint;
mod grid;
mod model;
mod optim;
mod train;

pub use benchmark::{
    benchmark_splits, full_dataset_counts, run_benchmark, scaled_counts, BenchmarkReport,
    BenchmarkRun, BenchmarkSpec,
};
pub use checkpoint::Checkpoint;
pub use grid::{grid_search, leaderboard_csv, LeaderboardEntry, SearchSpace, LEADERBOARD_HEADER};
pub use model::{FeatureSpec, Model, ModelKind, ModelSpec, Standardizer};
pub use optim::{decayed_lr, sgd_step, SchedulerState, PLATEAU_FACTOR, PLATEAU_PATIENCE};
pub use train::{
    batch_gradient, epoch_log_csv, evaluate, split_loss, train, EpochLog, LossKind, Split,
    TrainConfig, TrainOutcome, DEFAULT_CUTOFF, DEFAULT_EPOCHS, EPOCH_LOG_HEADER,
};
