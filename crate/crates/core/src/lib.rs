//! Ordinal proximity-penalized binary cross-entropy for threshold-based
//! flare forecasting, with forecast skill scores, magnetogram preprocessing
//! and a small SGD training harness.

pub mod error;
pub mod loss;
pub mod metrics;
pub mod ordinal;
pub mod par;
pub mod pipeline;
pub mod trainer;

pub use error::{Error, Result};

/// Library version, as reported by the command-line tool.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
