//! Symmetric alpha-stable noise generation, noise-injection data
//! augmentation, and robustness evaluation for small classifiers.
//!
//! The pipeline goes: sample heavy-tailed noise ([`stable_dist`]), build
//! noise-augmented training sets ([`augment`]) from loaded or synthesized
//! datasets ([`dataio`]), train a fully connected classifier ([`nn`]), and
//! run the full training-noise x testing-noise evaluation grid ([`harness`]).

pub mod augment;
pub mod dataio;
pub mod harness;
pub mod nn;
pub mod stable_dist;

use thiserror::Error;

/// Crate-wide error type.
///
/// The variants map onto the CLI exit-code taxonomy: parameter/usage
/// problems, data/format problems, and numeric/training failures.
#[derive(Debug, Error)]
pub enum Error {
    /// A value outside its documented domain (bad alpha, empty sample, ...).
    #[error("parameter error: {0}")]
    Parameter(String),
    /// Malformed input data (bad magic number, ragged CSV row, ...).
    #[error("format error: {0}")]
    Format(String),
    /// A numeric procedure failed to meet its tolerance.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Training diverged; reports where.
    #[error("training error at epoch {epoch}, batch {batch}: {message}")]
    Training {
        epoch: usize,
        batch: usize,
        message: String,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
