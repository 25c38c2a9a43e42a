//! Counting statistics of photon emissions from a driven few-level atom whose
//! spontaneous decay is monitored by a detector with finite response time.
//!
//! The environment is a finite-bandwidth Lorentzian reservoir, so repeated
//! null-result checks at intervals `tau` renormalize the decay physics through
//! the single scaling variable `x = Lambda * tau`. The crate provides three
//! engines over the same model:
//!
//! - [`liouville`]: the s-tilted generator and its dominant eigenvalue, giving
//!   the long-time characteristic function `lambda(s)` and the derived flux,
//!   shot noise, Fano and Mandel factors;
//! - [`counting`]: direct integration of the count-resolved master equation on
//!   a truncated ladder, the finite-time oracle for the spectral route;
//! - [`trajectory`]: stochastic click records from the window-by-window
//!   detection protocol (unitary drive, null-result damping, jumps).
//!
//! [`detection`] holds the closed-form survival amplitude and effective rate,
//! [`atom`] the built-in two- and three-level models plus user-defined
//! few-level systems, and [`linalg`] the small dense complex-matrix layer
//! everything shares.
//!
//! Vectorization convention, fixed repo-wide: **column stacking**,
//! `vec(X)[i + d*j] = X[i][j]`, so `vec(A X B) = (B^T ⊗ A) vec(X)`.

pub mod atom;
pub mod commands;
pub mod config;
pub mod counting;
pub mod detection;
pub mod linalg;
pub mod liouville;
pub mod report;
pub mod trajectory;

/// Version tag embedded in every output file.
pub const VERSION: &str = concat!("clickstat ", env!("CARGO_PKG_VERSION"));

use thiserror::Error;

/// Top-level error type aggregating all engine errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
    #[error(transparent)]
    Detection(#[from] detection::DetectionError),
    #[error(transparent)]
    Atom(#[from] atom::AtomError),
    #[error(transparent)]
    Ld(#[from] liouville::LdError),
    #[error(transparent)]
    Counting(#[from] counting::CountingError),
    #[error(transparent)]
    Trajectory(#[from] trajectory::TrajectoryError),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
