//! Worst-case expectations of feedback-modulated partial sums.
//!
//! The central object is `sup_ζ E[φ(W_n)]` where
//! `W_n = Σ_{i≤n} (ζ_i Z_i + K_i)² / n` and `ζ` ranges over predictable
//! strategies with values in `[ζ_lo, ζ_hi]`. The [`engine`] computes it by
//! backward induction, [`adversary`] estimates it from below by simulation,
//! and [`detection`] runs the energy detector whose error rates are
//! controlled by the same limit.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversary;
pub mod config;
pub mod detection;
pub mod distributions;
pub mod engine;
pub mod error;
pub mod ldp;
pub mod model;
pub mod optimize;
pub mod phi;
pub mod runner;

pub use distributions::{DistributionSpec, QuadratureRule};
pub use engine::{
    backward_induction, sublinear_expectation, DpSolution, EngineConfig, PolicyTable,
};
pub use error::{Error, Result};
pub use model::ModelParams;
pub use phi::TestFunction;
