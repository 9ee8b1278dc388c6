//! Canonical phase moments from phase-space measurements.
//!
//! The crate computes the sampling kernels `K_k(r; s)` that turn events drawn
//! from an `s`-parametrized phase-space function into exponential moments
//! `Ψ_k = ⟨Ê^k⟩` of the canonical phase, simulates double-homodyne detection
//! (events distributed by the Husimi function), and estimates the moments
//! from simulated data with statistical and systematic error budgets.

// `!(x > 0.0)` style checks are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod kernels;
pub mod numeric;
pub mod simulator;
pub mod state;

pub use error::{Error, Result};
pub use state::{make_state, DensityMatrix, PhasePoint, StateKind, StateSpec};
