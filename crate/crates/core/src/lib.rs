//! Constant-memory ARMA pole estimation from higher-order crossing counts.
//!
//! The pipeline has four stages, each usable on its own:
//!
//! 1. [`crossings`] — stream samples through a difference cascade and count
//!    sign changes per level (`O(levels)` state, no sample storage).
//! 2. [`hoc_acf`] — convert normalized crossing rates into autocorrelation
//!    lags via the cosine formula and its binomial recursion.
//! 3. [`myw`] — solve the modified Yule-Walker equations for the AR
//!    denominator coefficients (plus a batch-ACF oracle path).
//! 4. [`poles`] — root the characteristic polynomial, map poles to
//!    continuous time, and derive damping ratios and oscillation flags.
//!
//! [`model`] provides seeded ARMA/closed-loop simulators and exact
//! autocorrelation oracles so the whole chain can be validated end to end.

pub mod crossings;
pub mod error;
pub mod hoc_acf;
pub mod model;
pub mod myw;
pub mod poles;

pub use crossings::{
    ewma_update, merge, EwmaState, HocConfig, HocCounts, HocState, MeanMode, StateFile,
};
pub use error::{Error, Result};
pub use hoc_acf::{acf_from_hoc, hoc_from_acf, next_lag, psi_phi, AcfSequence, PsiPhi};
pub use model::{
    generate_arma, generate_arma_with, refit_rmse, ArmaSpec, ClosedLoopSpec, NoiseConfig,
    SignalGenerator,
};
pub use myw::{batch_acf, prediction_rmse, solve_myw, solve_myw_with_offset, DenominatorEstimate};
pub use poles::{assess, damping_conjugate, damping_real_pair, find_roots, to_continuous, PoleReport};
