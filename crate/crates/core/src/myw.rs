//! Batch autocorrelation estimation and the modified Yule-Walker solve that
//! turns lag estimates into AR denominator coefficients.
//!
//! With MA terms present the plain Yule-Walker equations are biased, so the
//! lag window is shifted past the MA order: the linear system uses lags
//! `k..k+n-1` on the right-hand side with `k > m` (default `k = m + 1`). Lags
//! near unity make the lag matrix nearly singular, so every solve records a
//! condition estimate and flags suspicious inputs rather than silently
//! returning garbage.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hoc_acf::AcfSequence;

/// Soft conditioning warning threshold.
pub const COND_WARN: f64 = 1e3;
/// Hard failure threshold: beyond this the solve refuses to return numbers.
pub const COND_FAIL: f64 = 1e8;
/// Lag magnitude at which estimates become conditioning-limited.
pub const NEAR_UNITY_LAG: f64 = 0.97;

/// Estimation caveats carried alongside the coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MywWarning {
    /// One of the input lags had been clamped into [-1, 1].
    ClampedLags,
    /// A lag used by the solve has magnitude at or above 0.97; pole
    /// estimates are conditioning-limited in this regime.
    NearUnityLags,
    /// Condition estimate above the soft threshold.
    HighCondition,
}

/// Estimated AR denominator coefficients `a_1..a_n` plus solve diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DenominatorEstimate {
    /// Coefficients `a_1..a_n` of the monic characteristic polynomial.
    pub a: Vec<f64>,
    /// Lag offset used by the solve (`k > m`).
    pub k_start: usize,
    /// 1-norm condition estimate of the lag matrix.
    pub cond: f64,
    pub warnings: Vec<MywWarning>,
}

impl DenominatorEstimate {
    /// Wraps bare coefficients with no diagnostics; handy for feeding known
    /// polynomials into the pole assessment.
    pub fn raw(a: Vec<f64>) -> Self {
        Self {
            a,
            k_start: 1,
            cond: 1.0,
            warnings: Vec::new(),
        }
    }

    pub fn ill_conditioned(&self) -> bool {
        self.warnings
            .iter()
            .any(|w| matches!(w, MywWarning::HighCondition | MywWarning::NearUnityLags))
    }
}

/// Sample autocorrelation lags `rho_0..rho_K` of a batch of data, with the
/// sample mean removed and the full-length sum in the denominator (which
/// keeps every lag inside [-1, 1]).
pub fn batch_acf(y: &[f64], max_lag: usize) -> Result<AcfSequence> {
    let q = y.len();
    if q < max_lag + 2 {
        return Err(Error::TooFewSamples {
            needed: max_lag + 2,
            got: q,
        });
    }
    let mean = y.iter().sum::<f64>() / q as f64;
    let denom: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if denom == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let mut lags = Vec::with_capacity(max_lag);
    for k in 1..=max_lag {
        let num: f64 = (0..q - k)
            .map(|t| (y[t] - mean) * (y[t + k] - mean))
            .sum();
        lags.push(num / denom);
    }
    AcfSequence::from_lags(&lags)
}

/// Solves the modified Yule-Walker system for an ARMA(n, m) denominator with
/// the default lag offset `k = m + 1`.
pub fn solve_myw(rho: &AcfSequence, n: usize, m: usize) -> Result<DenominatorEstimate> {
    solve_myw_with_offset(rho, n, m + 1)
}

/// Solves the modified Yule-Walker system with an explicit lag offset
/// `k_start` (must exceed the MA order for unbiased estimates; that is the
/// caller's contract).
///
/// The lag matrix row `i`, column `j` holds `rho_{k-1+i-j}` (Toeplitz along
/// diagonals, symmetric extension for negative indices); the right-hand side
/// is `rho_k..rho_{k+n-1}`. The returned coefficients solve
/// `z^n + a_1 z^(n-1) + ... + a_n`.
pub fn solve_myw_with_offset(
    rho: &AcfSequence,
    n: usize,
    k_start: usize,
) -> Result<DenominatorEstimate> {
    if n == 0 {
        return Err(Error::InvalidModel("AR order must be >= 1".into()));
    }
    if k_start == 0 {
        return Err(Error::InvalidModel("lag offset must be >= 1".into()));
    }
    let needed = k_start + n - 1;
    if rho.max_lag() < needed {
        return Err(Error::InsufficientLags {
            needed,
            available: rho.max_lag(),
        });
    }

    let k = k_start as i64;
    let mut omega = DMatrix::<f64>::zeros(n, n);
    let mut used_max = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let lag_idx = k - 1 + i as i64 - j as i64;
            let v = rho.lag(lag_idx);
            omega[(i, j)] = v;
            if lag_idx != 0 {
                used_max = used_max.max(v.abs());
            }
        }
        debug_assert!({
            // Toeplitz structure: entries depend on i - j only.
            (0..n).all(|jj| omega[(i, jj)] == rho.lag(k - 1 + i as i64 - jj as i64))
        });
    }
    let mut p = DMatrix::<f64>::zeros(n, 1);
    for i in 0..n {
        let v = rho.lag(k + i as i64);
        p[(i, 0)] = v;
        used_max = used_max.max(v.abs());
    }

    let cond = condition_1norm(&omega);
    if !(cond < COND_FAIL) {
        return Err(Error::IllConditioned { cond });
    }
    let solution = omega
        .clone()
        .lu()
        .solve(&p)
        .ok_or(Error::IllConditioned { cond: f64::MAX })?;

    // The solve yields [-a_1, ..., -a_n].
    let a: Vec<f64> = (0..n).map(|i| -solution[(i, 0)]).collect();

    let mut warnings = Vec::new();
    if rho.any_clamped() {
        warnings.push(MywWarning::ClampedLags);
    }
    if used_max >= NEAR_UNITY_LAG {
        warnings.push(MywWarning::NearUnityLags);
    }
    if cond > COND_WARN {
        warnings.push(MywWarning::HighCondition);
    }

    Ok(DenominatorEstimate {
        a,
        k_start,
        cond,
        warnings,
    })
}

fn condition_1norm(m: &DMatrix<f64>) -> f64 {
    let norm = matrix_1norm(m);
    match m.clone().try_inverse() {
        Some(inv) => norm * matrix_1norm(&inv),
        None => f64::INFINITY,
    }
}

fn matrix_1norm(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// One-step prediction quality of the AR part: predicts
/// `y_hat_t = -sum a_i y_{t-i}`, skips the first `n` samples, and normalizes
/// the error power by `N * var(y)`.
///
/// With MA terms present the residual keeps the (unestimated) MA noise
/// component, so this measures relative fit, not absolute model error.
pub fn prediction_rmse(y: &[f64], estimate: &DenominatorEstimate) -> Result<f64> {
    let n = estimate.a.len();
    if y.len() < n + 1 {
        return Err(Error::TooFewSamples {
            needed: n + 1,
            got: y.len(),
        });
    }
    let count = y.len() as f64;
    let mean = y.iter().sum::<f64>() / count;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
    if var == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let mut sq_err = 0.0;
    for t in n..y.len() {
        let mut pred = 0.0;
        for (i, &a) in estimate.a.iter().enumerate() {
            pred -= a * y[t - 1 - i];
        }
        let e = y[t] - pred;
        sq_err += e * e;
    }
    Ok((sq_err / (count * var)).sqrt())
}
