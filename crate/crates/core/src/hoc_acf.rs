//! Conversion between normalized crossing rates and autocorrelation lags.
//!
//! The lag-one link is the cosine formula `rho_1 = cos(pi * d_1)` where `d_1`
//! is the fraction of sample steps at which the signal changes sign. Higher
//! lags follow from a recursion over crossing counts of successively
//! differenced series: at each step the next lag is an affine function of
//! `cos(pi * d_{k+1})` whose coefficients are binomial-weighted sums of the
//! lags already recovered. The recursion compounds count noise, so depth is
//! capped at [`MAX_RECURSION_DEPTH`] (far beyond the two or three levels a
//! low-order loop model needs).

use crate::error::{Error, Result};
use crate::crossings::HocCounts;

/// Deepest supported lag recursion. Count noise is amplified roughly
/// geometrically with depth, so anything near this cap should be treated
/// as qualitative.
pub const MAX_RECURSION_DEPTH: usize = 12;

/// Autocorrelation lags `rho_0..rho_K` with `rho_0 = 1`.
///
/// `clamped[k]` is set when the raw lag-k value fell outside `[-1, 1]`
/// (possible when sampling noise leaks through the crossing recursion) and
/// was clamped. Consumers that need negative lags use [`AcfSequence::lag`],
/// which applies the symmetric extension `rho_{-k} = rho_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfSequence {
    rho: Vec<f64>,
    clamped: Vec<bool>,
}

impl AcfSequence {
    /// Builds a sequence from positive lags `rho_1..rho_K`; lag zero is implied.
    pub fn from_lags(lags: &[f64]) -> Result<Self> {
        let mut rho = Vec::with_capacity(lags.len() + 1);
        rho.push(1.0);
        for (i, &r) in lags.iter().enumerate() {
            if !r.is_finite() || r.abs() > 1.0 + 1e-12 {
                return Err(Error::InvalidModel(format!(
                    "lag {} value {} outside [-1, 1]",
                    i + 1,
                    r
                )));
            }
            rho.push(r.clamp(-1.0, 1.0));
        }
        let clamped = vec![false; rho.len()];
        Ok(Self { rho, clamped })
    }

    pub(crate) fn from_parts(rho: Vec<f64>, clamped: Vec<bool>) -> Self {
        debug_assert_eq!(rho.len(), clamped.len());
        debug_assert_eq!(rho.first(), Some(&1.0));
        Self { rho, clamped }
    }

    /// Largest available lag index K.
    pub fn max_lag(&self) -> usize {
        self.rho.len() - 1
    }

    /// Lag value with symmetric extension to negative indices.
    ///
    /// Panics if `|k|` exceeds the stored range; callers bound-check via
    /// [`AcfSequence::max_lag`].
    pub fn lag(&self, k: i64) -> f64 {
        self.rho[k.unsigned_abs() as usize]
    }

    /// Positive lags as a slice `[rho_0, rho_1, ..., rho_K]`.
    pub fn values(&self) -> &[f64] {
        &self.rho
    }

    /// Per-lag clamp flags, aligned with [`AcfSequence::values`].
    pub fn clamp_flags(&self) -> &[bool] {
        &self.clamped
    }

    /// True if any stored lag was clamped.
    pub fn any_clamped(&self) -> bool {
        self.clamped.iter().any(|&c| c)
    }

    fn require(&self, lag: usize) -> Result<()> {
        if self.max_lag() < lag {
            Err(Error::InsufficientLags {
                needed: lag,
                available: self.max_lag(),
            })
        } else {
            Ok(())
        }
    }
}

/// Binomial coefficient with the convention `C(n, r) = 0` for `r < 0` or
/// `r > n`. Exact in i64 for the sizes used here (n <= 2 * MAX_RECURSION_DEPTH).
pub(crate) fn binomial(n: i64, r: i64) -> i64 {
    if r < 0 || r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: i64 = 1;
    for i in 0..r {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Coefficients of the crossing-rate recursion at depth `k`.
///
/// The next lag satisfies
/// `rho_{k+1} = (-1)^k * (psi * cos(pi * d_{k+1}) - phi)`,
/// and inversely `cos(pi * d_{k+1}) = (phi + (-1)^k rho_{k+1}) / psi`.
/// At `k = 0` this degenerates to the plain cosine formula (`psi = 1`,
/// `phi = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiPhi {
    pub psi: f64,
    pub phi: f64,
    pub k: usize,
}

/// Computes the binomial-weighted recursion coefficients from lags
/// `rho_1..rho_k`.
pub fn psi_phi(k: usize, rho: &AcfSequence) -> Result<PsiPhi> {
    rho.require(k)?;
    let n = 2 * k as i64;
    let kk = k as i64;
    let mut psi = binomial(n, kk) as f64;
    let mut phi = -binomial(n, kk - 1) as f64;
    let mut sign = -1.0;
    for j in 1..=kk {
        let r = rho.lag(j);
        psi += sign * 2.0 * r * binomial(n, kk - j) as f64;
        phi -= sign * r * (binomial(n, kk - j + 1) + binomial(n, kk - j - 1)) as f64;
        sign = -sign;
    }
    Ok(PsiPhi { psi, phi, k })
}

/// One recovered lag value plus whether it had to be clamped into [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagValue {
    pub value: f64,
    pub clamped: bool,
}

/// Extends the lag sequence by one step from the next level's normalized
/// crossing rate `d_next = D_{k+1} / (N_{k+1} - 1)`.
pub fn next_lag(k: usize, rho: &AcfSequence, d_next: f64) -> Result<LagValue> {
    if !(0.0..=1.0).contains(&d_next) {
        return Err(Error::InvalidRate(d_next));
    }
    let PsiPhi { psi, phi, .. } = psi_phi(k, rho)?;
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let raw = sign * (psi * (std::f64::consts::PI * d_next).cos() - phi);
    let clamped = raw.abs() > 1.0;
    Ok(LagValue {
        value: raw.clamp(-1.0, 1.0),
        clamped,
    })
}

/// Recovers `rho_0..rho_K` from normalized crossing rates of levels `1..=K`.
///
/// Clamped lags are used as-is for deeper levels; the flags are carried in
/// the result so downstream estimates can surface the warning.
pub fn acf_from_hoc(counts: &HocCounts, max_lag: usize) -> Result<AcfSequence> {
    if max_lag > MAX_RECURSION_DEPTH {
        return Err(Error::InvalidModel(format!(
            "lag recursion depth {} exceeds supported maximum {}",
            max_lag, MAX_RECURSION_DEPTH
        )));
    }
    let mut rho = vec![1.0];
    let mut clamped = vec![false];
    for k in 0..max_lag {
        let d_next = counts
            .rate(k)
            .ok_or(Error::InvalidLevel(k + 1))?;
        let seq = AcfSequence::from_parts(rho.clone(), clamped.clone());
        let lag = next_lag(k, &seq, d_next)?;
        rho.push(lag.value);
        clamped.push(lag.clamped);
    }
    Ok(AcfSequence::from_parts(rho, clamped))
}

/// Inverse map: expected normalized crossing rates `d_1..d_L` of a process
/// with the given autocorrelation sequence.
///
/// Fails with [`Error::InconsistentAcf`] when the implied cosine falls
/// outside [-1, 1] by more than 1e-9, which signals lags that no stationary
/// Gaussian process can produce.
pub fn hoc_from_acf(rho: &AcfSequence, levels: usize) -> Result<Vec<f64>> {
    rho.require(levels)?;
    let mut rates = Vec::with_capacity(levels);
    for k in 0..levels {
        let PsiPhi { psi, phi, .. } = psi_phi(k, rho)?;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let numerator = phi + sign * rho.lag(k as i64 + 1);
        let ratio = if psi.abs() < 1e-12 {
            // Degenerate: the k-times differenced process has (numerically)
            // zero variance, which only a constant signal produces.
            if numerator.abs() < 1e-9 {
                1.0
            } else {
                return Err(Error::InconsistentAcf {
                    ratio: f64::INFINITY,
                });
            }
        } else {
            numerator / psi
        };
        if ratio.abs() > 1.0 + 1e-9 {
            return Err(Error::InconsistentAcf { ratio });
        }
        rates.push(ratio.clamp(-1.0, 1.0).acos() / std::f64::consts::PI);
    }
    Ok(rates)
}
