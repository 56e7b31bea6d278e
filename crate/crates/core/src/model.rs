//! ARMA process definitions, seeded signal generation, closed-loop benchmark
//! construction, and exact autocorrelation oracles for testing.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hoc_acf::AcfSequence;
use crate::poles::find_roots;

/// Samples discarded before emitting, to let the zero-initial-condition
/// transient die out.
pub const DEFAULT_WARMUP: usize = 100;

/// Rational transfer-function model: `num` and `den` are the monic
/// coefficient lists `(1, b_1..b_m)` and `(1, a_1..a_n)` in powers of the
/// backward shift.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmaSpec {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl ArmaSpec {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        if num.is_empty() || den.is_empty() {
            return Err(Error::InvalidModel("empty coefficient list".into()));
        }
        if num[0] != 1.0 {
            return Err(Error::NonMonic(num[0]));
        }
        if den[0] != 1.0 {
            return Err(Error::NonMonic(den[0]));
        }
        if num.iter().chain(den.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidModel("non-finite coefficient".into()));
        }
        Ok(Self { num, den })
    }

    /// White noise: identity filter.
    pub fn white_noise() -> Self {
        Self {
            num: vec![1.0],
            den: vec![1.0],
        }
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    /// AR order n.
    pub fn ar_order(&self) -> usize {
        self.den.len() - 1
    }

    /// MA order m.
    pub fn ma_order(&self) -> usize {
        self.num.len() - 1
    }

    /// True poles: roots of `z^n + a_1 z^(n-1) + ... + a_n`.
    pub fn true_poles(&self) -> Result<Vec<Complex64>> {
        if self.ar_order() == 0 {
            return Ok(Vec::new());
        }
        find_roots(&self.den[1..])
    }

    /// True if every pole lies strictly inside the unit circle.
    pub fn is_stable(&self) -> Result<bool> {
        Ok(self
            .true_poles()?
            .iter()
            .all(|p| p.norm() < 1.0))
    }

    fn largest_pole_modulus(&self) -> Result<f64> {
        Ok(self
            .true_poles()?
            .iter()
            .map(|p| p.norm())
            .fold(0.0, f64::max))
    }

    /// Runs the difference equation
    /// `y_t = -sum a_i y_{t-i} + sum b_j e_{t-j}`
    /// over the given input with zero initial conditions. No warm-up discard:
    /// the output aligns sample-for-sample with the input.
    pub fn filter(&self, input: &[f64]) -> Vec<f64> {
        let n = self.ar_order();
        let m = self.ma_order();
        let mut out = Vec::with_capacity(input.len());
        for t in 0..input.len() {
            let mut y = 0.0;
            for (j, &b) in self.num.iter().enumerate().take(m + 1) {
                if t >= j {
                    y += b * input[t - j];
                }
            }
            for (i, &a) in self.den.iter().enumerate().skip(1).take(n) {
                if t >= i {
                    y -= a * out[t - i];
                }
            }
            out.push(y);
        }
        out
    }

    /// Exact theoretical autocorrelation lags `rho_0..rho_K`.
    ///
    /// Solves the autocovariance equations for the base lags, then extends by
    /// the AR recursion `rho_k = -sum a_i rho_{k-i}` (valid for `k > m`).
    /// Requires a stable denominator.
    pub fn analytic_acf(&self, max_lag: usize) -> Result<AcfSequence> {
        let modulus = self.largest_pole_modulus()?;
        if modulus >= 1.0 {
            return Err(Error::Unstable { modulus });
        }
        let n = self.ar_order();
        let m = self.ma_order();

        // Impulse response out to the MA order (all that is needed for the
        // noise cross terms).
        let mut psi = vec![0.0; m + 1];
        for j in 0..=m {
            let mut v = self.num[j];
            for i in 1..=n.min(j) {
                v -= self.den[i] * psi[j - i];
            }
            psi[j] = v;
        }

        // Autocovariance system for gamma_0..gamma_base with unit noise
        // variance; negative indices fold by symmetry.
        let base = n.max(m);
        let dim = base + 1;
        let mut mat = DMatrix::<f64>::zeros(dim, dim);
        let mut rhs = DVector::<f64>::zeros(dim);
        for k in 0..dim {
            mat[(k, k)] += 1.0;
            for i in 1..=n {
                let idx = (k as i64 - i as i64).unsigned_abs() as usize;
                mat[(k, idx)] += self.den[i];
            }
            if k <= m {
                rhs[k] = (k..=m).map(|j| self.num[j] * psi[j - k]).sum();
            }
        }
        let gamma = mat
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::InvalidModel("autocovariance system is singular".into()))?;
        let g0 = gamma[0];
        if !(g0.is_finite() && g0 > 0.0) {
            return Err(Error::InvalidModel(format!(
                "non-positive process variance {g0}"
            )));
        }

        let mut rho = vec![0.0; max_lag + 1];
        for (k, r) in rho.iter_mut().enumerate().take(dim.min(max_lag + 1)) {
            *r = gamma[k] / g0;
        }
        for k in dim..=max_lag {
            let mut v = 0.0;
            for i in 1..=n {
                v -= self.den[i] * rho[k - i];
            }
            rho[k] = v;
        }
        rho[0] = 1.0;
        AcfSequence::from_lags(&rho[1..])
    }
}

impl<'de> Deserialize<'de> for ArmaSpec {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        struct Raw {
            num: Vec<f64>,
            den: Vec<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        ArmaSpec::new(raw.num, raw.den).map_err(serde::de::Error::custom)
    }
}

/// Seeded driving-noise configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub seed: u64,
    /// Noise variance. Zero is allowed as a degenerate all-zero drive.
    pub variance: f64,
    /// Number of emitted samples.
    pub count: usize,
}

impl NoiseConfig {
    pub fn new(seed: u64, variance: f64, count: usize) -> Result<Self> {
        if !(variance.is_finite() && variance >= 0.0) {
            return Err(Error::InvalidNoise(format!(
                "variance must be finite and non-negative, got {variance}"
            )));
        }
        if count < 2 {
            return Err(Error::InvalidNoise(format!(
                "need at least 2 samples, got {count}"
            )));
        }
        Ok(Self {
            seed,
            variance,
            count,
        })
    }

    /// IID Gaussian draws: ChaCha12 keyed by the seed, transformed by
    /// `rand_distr::Normal`. Fixed here so seeded runs are reproducible.
    pub fn sample(&self, count: usize) -> Vec<f64> {
        if self.variance == 0.0 {
            return vec![0.0; count];
        }
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        let normal = Normal::new(0.0, self.variance.sqrt()).expect("validated variance");
        (0..count).map(|_| normal.sample(&mut rng)).collect()
    }
}

/// Streaming generator for a seeded ARMA signal. One owner at a time; the
/// iterator can be moved across threads but not shared.
pub struct SignalGenerator {
    spec: ArmaSpec,
    noise: Vec<f64>,
    history: Vec<f64>,
    input_history: Vec<f64>,
    t: usize,
    emitted: usize,
    count: usize,
    warmup: usize,
}

impl SignalGenerator {
    pub fn new(spec: ArmaSpec, noise: NoiseConfig) -> Result<Self> {
        Self::with_options(spec, noise, DEFAULT_WARMUP, false)
    }

    /// `force` admits unstable denominators (useful for failure-mode tests).
    pub fn with_options(
        spec: ArmaSpec,
        noise: NoiseConfig,
        warmup: usize,
        force: bool,
    ) -> Result<Self> {
        if !force {
            let modulus = spec.largest_pole_modulus()?;
            if modulus >= 1.0 {
                return Err(Error::Unstable { modulus });
            }
        }
        let total = noise.count + warmup;
        let eps = noise.sample(total);
        Ok(Self {
            history: vec![0.0; spec.ar_order()],
            input_history: vec![0.0; spec.ma_order()],
            spec,
            noise: eps,
            t: 0,
            emitted: 0,
            count: noise.count,
            warmup,
        })
    }

    fn step(&mut self) -> Option<f64> {
        if self.t >= self.noise.len() {
            return None;
        }
        let e = self.noise[self.t];
        let mut y = self.spec.num[0] * e;
        for (j, &b) in self.spec.num.iter().enumerate().skip(1) {
            y += b * self.input_history[j - 1];
        }
        for (i, &a) in self.spec.den.iter().enumerate().skip(1) {
            y -= a * self.history[i - 1];
        }
        if !self.history.is_empty() {
            self.history.rotate_right(1);
            self.history[0] = y;
        }
        if !self.input_history.is_empty() {
            self.input_history.rotate_right(1);
            self.input_history[0] = e;
        }
        self.t += 1;
        Some(y)
    }
}

impl Iterator for SignalGenerator {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        while self.t < self.warmup {
            self.step()?;
        }
        if self.emitted >= self.count {
            return None;
        }
        self.emitted += 1;
        self.step()
    }
}

/// Generates `noise.count` samples of the process with the default warm-up
/// discard. Deterministic for a fixed seed.
pub fn generate_arma(spec: &ArmaSpec, noise: &NoiseConfig) -> Result<Vec<f64>> {
    Ok(SignalGenerator::new(spec.clone(), *noise)?.collect())
}

/// As [`generate_arma`] with explicit warm-up and stability override.
pub fn generate_arma_with(
    spec: &ArmaSpec,
    noise: &NoiseConfig,
    warmup: usize,
    force: bool,
) -> Result<Vec<f64>> {
    Ok(SignalGenerator::with_options(spec.clone(), *noise, warmup, force)?.collect())
}

/// First-order plant with delay under integrating control, the benchmark
/// regulatory loop. The error-to-noise transfer collapses to a single
/// rational form whose denominator degree is `max(2, delay)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopSpec {
    /// Plant pole, `0 < alpha < 1`.
    pub alpha: f64,
    /// Plant delay in samples, `>= 1`.
    pub delay: usize,
    /// Controller gain, `>= 0`.
    pub kc: f64,
    /// Sampling period.
    pub dt: f64,
}

impl ClosedLoopSpec {
    pub fn new(alpha: f64, delay: usize, kc: f64, dt: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidModel(format!(
                "plant pole must satisfy 0 < alpha < 1, got {alpha}"
            )));
        }
        if delay < 1 {
            return Err(Error::InvalidModel("delay must be >= 1".into()));
        }
        if !(kc.is_finite() && kc >= 0.0) {
            return Err(Error::InvalidModel(format!(
                "controller gain must be >= 0, got {kc}"
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidModel(format!(
                "sampling period must be > 0, got {dt}"
            )));
        }
        Ok(Self {
            alpha,
            delay,
            kc,
            dt,
        })
    }

    /// Error-signal model: numerator `1 - z^-1`, denominator
    /// `1 - (1+alpha) z^-1 + alpha z^-2 + (1-alpha) Kc z^-d`.
    pub fn to_arma(&self) -> ArmaSpec {
        let degree = self.delay.max(2);
        let mut den = vec![0.0; degree + 1];
        den[0] = 1.0;
        den[1] = -(1.0 + self.alpha);
        den[2] += self.alpha;
        den[self.delay] += (1.0 - self.alpha) * self.kc;
        ArmaSpec::new(vec![1.0, -1.0], den).expect("closed-loop construction is monic")
    }
}

/// Table-style normalized RMSE between a process realization and the
/// realization of a refitted model driven by the same noise: the numerator
/// is kept, the denominator is replaced by the estimate, both filters see
/// the identical seeded noise, and the error power is normalized by the
/// true signal's sample variance. This isolates the effect of denominator
/// estimation error.
pub fn refit_rmse(
    spec: &ArmaSpec,
    a_hat: &[f64],
    noise: &NoiseConfig,
    warmup: usize,
) -> Result<f64> {
    let mut den = Vec::with_capacity(a_hat.len() + 1);
    den.push(1.0);
    den.extend_from_slice(a_hat);
    let refit = ArmaSpec::new(spec.num.clone(), den)?;
    let y = generate_arma_with(spec, noise, warmup, true)?;
    let y_hat = generate_arma_with(&refit, noise, warmup, true)?;
    normalized_rmse(&y, &y_hat)
}

/// `sqrt( sum (y_t - y_hat_t)^2 / (N * var(y)) )`.
pub fn normalized_rmse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() || y.is_empty() {
        return Err(Error::TooFewSamples {
            needed: 1,
            got: y.len().min(y_hat.len()),
        });
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let sq_err: f64 = y
        .iter()
        .zip(y_hat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sq_err / (n * var)).sqrt())
}

/// Benchmark transfer function with poles {0.95}: `(1 - 0.5 z) / (1 - 0.95 z)`.
pub fn benchmark_arma11() -> ArmaSpec {
    ArmaSpec::new(vec![1.0, -0.5], vec![1.0, -0.95]).unwrap()
}

/// Benchmark transfer function with poles {0.95, 0.9}:
/// `(1 - 0.5 z) / (1 - 1.85 z + 0.855 z^2)`.
pub fn benchmark_arma21() -> ArmaSpec {
    ArmaSpec::new(vec![1.0, -0.5], vec![1.0, -1.85, 0.855]).unwrap()
}
