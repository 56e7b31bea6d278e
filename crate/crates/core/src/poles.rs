//! Root finding on the estimated characteristic polynomial and translation
//! of discrete poles into continuous-time damping information.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::myw::DenominatorEstimate;

const MAX_ITERATIONS: usize = 500;

/// How a damping ratio was derived for a group of poles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeKind {
    /// Complex-conjugate continuous pole pair.
    ConjugatePair,
    /// Two real continuous poles grouped by proximity.
    RealPair,
    /// A leftover real pole with no partner (or a mixed-sign pair);
    /// no damping ratio is defined.
    UnpairedReal,
}

impl ModeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModeKind::ConjugatePair => "conjugate-pair",
            ModeKind::RealPair => "real-pair",
            ModeKind::UnpairedReal => "unpaired-real",
        }
    }
}

/// Damping assessment for one dynamic mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeDamping {
    pub mode: ModeKind,
    /// Damping ratio; `None` for unpaired real modes.
    pub zeta: Option<f64>,
    /// Set when this is a conjugate-pair mode with `zeta` below the
    /// configured threshold.
    pub oscillatory: bool,
}

/// Full pole/damping report for an estimated denominator.
#[derive(Debug, Clone)]
pub struct PoleReport {
    /// Discrete poles (roots of the characteristic polynomial).
    pub discrete: Vec<Complex64>,
    /// Continuous-time images `ln(p_z)/dt`; `None` for a pole at the origin,
    /// which has no finite continuous image.
    pub continuous: Vec<Option<Complex64>>,
    /// Per-pole instability flags (`|p_z| >= 1`), aligned with `discrete`.
    pub unstable: Vec<bool>,
    /// Damping per mode.
    pub damping: Vec<ModeDamping>,
}

impl PoleReport {
    pub fn any_unstable(&self) -> bool {
        self.unstable.iter().any(|&u| u)
    }

    pub fn any_oscillatory(&self) -> bool {
        self.damping.iter().any(|m| m.oscillatory)
    }
}

fn eval_poly(coeffs: &[f64], z: Complex64) -> Complex64 {
    // coeffs = [1, a_1, ..., a_n] for z^n + a_1 z^(n-1) + ... + a_n
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs {
        acc = acc * z + c;
    }
    acc
}

fn eval_poly_derivative(coeffs: &[f64], z: Complex64) -> Complex64 {
    let n = coeffs.len() - 1;
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, &c) in coeffs.iter().take(n).enumerate() {
        acc = acc * z + c * (n - i) as f64;
    }
    acc
}

/// Roots of `z^n + a_1 z^(n-1) + ... + a_n` for the coefficient tail
/// `a = [a_1, ..., a_n]`.
///
/// Degrees one and two use closed forms. Higher degrees run simultaneous
/// (Durand-Kerner) iteration with a Newton polish, capped at 500 iterations.
/// Roots of real polynomials are symmetrized into exact conjugate pairs;
/// residuals are verified against `1e-8 * max(1, ||a||_1)`.
pub fn find_roots(a: &[f64]) -> Result<Vec<Complex64>> {
    if a.is_empty() {
        return Err(Error::InvalidModel(
            "cannot solve a degree-zero polynomial".into(),
        ));
    }
    if a.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidModel("non-finite coefficient".into()));
    }

    // Exact roots at the origin: strip trailing zero coefficients.
    let mut tail_zeros = 0;
    while tail_zeros < a.len() && a[a.len() - 1 - tail_zeros] == 0.0 {
        tail_zeros += 1;
    }
    let reduced = &a[..a.len() - tail_zeros];
    let mut roots = vec![Complex64::new(0.0, 0.0); tail_zeros];
    roots.extend(nonzero_roots(reduced)?);

    // Residual check on the full polynomial.
    let mut coeffs = Vec::with_capacity(a.len() + 1);
    coeffs.push(1.0);
    coeffs.extend_from_slice(a);
    let norm1: f64 = a.iter().map(|c| c.abs()).sum();
    let tol = 1e-8 * norm1.max(1.0);
    for &r in &roots {
        let residual = eval_poly(&coeffs, r).norm();
        if residual > tol {
            return Err(Error::RootNonConvergence {
                iterations: MAX_ITERATIONS,
            });
        }
    }
    roots.sort_by(|x, y| {
        (y.norm(), y.re, y.im)
            .partial_cmp(&(x.norm(), x.re, x.im))
            .unwrap()
    });
    Ok(roots)
}

fn nonzero_roots(a: &[f64]) -> Result<Vec<Complex64>> {
    match a.len() {
        0 => Ok(Vec::new()),
        1 => Ok(vec![Complex64::new(-a[0], 0.0)]),
        2 => Ok(quadratic_roots(a[0], a[1])),
        _ => durand_kerner(a),
    }
}

/// Roots of `z^2 + b z + c` via the numerically stable quadratic formula.
fn quadratic_roots(b: f64, c: f64) -> Vec<Complex64> {
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        // b == 0 makes q == 0; fall back to symmetric roots.
        if q == 0.0 {
            let r = (-c).sqrt();
            return vec![Complex64::new(r, 0.0), Complex64::new(-r, 0.0)];
        }
        vec![Complex64::new(q, 0.0), Complex64::new(c / q, 0.0)]
    } else {
        let re = -b / 2.0;
        let im = (-disc).sqrt() / 2.0;
        vec![Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

fn durand_kerner(a: &[f64]) -> Result<Vec<Complex64>> {
    let n = a.len();
    let mut coeffs = Vec::with_capacity(n + 1);
    coeffs.push(1.0);
    coeffs.extend_from_slice(a);

    // Cauchy bound on root magnitude, used to scale the starting circle.
    let radius = 1.0 + a.iter().map(|c| c.abs()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n)
        .map(|i| seed.powu(i as u32 + 1) / seed.norm().powi(i as i32) * radius * 0.8)
        .collect();

    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let mut max_step = 0.0f64;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    denom *= z[i] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                // Collided estimates; nudge apart and keep iterating.
                z[i] += Complex64::new(1e-6, 1e-6);
                continue;
            }
            let step = eval_poly(&coeffs, z[i]) / denom;
            z[i] -= step;
            max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
        }
        if max_step < 1e-14 {
            converged = true;
            break;
        }
    }
    if !converged {
        // Multiple roots converge slowly; accept if residuals are already
        // below tolerance, otherwise report failure.
        let norm1: f64 = a.iter().map(|c| c.abs()).sum();
        let tol = 1e-8 * norm1.max(1.0);
        if z.iter().any(|&r| eval_poly(&coeffs, r).norm() > tol) {
            return Err(Error::RootNonConvergence {
                iterations: MAX_ITERATIONS,
            });
        }
    }

    // Newton polish sharpens each root independently.
    for r in z.iter_mut() {
        for _ in 0..3 {
            let d = eval_poly_derivative(&coeffs, *r);
            if d.norm() < 1e-300 {
                break;
            }
            *r -= eval_poly(&coeffs, *r) / d;
        }
    }

    pair_conjugates(&mut z);
    Ok(z)
}

/// Symmetrizes roots of a real polynomial: near-real roots are flattened to
/// the axis and complex roots are averaged with their conjugate partner.
fn pair_conjugates(roots: &mut [Complex64]) {
    let tol_of = |z: &Complex64| 1e-8 * (1.0 + z.norm());
    let mut used = vec![false; roots.len()];
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        if roots[i].im.abs() <= tol_of(&roots[i]) {
            roots[i].im = 0.0;
            used[i] = true;
            continue;
        }
        // Closest conjugate partner among the unused complex roots.
        let mut best: Option<(usize, f64)> = None;
        for j in 0..roots.len() {
            if j == i || used[j] {
                continue;
            }
            let dist = (roots[j] - roots[i].conj()).norm();
            if best.map_or(true, |(_, d)| dist < d) {
                best = Some((j, dist));
            }
        }
        if let Some((j, dist)) = best {
            if dist <= tol_of(&roots[i]) {
                let avg = (roots[i] + roots[j].conj()) / 2.0;
                roots[i] = avg;
                roots[j] = avg.conj();
                used[i] = true;
                used[j] = true;
            }
        }
    }
}

/// Maps a discrete pole to its continuous-time counterpart
/// `p_s = ln(p_z) / dt` (principal branch).
pub fn to_continuous(p_z: Complex64, dt: f64) -> Result<Complex64> {
    if p_z.norm() == 0.0 {
        return Err(Error::ZeroPole);
    }
    Ok(p_z.ln() / dt)
}

/// Damping ratio of a conjugate continuous pole pair `a +/- ib`.
///
/// Sign is taken so that stable poles (negative real part) give a positive
/// ratio.
pub fn damping_conjugate(p_s: Complex64) -> f64 {
    -p_s.re / p_s.norm()
}

/// Damping ratio of two real continuous poles,
/// `-(p1 + p2) / (2 sqrt(p1 p2))`; only defined when the product is positive.
pub fn damping_real_pair(p1: f64, p2: f64) -> Result<f64> {
    let product = p1 * p2;
    if product <= 0.0 {
        return Err(Error::UndefinedDamping { product });
    }
    Ok(-(p1 + p2) / (2.0 * product.sqrt()))
}

/// Builds the full pole report for an estimated denominator: roots,
/// continuous images, per-pole stability, and per-mode damping with
/// oscillation flags.
pub fn assess(
    estimate: &DenominatorEstimate,
    dt: f64,
    zeta_threshold: f64,
) -> Result<PoleReport> {
    let discrete = find_roots(&estimate.a)?;
    assess_roots(&discrete, dt, zeta_threshold)
}

/// Same as [`assess`] but starting from already-computed discrete poles.
pub fn assess_roots(
    discrete: &[Complex64],
    dt: f64,
    zeta_threshold: f64,
) -> Result<PoleReport> {
    // Poles within 1e-9 of the unit circle count as unstable: a marginal
    // root computed in floating point can land just inside.
    let unstable: Vec<bool> = discrete.iter().map(|p| p.norm() >= 1.0 - 1e-9).collect();
    let continuous: Vec<Option<Complex64>> = discrete
        .iter()
        .map(|&p| to_continuous(p, dt).ok())
        .collect();

    let mut damping = Vec::new();
    let mut complex_pool: Vec<Complex64> = Vec::new();
    let mut real_pool: Vec<f64> = Vec::new();
    for c in continuous.iter().flatten() {
        if c.im == 0.0 {
            if c.re.abs() < 1e-12 {
                // Integrator boundary: the continuous pole sits at the
                // origin, where the real-pair ratio is undefined.
                damping.push(ModeDamping {
                    mode: ModeKind::UnpairedReal,
                    zeta: None,
                    oscillatory: false,
                });
            } else {
                real_pool.push(c.re);
            }
        } else {
            complex_pool.push(*c);
        }
    }

    // Conjugate pairs: keep one representative per pair (positive imaginary
    // part). A lone complex image (negative real discrete pole) still
    // defines an oscillation at the folding frequency and is treated the
    // same way.
    let mut seen = vec![false; complex_pool.len()];
    for i in 0..complex_pool.len() {
        if seen[i] || complex_pool[i].im < 0.0 {
            continue;
        }
        seen[i] = true;
        for (j, other) in complex_pool.iter().enumerate().skip(i + 1) {
            if !seen[j] && (other - complex_pool[i].conj()).norm() < 1e-9 {
                seen[j] = true;
                break;
            }
        }
        let zeta = damping_conjugate(complex_pool[i]);
        damping.push(ModeDamping {
            mode: ModeKind::ConjugatePair,
            zeta: Some(zeta),
            oscillatory: zeta < zeta_threshold,
        });
    }
    for (i, c) in complex_pool.iter().enumerate() {
        if !seen[i] && c.im < 0.0 {
            // Negative-imaginary leftover without a positive partner.
            let zeta = damping_conjugate(*c);
            damping.push(ModeDamping {
                mode: ModeKind::ConjugatePair,
                zeta: Some(zeta),
                oscillatory: zeta < zeta_threshold,
            });
        }
    }

    // Real poles: group dominant pairs by proximity (descending real part),
    // falling back to unpaired when a pair's product is not positive.
    real_pool.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let mut idx = 0;
    while idx + 1 < real_pool.len() {
        match damping_real_pair(real_pool[idx], real_pool[idx + 1]) {
            Ok(zeta) => {
                damping.push(ModeDamping {
                    mode: ModeKind::RealPair,
                    zeta: Some(zeta),
                    oscillatory: false,
                });
                idx += 2;
            }
            Err(_) => {
                damping.push(ModeDamping {
                    mode: ModeKind::UnpairedReal,
                    zeta: None,
                    oscillatory: false,
                });
                idx += 1;
            }
        }
    }
    if idx < real_pool.len() {
        damping.push(ModeDamping {
            mode: ModeKind::UnpairedReal,
            zeta: None,
            oscillatory: false,
        });
    }

    Ok(PoleReport {
        discrete: discrete.to_vec(),
        continuous,
        unstable,
        damping,
    })
}
