//! Numerical inverse Laplace transform on the modified Talbot contour.
//!
//! The contour `s(θ) = (2M/t) ρ(θ)`, `ρ(θ) = −σ + μ θ cot(aθ) + iνθ`, wraps the
//! negative real axis. Only the upper branch `θ ∈ (0, π)` is sampled: for a
//! real-valued original, the lower branch contributes the complex conjugate,
//! so the inverse is twice the real part of the upper-branch integral.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::stats::LinearFit;
use crate::{Error, Result};

/// Contour shift `σ`.
pub const SIGMA: f64 = 0.6122;
/// Cotangent amplitude `μ`.
pub const MU: f64 = 0.5017;
/// Cotangent frequency.
pub const COT_FREQUENCY: f64 = 0.6407;
/// Imaginary slope `ν`.
pub const NU: f64 = 0.2645;

/// Default number of transform evaluations.
pub const DEFAULT_EVALUATIONS: usize = 9;

/// `ρ(θ)` of the modified Talbot contour; `ρ(0) = −σ + μ/a`.
pub fn rho(theta: f64) -> Complex64 {
    if theta == 0.0 {
        return Complex64::new(-SIGMA + MU / COT_FREQUENCY, 0.0);
    }
    let at = COT_FREQUENCY * theta;
    Complex64::new(-SIGMA + MU * theta / at.tan(), NU * theta)
}

/// `ρ′(θ)`.
pub fn rho_prime(theta: f64) -> Complex64 {
    if theta == 0.0 {
        return Complex64::new(0.0, NU);
    }
    let at = COT_FREQUENCY * theta;
    let sin = at.sin();
    Complex64::new(MU / at.tan() - MU * at / (sin * sin), NU)
}

/// Midpoint rule on the upper branch of the Talbot contour for one time.
#[derive(Debug, Clone, PartialEq)]
pub struct TalbotRule {
    evaluations: usize,
    t: f64,
    theta: Vec<f64>,
    nodes: Vec<Complex64>,
    weights: Vec<Complex64>,
}

impl TalbotRule {
    /// Builds the rule with `evaluations` nodes `s_j = (2M/t) ρ(θ_j)`,
    /// `θ_j = (j − ½)π/M`, and weights `e^{2Mρ(θ_j)} ρ′(θ_j) π/M`.
    pub fn new(evaluations: usize, t: f64) -> Result<Self> {
        if evaluations == 0 {
            return Err(Error::InvalidParameter("Talbot rule needs M ≥ 1".into()));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "inversion time must be positive, got {t}"
            )));
        }
        let m = evaluations as f64;
        let step = PI / m;
        let theta: Vec<f64> = (1..=evaluations).map(|j| (j as f64 - 0.5) * step).collect();
        let nodes = theta.iter().map(|&th| rho(th) * (2.0 * m / t)).collect();
        let weights = theta
            .iter()
            .map(|&th| (rho(th) * (2.0 * m)).exp() * rho_prime(th) * step)
            .collect();
        Ok(TalbotRule {
            evaluations,
            t,
            theta,
            nodes,
            weights,
        })
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Transform parameters at which `F` must be evaluated, all with `Im s > 0`.
    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    /// The complex sum `(2M/(iπt)) Σ w_j F(s_j)`; its real part is the
    /// inverse transform.
    pub fn combine(&self, values: &[Complex64]) -> Result<Complex64> {
        if values.len() != self.evaluations {
            return Err(Error::DimensionMismatch {
                expected: self.evaluations,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let sum: Complex64 = self
            .weights
            .iter()
            .zip(values)
            .map(|(w, f)| w * f)
            .sum();
        let scale = 2.0 * self.evaluations as f64 / (PI * self.t);
        Ok(sum * Complex64::new(0.0, -scale))
    }
}

/// Real-valued inverse `u(t) ≈ Re[(2/(it)) Σ ω_j F(s_j)]` from transform
/// values aligned with `rule.nodes()`.
pub fn invert(values: &[Complex64], rule: &TalbotRule) -> Result<f64> {
    Ok(rule.combine(values)?.re)
}

/// Inverts a transform given as a closure.
pub fn invert_fn<F>(transform: F, rule: &TalbotRule) -> Result<f64>
where
    F: Fn(Complex64) -> Complex64,
{
    let values: Vec<Complex64> = rule.nodes().iter().map(|&s| transform(s)).collect();
    invert(&values, rule)
}

/// One row of a Talbot convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub evaluations: usize,
    pub value: f64,
    /// Absolute difference from the reference inversion.
    pub error: f64,
}

/// Errors below this are treated as precision floor when fitting rates.
pub const PRECISION_FLOOR: f64 = 1e-12;

/// Inverts `transform` at time `t` for each `M` in `evaluations`, measuring
/// against a reference inversion with `max(M) + 3` nodes.
pub fn convergence_profile<F>(transform: F, t: f64, evaluations: &[usize]) -> Result<Vec<ProfileRow>>
where
    F: Fn(Complex64) -> Complex64,
{
    let top = *evaluations
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidParameter("empty list of Talbot sizes".into()))?;
    if evaluations.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("Talbot sizes must increase".into()));
    }
    let reference = invert_fn(&transform, &TalbotRule::new(top + 3, t)?)?;
    evaluations
        .iter()
        .map(|&m| {
            let value = invert_fn(&transform, &TalbotRule::new(m, t)?)?;
            Ok(ProfileRow {
                evaluations: m,
                value,
                error: (value - reference).abs(),
            })
        })
        .collect()
}

/// Least-squares slope of `log10(error)` against `M`, ignoring rows already
/// at the precision floor. `None` with fewer than two usable rows.
pub fn profile_slope(rows: &[ProfileRow]) -> Option<LinearFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.error > PRECISION_FLOOR)
        .map(|r| (r.evaluations as f64, r.error.log10()))
        .unzip();
    LinearFit::new(&xs, &ys)
}
