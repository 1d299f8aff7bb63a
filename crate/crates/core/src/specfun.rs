//! Modified Bessel functions of the second kind for complex argument, the
//! free-space Green's function of `D Δ − s`, and the lightning basis.
//!
//! `K_0` and `K_1` are computed in one of three regimes depending on `|z|`:
//!
//! - `|z| ≤ 2`: ascending series with the logarithmic terms,
//! - `2 < |z| < 25`: Temme's second continued fraction summed with Steed's
//!   algorithm (valid for complex `z` off the negative real axis),
//! - `|z| ≥ 25`: the Hankel asymptotic expansion, truncated at its smallest
//!   term.
//!
//! Higher orders follow from the upward recurrence
//! `K_{n+1} = K_{n-1} + (2n/z) K_n`, which is stable for `K` in the right
//! half-plane. All three regimes produce the exponentially scaled value
//! `e^z K_n(z)` first; the unscaled value is obtained by multiplying back.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, LN_2, PI};

use num_complex::Complex64;

use crate::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_RADIUS: f64 = 2.0;
const SERIES_RADIUS_MAX: f64 = 6.0;
const SERIES_CANCELLATION: f64 = 4.0;
const ASYMPTOTIC_RADIUS: f64 = 25.0;
const EPS: f64 = 1e-17;
/// Slack on `|arg z| ≤ π/2` for arguments produced by rounded square roots.
const BRANCH_SLACK: f64 = 1e-8;

/// A Laplace transform parameter together with the diffusivity it acts on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frequency {
    s: Complex64,
    diffusivity: f64,
    alpha: Complex64,
}

impl Frequency {
    pub fn new(s: Complex64, diffusivity: f64) -> Result<Self> {
        if !(diffusivity > 0.0 && diffusivity.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "diffusivity must be positive and finite, got {diffusivity}"
            )));
        }
        if s == Complex64::new(0.0, 0.0) || !s.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!(
                "transform parameter must be finite and nonzero, got {s}"
            )));
        }
        Ok(Frequency {
            s,
            diffusivity,
            alpha: (s / diffusivity).sqrt(),
        })
    }

    #[inline]
    pub fn s(&self) -> Complex64 {
        self.s
    }

    #[inline]
    pub fn diffusivity(&self) -> f64 {
        self.diffusivity
    }

    /// Principal square root of `s/D`; `Re α ≥ 0`.
    #[inline]
    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    /// `1 / (2πD)`, the common prefactor of every basis function.
    #[inline]
    pub fn prefactor(&self) -> f64 {
        1.0 / (2.0 * PI * self.diffusivity)
    }

    pub fn conj(&self) -> Frequency {
        Frequency {
            s: self.s.conj(),
            diffusivity: self.diffusivity,
            alpha: self.alpha.conj(),
        }
    }
}

fn check_argument(z: Complex64) -> Result<()> {
    if z.re == 0.0 && z.im == 0.0 {
        return Err(Error::BesselAtZero);
    }
    if !z.is_finite() || z.arg().abs() > FRAC_PI_2 + BRANCH_SLACK {
        return Err(Error::BesselBranch { re: z.re, im: z.im });
    }
    Ok(())
}

/// The ascending series loses about `e^{|z| + Re z}` relative to `K_0`, so
/// it stays usable well past `SERIES_RADIUS` near the imaginary axis, where
/// the continued fraction converges slowly.
fn in_series_regime(z: Complex64) -> bool {
    let r = z.norm();
    r <= SERIES_RADIUS || (r <= SERIES_RADIUS_MAX && r + z.re <= SERIES_CANCELLATION)
}

/// `(e^z K_0(z), e^z K_1(z))` for `z` already validated.
pub(crate) fn k01_scaled(z: Complex64) -> (Complex64, Complex64) {
    let r = z.norm();
    if in_series_regime(z) {
        let (k0, k1) = k01_series(z);
        let e = z.exp();
        (k0 * e, k1 * e)
    } else if r < ASYMPTOTIC_RADIUS {
        k01_continued_fraction(z)
    } else {
        (k_asymptotic(0.0, z), k_asymptotic(1.0, z))
    }
}

/// Unscaled `(K_0(z), K_1(z))` for `z` already validated.
pub(crate) fn k01(z: Complex64) -> (Complex64, Complex64) {
    if in_series_regime(z) {
        k01_series(z)
    } else {
        let (k0, k1) = k01_scaled(z);
        let e = (-z).exp();
        (k0 * e, k1 * e)
    }
}

/// `∫₀¹ K_0(c u) u du = (1 − c K_1(c)) / c²`.
///
/// Near the origin the difference is summed from the series of `c K_1(c) − 1`
/// to avoid cancellation.
pub(crate) fn ramp_integral_k0(c: Complex64) -> Complex64 {
    if c.norm() > 0.5 {
        let (_, k1) = k01(c);
        return (Complex64::new(1.0, 0.0) - c * k1) / (c * c);
    }
    // (1 − cK₁)/c² = −¼ Σ t^k/(k!(k+1)!) [2 log(c/2) − ψ(k+1) − ψ(k+2)], t = c²/4.
    let t = c * c * 0.25;
    let two_log = (c * 0.5).ln() * 2.0;
    let mut term = Complex64::new(1.0, 0.0);
    let mut harmonic = 0.0;
    let mut sum = term * (two_log + 2.0 * EULER_GAMMA - 1.0);
    for k in 1..60 {
        let kf = k as f64;
        harmonic += 1.0 / kf;
        term = term * t / (kf * (kf + 1.0));
        let psi = 2.0 * harmonic + 1.0 / (kf + 1.0) - 2.0 * EULER_GAMMA;
        let add = term * (two_log - psi);
        sum += add;
        if add.norm() < EPS * sum.norm() {
            break;
        }
    }
    sum * -0.25
}

/// Ascending series for `K_0`, `K_1` (unscaled).
fn k01_series(z: Complex64) -> (Complex64, Complex64) {
    let half = z * 0.5;
    let t = half * half;
    let log_term = half.ln() + EULER_GAMMA;

    // term_k = t^k / (k!)^2 for I_0; the K_0 correction weights it by H_k.
    let mut term0 = Complex64::new(1.0, 0.0);
    let mut i0 = term0;
    let mut harmonic_sum = Complex64::new(0.0, 0.0);
    // term1_k = t^k / (k! (k+1)!) for I_1 / (z/2); K_1 weights by ψ(k+1)+ψ(k+2).
    let mut term1 = Complex64::new(1.0, 0.0);
    let mut i1_series = term1;
    let mut psi_sum = term1 * (1.0 - 2.0 * EULER_GAMMA);
    let mut harmonic = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        harmonic += 1.0 / kf;
        term0 = term0 * t / (kf * kf);
        term1 = term1 * t / (kf * (kf + 1.0));
        i0 += term0;
        harmonic_sum += term0 * harmonic;
        i1_series += term1;
        // ψ(k+1) + ψ(k+2) = 2H_k + 1/(k+1) − 2γ
        psi_sum += term1 * (2.0 * harmonic + 1.0 / (kf + 1.0) - 2.0 * EULER_GAMMA);
        if term0.norm() < EPS * i0.norm() && term1.norm() < EPS * i1_series.norm() {
            break;
        }
    }
    let k0 = -log_term * i0 + harmonic_sum;
    let i1 = half * i1_series;
    let k1 = z.inv() + half.ln() * i1 - z * 0.25 * psi_sum;
    (k0, k1)
}

/// Temme's CF2 by Steed's method; returns scaled `K_0`, `K_1`.
fn k01_continued_fraction(z: Complex64) -> (Complex64, Complex64) {
    let one = Complex64::new(1.0, 0.0);
    let mut b = (one + z) * 2.0;
    let mut d = b.inv();
    let mut h = d;
    let mut delh = d;
    let mut q1 = Complex64::new(0.0, 0.0);
    let mut q2 = one;
    let a1 = 0.25;
    let mut q = Complex64::new(a1, 0.0);
    let mut c = a1;
    let mut a = -a1;
    let mut s = one + q * delh;
    for i in 1..10_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += qnew * c;
        b += 2.0;
        d = (b + d * a).inv();
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if dels.norm() < EPS * s.norm() {
            break;
        }
    }
    h *= a1;
    let k0 = (Complex64::new(FRAC_PI_2, 0.0) / z).sqrt() / s;
    let k1 = k0 * (z + 0.5 - h) / z;
    (k0, k1)
}

/// Hankel expansion of `e^z K_ν(z)`, summed until the terms stop shrinking.
fn k_asymptotic(nu: f64, z: Complex64) -> Complex64 {
    let mu = 4.0 * nu * nu;
    let zi = z.inv() * 0.125;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let next = term * zi * ((mu - odd * odd) / k as f64);
        let size = next.norm();
        if size >= last {
            break;
        }
        term = next;
        sum += term;
        last = size;
        if size < EPS * sum.norm() {
            break;
        }
    }
    (Complex64::new(FRAC_PI_2, 0.0) / z).sqrt() * sum
}

/// Fills `out[n] = K_n(z)` (or `e^z K_n(z)` when `scaled`) for
/// `n = 0..out.len()`.
pub fn bessel_k_sequence_into(z: Complex64, scaled: bool, out: &mut [Complex64]) -> Result<()> {
    check_argument(z)?;
    if out.is_empty() {
        return Ok(());
    }
    fill_sequence(z, scaled, out);
    for (n, v) in out.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::BesselOverflow {
                order: n as u32,
                re: z.re,
                im: z.im,
            });
        }
    }
    Ok(())
}

/// Unchecked sequence fill; callers have validated `z`.
pub(crate) fn fill_sequence(z: Complex64, scaled: bool, out: &mut [Complex64]) {
    let (k0, k1) = if scaled { k01_scaled(z) } else { k01(z) };
    out[0] = k0;
    if out.len() > 1 {
        out[1] = k1;
    }
    let two_over_z = z.inv() * 2.0;
    for n in 1..out.len().saturating_sub(1) {
        out[n + 1] = out[n - 1] + two_over_z * (n as f64) * out[n];
    }
}

/// Orders `0..=max_order` of `K_n(z)` as a vector.
pub fn bessel_k_sequence(max_order: u32, z: Complex64, scaled: bool) -> Result<Vec<Complex64>> {
    let mut out = vec![Complex64::new(0.0, 0.0); max_order as usize + 1];
    bessel_k_sequence_into(z, scaled, &mut out)?;
    Ok(out)
}

/// `K_n(z)` for integer `n ≥ 0` and `|arg z| ≤ π/2`.
///
/// With `scaled`, returns `e^z K_n(z)`, which stays finite for large `|z|`.
pub fn bessel_k(n: u32, z: Complex64, scaled: bool) -> Result<Complex64> {
    match n {
        0 | 1 => {
            check_argument(z)?;
            let (k0, k1) = k01_scaled(z);
            let v = if n == 0 { k0 } else { k1 };
            let v = if scaled { v } else { v * (-z).exp() };
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::BesselOverflow { order: n, re: z.re, im: z.im })
            }
        }
        _ => Ok(bessel_k_sequence(n, z, scaled)?[n as usize]),
    }
}

/// Free-space Green's function `K_0(α|z−ξ|) / (2πD)`.
pub fn greens(z: Complex64, xi: Complex64, freq: &Frequency) -> Result<Complex64> {
    let r = (z - xi).norm();
    if r == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    Ok(bessel_k(0, freq.alpha() * r, false)? * freq.prefactor())
}

/// Gradient `(∂G/∂x, ∂G/∂y)` of the Green's function in its first argument.
pub fn greens_gradient(
    z: Complex64,
    xi: Complex64,
    freq: &Frequency,
) -> Result<(Complex64, Complex64)> {
    psi_gradient(0, z, xi, freq)
}

/// Regular part `R(s) = lim (G + log|z−ξ|/(2πD))` of the Green's function.
pub fn greens_regular_part(freq: &Frequency) -> Complex64 {
    (Complex64::new(LN_2 - EULER_GAMMA, 0.0) - freq.alpha().ln()) * freq.prefactor()
}

/// Lightning basis function
/// `ψ_k(z, ξ) = K_{|k|}(α|z−ξ|) ((z−ξ)/|z−ξ|)^k / (2πD)`.
pub fn psi(k: i32, z: Complex64, xi: Complex64, freq: &Frequency) -> Result<Complex64> {
    let w = z - xi;
    let r = w.norm();
    if r == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    let kn = bessel_k(k.unsigned_abs(), freq.alpha() * r, false)?;
    Ok(kn * (w / r).powi(k) * freq.prefactor())
}

/// Analytic gradient of [`psi`] with respect to `z = x + iy`.
///
/// Uses `(∂x + i∂y)[K_n e^{inφ}] = −α K_{n+1} e^{i(n+1)φ}` and
/// `(∂x − i∂y)[K_n e^{inφ}] = −α K_{n−1} e^{i(n−1)φ}`.
pub fn psi_gradient(
    k: i32,
    z: Complex64,
    xi: Complex64,
    freq: &Frequency,
) -> Result<(Complex64, Complex64)> {
    let w = z - xi;
    let r = w.norm();
    if r == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    let top = k.unsigned_abs() + 1;
    let ks = bessel_k_sequence(top, freq.alpha() * r, false)?;
    let unit = w / r;
    let alpha = freq.alpha();
    let raise = -alpha * ks[(k + 1).unsigned_abs() as usize] * unit.powi(k + 1);
    let lower = -alpha * ks[(k - 1).unsigned_abs() as usize] * unit.powi(k - 1);
    let scale = freq.prefactor();
    let dx = (raise + lower) * 0.5 * scale;
    let dy = (raise - lower) / Complex64::new(0.0, 2.0) * scale;
    Ok((dx, dy))
}
