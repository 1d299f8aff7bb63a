//! Lightning solver for the exterior modified Helmholtz problem
//! `D Δû_h − s û_h = 0` with Dirichlet data `û_h = f̃` on the bodies.
//!
//! The homogeneous solution is expanded as
//!
//! ```text
//! û_h(z) = Σ_j (a_j ψ₋₁(z, z_j) + b_j ψ₊₁(z, z_j)) + Σ_* Σ_{k=−N₂..N₂} c_{*,k} ψ_k(z, z_*)
//! ```
//!
//! with Newman poles `z_j` clustered along the inward bisector of every
//! corner and one Runge expansion per center `z_*`. Coefficients minimize the
//! collocation residual in the least-squares sense after column scaling.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{LN_10, PI, SQRT_2};

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::geometry::{boundary_grid, Body, BoundaryPoint, Scene};
use crate::heat::{particular_gradient, particular_transform};
use crate::linalg::{column_scale, lstsq, ComplexMatrix};
use crate::specfun::{fill_sequence, k01, Frequency};
use crate::stats::LinearFit;
use crate::{Error, Result};

/// Collocation points per basis function.
pub const COLLOCATION_FACTOR: usize = 10;
/// Oversampling of the error grid relative to the collocation grid.
pub const OVERSAMPLE_FACTOR: usize = 3;
/// Largest phase change `N₂·gap/dist` of a Runge term across the widest
/// collocation gap, the one straddling an edge midpoint.
pub const MIDPOINT_PHASE: f64 = 1.5;

/// Runge order `N₂ = ⌈3.5√m⌉`.
pub fn runge_order(m: usize) -> usize {
    (3.5 * (m as f64).sqrt()).ceil() as usize
}

/// Tapered clustering rate `σ = π√(2(2−β)β)` for a corner with fluid angle
/// `βπ`.
pub fn newman_sigma(beta: f64) -> f64 {
    PI * (2.0 * (2.0 - beta) * beta).sqrt()
}

/// Collocation clustering rate `√(2(m+1))π`, the largest `σ√(m+1)`.
pub fn collocation_rate(m: usize) -> f64 {
    (2.0 * (m as f64 + 1.0)).sqrt() * PI
}

/// Tapered distances `C e^{−σ(√(m+1)−√j)}`, `j = 1..m`, with
/// `C = h_min/√2`. Increasing in `j`.
pub fn newman_distances(m: usize, beta: f64, h_min: f64) -> Vec<f64> {
    let sigma = newman_sigma(beta);
    let c = h_min / SQRT_2;
    let top = (m as f64 + 1.0).sqrt();
    (1..=m).map(|j| c * (-sigma * (top - (j as f64).sqrt())).exp()).collect()
}

/// Newman poles of one corner.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerPoles {
    pub body: usize,
    pub vertex: usize,
    /// Retained poles ordered from the vertex outward.
    pub poles: Vec<Complex64>,
}

/// Pole positions for every corner of a body, plus how many were removed
/// for sitting within `2ε` of the vertex.
pub fn place_newman_poles(body: &Body, m: usize, h_min: f64) -> (Vec<Vec<Complex64>>, usize) {
    let mut pruned = 0;
    let corners = body
        .vertices()
        .iter()
        .zip(body.bisectors())
        .zip(body.corner_angles())
        .map(|((&v, &dir), &beta)| {
            let mut poles = Vec::with_capacity(m);
            for d in newman_distances(m, beta, h_min) {
                if d < 2.0 * f64::EPSILON {
                    pruned += 1;
                } else {
                    poles.push(v + dir * d);
                }
            }
            poles
        })
        .collect();
    (corners, pruned)
}

/// Singular and smooth parts of the basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PolePlan {
    m: usize,
    corners: Vec<CornerPoles>,
    runge_centers: Vec<Complex64>,
    runge_order: usize,
    pruned: usize,
    outside: usize,
    flat_corners: usize,
}

impl PolePlan {
    /// Places `m` poles per corner and one Runge expansion of order
    /// `⌈3.5√m⌉` per center. Without explicit centers every body gets one at
    /// its centroid.
    pub fn new(scene: &Scene, m: usize, centers: Option<&[Complex64]>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("need at least one pole per corner".into()));
        }
        let runge_centers: Vec<Complex64> = match centers {
            Some(c) => c.to_vec(),
            None => scene.bodies().iter().map(Body::centroid).collect(),
        };
        for (i, c) in runge_centers.iter().enumerate() {
            if scene.body_containing(*c).is_none() {
                return Err(Error::InvalidScene(format!("Runge center {i} at {c} is not inside a body")));
            }
        }
        let mut corners = Vec::new();
        let (mut pruned, mut outside, mut flat_corners) = (0, 0, 0);
        for (bi, body) in scene.bodies().iter().enumerate() {
            let (per_corner, p) = place_newman_poles(body, m, scene.h_min());
            pruned += p;
            flat_corners += body.flat_vertices().count();
            for (vi, poles) in per_corner.into_iter().enumerate() {
                let before = poles.len();
                let poles: Vec<Complex64> = poles.into_iter().filter(|z| body.contains(*z)).collect();
                outside += before - poles.len();
                corners.push(CornerPoles {
                    body: bi,
                    vertex: vi,
                    poles,
                });
            }
        }
        Ok(PolePlan {
            m,
            corners,
            runge_centers,
            runge_order: runge_order(m),
            pruned,
            outside,
            flat_corners,
        })
    }

    pub fn poles_per_corner(&self) -> usize {
        self.m
    }

    pub fn corners(&self) -> &[CornerPoles] {
        &self.corners
    }

    pub fn newman_poles(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.corners.iter().flat_map(|c| c.poles.iter().copied())
    }

    /// `N₁`, the number of retained Newman poles.
    pub fn newman_count(&self) -> usize {
        self.corners.iter().map(|c| c.poles.len()).sum()
    }

    pub fn runge_centers(&self) -> &[Complex64] {
        &self.runge_centers
    }

    pub fn runge_order(&self) -> usize {
        self.runge_order
    }

    /// Poles dropped for lying within `2ε` of their vertex. Nonzero means
    /// larger `m` will not improve accuracy.
    pub fn pruned(&self) -> usize {
        self.pruned
    }

    /// Poles dropped because the bisector left the body (very thin bodies).
    pub fn outside(&self) -> usize {
        self.outside
    }

    /// Corners with `β = 1`, whose poles resolve no singularity.
    pub fn flat_corners(&self) -> usize {
        self.flat_corners
    }

    /// Total number of basis functions `N = 2N₁ + (2N₂ + 1)·centers`.
    pub fn basis_size(&self) -> usize {
        2 * self.newman_count() + (2 * self.runge_order + 1) * self.runge_centers.len()
    }

    fn scratch(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.runge_order + 2]
    }

    /// Basis values at `z` in column order.
    fn fill_values(&self, z: Complex64, freq: &Frequency, ks: &mut [Complex64], out: &mut [Complex64]) -> Result<()> {
        let pref = freq.prefactor();
        let alpha = freq.alpha();
        let mut col = 0;
        for p in self.newman_poles() {
            let w = z - p;
            let r = w.norm();
            if r == 0.0 {
                return Err(Error::CoincidentPoints);
            }
            let u = w / r;
            let k1 = k01(alpha * r).1 * pref;
            out[col] = k1 * u.conj();
            out[col + 1] = k1 * u;
            col += 2;
        }
        let n2 = self.runge_order;
        for &c in &self.runge_centers {
            let w = z - c;
            let r = w.norm();
            if r == 0.0 {
                return Err(Error::CoincidentPoints);
            }
            let u = w / r;
            let ks = &mut ks[..=n2];
            fill_sequence(alpha * r, false, ks);
            if !ks[n2].is_finite() {
                let a = alpha * r;
                return Err(Error::BesselOverflow { order: n2 as u32, re: a.re, im: a.im });
            }
            let block = &mut out[col..col + 2 * n2 + 1];
            block[n2] = ks[0] * pref;
            let mut up = Complex64::new(1.0, 0.0);
            for k in 1..=n2 {
                up *= u;
                let v = ks[k] * pref;
                block[n2 + k] = v * up;
                block[n2 - k] = v * up.conj();
            }
            col += 2 * n2 + 1;
        }
        Ok(())
    }

    /// Basis gradients `(∂x, ∂y)` at `z` in column order.
    fn fill_gradients(
        &self,
        z: Complex64,
        freq: &Frequency,
        ks: &mut [Complex64],
        dx: &mut [Complex64],
        dy: &mut [Complex64],
    ) -> Result<()> {
        let pref = freq.prefactor();
        let alpha = freq.alpha();
        let minus_i_half = Complex64::new(0.0, -0.5);
        // (∂x + i∂y)[K_|k| u^k] = −α K_|k+1| u^{k+1}, (∂x − i∂y)[…] = −α K_|k−1| u^{k−1}.
        let split = |raise: Complex64, lower: Complex64| ((raise + lower) * 0.5, (raise - lower) * minus_i_half);
        let mut col = 0;
        let mut k012 = [Complex64::new(0.0, 0.0); 3];
        for p in self.newman_poles() {
            let w = z - p;
            let r = w.norm();
            if r == 0.0 {
                return Err(Error::CoincidentPoints);
            }
            let u = w / r;
            fill_sequence(alpha * r, false, &mut k012);
            let s0 = -alpha * pref * k012[0];
            let s2 = -alpha * pref * k012[2];
            // k = −1: raise to u⁰, lower to u⁻².
            let (gx, gy) = split(s0, s2 * (u.conj() * u.conj()));
            dx[col] = gx;
            dy[col] = gy;
            // k = +1: raise to u², lower to u⁰.
            let (gx, gy) = split(s2 * (u * u), s0);
            dx[col + 1] = gx;
            dy[col + 1] = gy;
            col += 2;
        }
        let n2 = self.runge_order;
        for &c in &self.runge_centers {
            let w = z - c;
            let r = w.norm();
            if r == 0.0 {
                return Err(Error::CoincidentPoints);
            }
            let u = w / r;
            let ks = &mut ks[..=n2 + 1];
            fill_sequence(alpha * r, false, ks);
            let scale = -alpha * pref;
            // pw[j] = u^j for j = 0..=n2+1
            let mut up = Complex64::new(1.0, 0.0);
            let mut pw = Vec::with_capacity(n2 + 2);
            for _ in 0..=n2 + 1 {
                pw.push(up);
                up *= u;
            }
            let upow = |k: i64| -> Complex64 {
                if k >= 0 {
                    pw[k as usize]
                } else {
                    pw[(-k) as usize].conj()
                }
            };
            for (idx, k) in (-(n2 as i64)..=n2 as i64).enumerate() {
                let raise = scale * ks[(k + 1).unsigned_abs() as usize] * upow(k + 1);
                let lower = scale * ks[(k - 1).unsigned_abs() as usize] * upow(k - 1);
                let (gx, gy) = split(raise, lower);
                dx[col + idx] = gx;
                dy[col + idx] = gy;
            }
            col += 2 * n2 + 1;
        }
        Ok(())
    }
}

/// Collocation grid: `10N` points apportioned evenly over the half-edges
/// (rounded up), clustered with rate `√(2(m+1))π`. The count is raised when
/// needed so the Runge terms stay resolved near edge midpoints.
pub fn place_collocation(scene: &Scene, plan: &PolePlan) -> Result<Vec<BoundaryPoint>> {
    if plan.basis_size() == 0 {
        return Err(Error::InvalidParameter("collocation needs a nonempty basis".into()));
    }
    boundary_grid(scene, collocation_per_half_edge(scene, plan), collocation_rate(plan.m))
}

/// Points per half-edge: `⌈10N / (2 N_v)⌉`, or more if an edge midpoint is
/// under-resolved.
pub fn collocation_per_half_edge(scene: &Scene, plan: &PolePlan) -> usize {
    let half_edges = 2 * scene.vertex_count();
    let base = (COLLOCATION_FACTOR * plan.basis_size()).div_ceil(half_edges.max(1));
    base.max(midpoint_floor(scene, plan))
}

/// Smallest per-half-edge count whose midpoint gap `½L(1 − e^{−ρ/n})` keeps
/// `N₂·gap/dist ≤ MIDPOINT_PHASE`, `dist` being the midpoint's distance to the
/// nearest Runge center.
fn midpoint_floor(scene: &Scene, plan: &PolePlan) -> usize {
    if plan.runge_order == 0 || plan.runge_centers.is_empty() {
        return 0;
    }
    let rho = collocation_rate(plan.m);
    let mut need = 0.0f64;
    for body in scene.bodies() {
        let v = body.vertices();
        for i in 0..v.len() {
            let (a, b) = (v[i], v[(i + 1) % v.len()]);
            let mid = (a + b) * 0.5;
            let half = 0.5 * (b - a).norm();
            let dist = plan.runge_centers.iter().map(|c| (mid - c).norm()).fold(f64::INFINITY, f64::min);
            let gap = MIDPOINT_PHASE * dist / (plan.runge_order as f64 * half);
            if gap < 1.0 {
                need = need.max(-rho / (1.0 - gap).ln());
            }
        }
    }
    need.ceil() as usize
}

/// Error-measurement grid: three times the collocation count, clustered with
/// rate `√(2(m+1))π + ln 10`.
pub fn oversampled_grid(scene: &Scene, plan: &PolePlan) -> Result<Vec<BoundaryPoint>> {
    if plan.basis_size() == 0 {
        return Err(Error::InvalidParameter("oversampling needs a nonempty basis".into()));
    }
    let per = OVERSAMPLE_FACTOR * collocation_per_half_edge(scene, plan);
    boundary_grid(scene, per, collocation_rate(plan.m) + LN_10)
}

/// Boundary term `f̃(z) = f(z)/s − û_p(z)` at boundary points.
pub fn boundary_term(scene: &Scene, freq: &Frequency, grid: &[BoundaryPoint]) -> Result<Vec<Complex64>> {
    let points: Vec<Complex64> = grid.iter().map(|p| p.point).collect();
    let particular = particular_transform(scene, freq, &points)?;
    let inv_s = freq.s().inv();
    Ok(grid
        .iter()
        .zip(particular)
        .map(|(p, up)| inv_s * scene.boundary_value(p.body, p.point) - up)
        .collect())
}

/// Collocation matrix `A_ij = ψ_j(z_i)` and right-hand side `f̃(z_i)`.
pub fn assemble(
    scene: &Scene,
    freq: &Frequency,
    plan: &PolePlan,
    grid: &[BoundaryPoint],
) -> Result<(ComplexMatrix, Vec<Complex64>)> {
    let n = plan.basis_size();
    let mut a = ComplexMatrix::zeros(grid.len(), n);
    let mut ks = plan.scratch();
    for (i, p) in grid.iter().enumerate() {
        plan.fill_values(p.point, freq, &mut ks, a.row_mut(i))?;
    }
    let rhs = boundary_term(scene, freq, grid)?;
    Ok((a, rhs))
}

/// Sup-norm boundary mismatch, relative to `sup|f̃|` when that is nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryError {
    pub value: f64,
    /// `false` when the data vanished and `value` is an absolute error.
    pub relative: bool,
}

impl BoundaryError {
    pub fn from_samples(mismatch: impl Iterator<Item = f64>, scale: f64) -> Self {
        let sup = mismatch.fold(0.0, f64::max);
        if scale > 0.0 {
            BoundaryError {
                value: sup / scale,
                relative: true,
            }
        } else {
            BoundaryError {
                value: sup,
                relative: false,
            }
        }
    }
}

/// Values of `û_h − f̃` and `f̃` on the oversampled grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub mismatch: Vec<Complex64>,
    pub data: Vec<Complex64>,
}

/// A solved transform problem at one `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    freq: Frequency,
    plan: PolePlan,
    coefficients: Vec<Complex64>,
    boundary_error: BoundaryError,
    residual_norm: f64,
    collocation_residual: f64,
    rank: usize,
    trace: Option<BoundaryTrace>,
}

impl Expansion {
    /// The identically zero expansion on `plan`.
    pub fn zero(freq: Frequency, plan: PolePlan) -> Self {
        let n = plan.basis_size();
        Expansion {
            freq,
            plan,
            coefficients: vec![Complex64::new(0.0, 0.0); n],
            boundary_error: BoundaryError {
                value: 0.0,
                relative: false,
            },
            residual_norm: 0.0,
            collocation_residual: 0.0,
            rank: 0,
            trace: None,
        }
    }

    /// An expansion with given coefficients (column order of [`assemble`]).
    pub fn with_coefficients(freq: Frequency, plan: PolePlan, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != plan.basis_size() {
            return Err(Error::DimensionMismatch {
                expected: plan.basis_size(),
                got: coefficients.len(),
            });
        }
        let mut e = Expansion::zero(freq, plan);
        e.coefficients = coefficients;
        Ok(e)
    }

    pub fn frequency(&self) -> &Frequency {
        &self.freq
    }

    pub fn plan(&self) -> &PolePlan {
        &self.plan
    }

    /// All coefficients in column order.
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// `(a_j, b_j)` per Newman pole.
    pub fn newman_coefficients(&self) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        self.coefficients[..2 * self.plan.newman_count()]
            .chunks_exact(2)
            .map(|c| (c[0], c[1]))
    }

    /// `c_k`, `k = −N₂..N₂`, of the Runge expansion about center `i`.
    pub fn runge_coefficients(&self, i: usize) -> &[Complex64] {
        let width = 2 * self.plan.runge_order + 1;
        let start = 2 * self.plan.newman_count() + i * width;
        &self.coefficients[start..start + width]
    }

    pub fn boundary_error(&self) -> BoundaryError {
        self.boundary_error
    }

    /// `‖Ax − b‖₂` of the collocation system.
    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    /// Largest collocation residual, relative like the boundary error.
    pub fn collocation_residual(&self) -> f64 {
        self.collocation_residual
    }

    /// Numerical rank found by the pivoted factorization.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Mismatch and data on the oversampled grid, when computed.
    pub fn trace(&self) -> Option<&BoundaryTrace> {
        self.trace.as_ref()
    }

    /// `û_h(z)`.
    pub fn value(&self, z: Complex64) -> Result<Complex64> {
        if self.coefficients.is_empty() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let mut row = vec![Complex64::new(0.0, 0.0); self.coefficients.len()];
        let mut ks = self.plan.scratch();
        self.value_with(z, &mut ks, &mut row)
    }

    fn value_with(&self, z: Complex64, ks: &mut [Complex64], row: &mut [Complex64]) -> Result<Complex64> {
        self.plan.fill_values(z, &self.freq, ks, row)?;
        Ok(row.iter().zip(&self.coefficients).map(|(p, c)| p * c).sum())
    }

    /// `(∂x û_h, ∂y û_h)` at `z`.
    pub fn gradient(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let n = self.coefficients.len();
        if n == 0 {
            return Ok((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)));
        }
        let mut dx = vec![Complex64::new(0.0, 0.0); n];
        let mut dy = dx.clone();
        let mut ks = self.plan.scratch();
        self.plan.fill_gradients(z, &self.freq, &mut ks, &mut dx, &mut dy)?;
        let gx = dx.iter().zip(&self.coefficients).map(|(p, c)| p * c).sum();
        let gy = dy.iter().zip(&self.coefficients).map(|(p, c)| p * c).sum();
        Ok((gx, gy))
    }

    /// Values at many points with reused scratch space.
    pub fn values(&self, points: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.coefficients.is_empty() {
            return Ok(vec![Complex64::new(0.0, 0.0); points.len()]);
        }
        let mut row = vec![Complex64::new(0.0, 0.0); self.coefficients.len()];
        let mut ks = self.plan.scratch();
        points.iter().map(|&z| self.value_with(z, &mut ks, &mut row)).collect()
    }

    /// Linear combination `k·self + other` on a shared plan.
    pub fn combine(&self, k: Complex64, other: &Expansion) -> Result<Expansion> {
        if self.plan != other.plan || self.freq != other.freq {
            return Err(Error::InvalidParameter("expansions do not share a plan".into()));
        }
        let coefficients = self
            .coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(a, b)| a * k + b)
            .collect();
        Expansion::with_coefficients(self.freq, self.plan.clone(), coefficients)
    }
}

/// `û_h` at each point; `None` inside a body or where evaluation fails.
pub fn evaluate(exp: &Expansion, scene: &Scene, points: &[Complex64]) -> Vec<Option<Complex64>> {
    let n = exp.coefficients.len();
    let mut row = vec![Complex64::new(0.0, 0.0); n];
    let mut ks = exp.plan.scratch();
    points
        .iter()
        .map(|&z| {
            if scene.body_containing(z).is_some() {
                None
            } else if n == 0 {
                Some(Complex64::new(0.0, 0.0))
            } else {
                exp.value_with(z, &mut ks, &mut row).ok()
            }
        })
        .collect()
}

/// `∇û_h` at each point; `None` inside a body or where evaluation fails.
pub fn evaluate_gradient(exp: &Expansion, scene: &Scene, points: &[Complex64]) -> Vec<Option<(Complex64, Complex64)>> {
    points
        .iter()
        .map(|&z| {
            if scene.body_containing(z).is_some() {
                None
            } else {
                exp.gradient(z).ok()
            }
        })
        .collect()
}

/// Mismatch `û_h + û_p − f/s` on the oversampled grid.
pub fn boundary_trace(exp: &Expansion, scene: &Scene) -> Result<(BoundaryTrace, BoundaryError)> {
    if scene.bodies().is_empty() {
        let trace = BoundaryTrace {
            mismatch: Vec::new(),
            data: Vec::new(),
        };
        return Ok((trace, BoundaryError { value: 0.0, relative: false }));
    }
    let grid = oversampled_grid(scene, &exp.plan)?;
    let points: Vec<Complex64> = grid.iter().map(|p| p.point).collect();
    let data = boundary_term(scene, &exp.freq, &grid)?;
    let values = exp.values(&points)?;
    let mismatch: Vec<Complex64> = values.iter().zip(&data).map(|(v, d)| v - d).collect();
    let scale = data.iter().fold(0.0f64, |m, d| m.max(d.norm()));
    let err = BoundaryError::from_samples(mismatch.iter().map(|v| v.norm()), scale);
    Ok((BoundaryTrace { mismatch, data }, err))
}

/// Relative `E∞[û]` on the oversampled grid.
pub fn boundary_error(exp: &Expansion, scene: &Scene) -> Result<BoundaryError> {
    Ok(boundary_trace(exp, scene)?.1)
}

/// Builds the plan and collocation grid, solves the least-squares system and
/// measures the boundary error.
pub fn solve_transform(scene: &Scene, freq: &Frequency, m: usize, centers: Option<&[Complex64]>) -> Result<Expansion> {
    let plan = PolePlan::new(scene, m, centers)?;
    solve_with_plan(scene, freq, plan)
}

/// [`solve_transform`] with a prepared plan.
pub fn solve_with_plan(scene: &Scene, freq: &Frequency, plan: PolePlan) -> Result<Expansion> {
    if (freq.diffusivity() - scene.diffusivity()).abs() > 0.0 {
        return Err(Error::InvalidParameter("frequency and scene disagree on the diffusivity".into()));
    }
    if plan.basis_size() == 0 {
        return Ok(Expansion::zero(*freq, plan));
    }
    let grid = place_collocation(scene, &plan)?;
    let (a, rhs) = assemble(scene, freq, &plan, &grid)?;
    let scaling = column_scale(&a);
    drop(a);
    let mut sol = lstsq(&scaling.matrix, &rhs)?;
    let fitted = scaling.matrix.mul_vec(&sol.x);
    drop(scaling.matrix);
    for (x, f) in sol.x.iter_mut().zip(&scaling.factors) {
        *x /= *f;
    }
    let rhs_scale = rhs.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let colloc = fitted.iter().zip(&rhs).fold(0.0f64, |m, (f, b)| m.max((f - b).norm()));
    let mut exp = Expansion::with_coefficients(*freq, plan, sol.x)?;
    exp.residual_norm = sol.residual_norm;
    exp.rank = sol.rank;
    exp.collocation_residual = if rhs_scale > 0.0 { colloc / rhs_scale } else { colloc };
    let (trace, err) = boundary_trace(&exp, scene)?;
    exp.boundary_error = err;
    exp.trace = Some(trace);
    Ok(exp)
}

/// Total gradient `∇(û_h + û_p)` at a fluid point.
pub fn total_gradient(exp: &Expansion, scene: &Scene, z: Complex64) -> Result<(Complex64, Complex64)> {
    let (hx, hy) = exp.gradient(z)?;
    let (px, py) = particular_gradient(scene, &exp.freq, z)?;
    Ok((hx + px, hy + py))
}

/// One step of a convergence sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub m: usize,
    pub basis_size: usize,
    pub error: f64,
    pub pruned: usize,
}

/// Result of [`convergence_sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    /// Index of the row after which the error stopped improving, if the
    /// sweep ended early.
    pub stagnated_at: Option<usize>,
}

/// Rows that count as stagnated: the error must fall by this factor within
/// [`STAGNATION_PATIENCE`] steps.
pub const STAGNATION_FACTOR: f64 = 0.5;
pub const STAGNATION_PATIENCE: usize = 2;

impl Sweep {
    /// Rows up to and including the best error before stagnation.
    pub fn converging_rows(&self) -> &[SweepRow] {
        let end = match self.stagnated_at {
            Some(i) => i + 1,
            None => self.rows.len(),
        };
        &self.rows[..end]
    }

    /// `log₁₀ E∞` against `√N` over the converging rows.
    pub fn fit(&self) -> Option<LinearFit> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .converging_rows()
            .iter()
            .filter(|r| r.error > 0.0)
            .map(|r| ((r.basis_size as f64).sqrt(), r.error.log10()))
            .unzip();
        LinearFit::new(&xs, &ys)
    }

    pub fn best(&self) -> Option<&SweepRow> {
        self.rows.iter().min_by(|a, b| a.error.total_cmp(&b.error))
    }
}

/// Solves for each `m` in increasing order, stopping once the error fails
/// to halve for two consecutive steps.
pub fn convergence_sweep(
    scene: &Scene,
    freq: &Frequency,
    ms: &[usize],
    centers: Option<&[Complex64]>,
) -> Result<Sweep> {
    convergence_sweep_with(scene, freq, ms, centers, |_| {})
}

/// [`convergence_sweep`] with a callback after each solve.
pub fn convergence_sweep_with(
    scene: &Scene,
    freq: &Frequency,
    ms: &[usize],
    centers: Option<&[Complex64]>,
    mut progress: impl FnMut(&SweepRow),
) -> Result<Sweep> {
    if ms.is_empty() || ms.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("sweep needs increasing m values".into()));
    }
    let mut rows: Vec<SweepRow> = Vec::new();
    let mut best = f64::INFINITY;
    let mut best_index = 0;
    for &m in ms {
        let exp = solve_transform(scene, freq, m, centers)?;
        let row = SweepRow {
            m,
            basis_size: exp.plan.basis_size(),
            error: exp.boundary_error.value,
            pruned: exp.plan.pruned,
        };
        progress(&row);
        rows.push(row);
        if row.error < STAGNATION_FACTOR * best || best == f64::INFINITY {
            best = row.error;
            best_index = rows.len() - 1;
        } else if rows.len() - 1 - best_index >= STAGNATION_PATIENCE {
            return Ok(Sweep {
                rows,
                stagnated_at: Some(best_index),
            });
        }
    }
    Ok(Sweep {
        rows,
        stagnated_at: None,
    })
}
