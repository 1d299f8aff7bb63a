//! Time-domain solutions: particular solutions, Talbot assembly of fields,
//! boundary errors after inversion, and boundary fluxes.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::exec::Executor;
use crate::geometry::{Polygon, Scene, Source};
use crate::helmholtz::{solve_transform, total_gradient, BoundaryError, Expansion};
use crate::ltinv::TalbotRule;
use crate::quadrature::{dyadic_panels, panels_toward, GaussLegendre};
use crate::specfun::{greens, greens_gradient, k01, ramp_integral_k0, Frequency};
use crate::{Error, Result};

/// Default poles per corner.
pub const DEFAULT_POLES: usize = 90;

/// Gauss–Legendre order for source-region integrals.
const REGION_ORDER: usize = 16;

/// Solver parameters shared by the time-domain drivers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveParams {
    /// Newman poles per corner.
    pub m: usize,
    /// Talbot evaluations `M`.
    pub evaluations: usize,
    /// Runge centers; `None` puts one at each body centroid.
    pub runge_centers: Option<Vec<Complex64>>,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            m: DEFAULT_POLES,
            evaluations: crate::ltinv::DEFAULT_EVALUATIONS,
            runge_centers: None,
        }
    }
}

impl SolveParams {
    pub fn new(m: usize, evaluations: usize) -> Self {
        SolveParams {
            m,
            evaluations,
            runge_centers: None,
        }
    }

    pub fn with_centers(mut self, centers: Vec<Complex64>) -> Self {
        self.runge_centers = Some(centers);
        self
    }

    fn centers(&self) -> Option<&[Complex64]> {
        self.runge_centers.as_deref()
    }
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Panels along the segment `a → b` refined toward the foot of `z`, and no
/// wider than a fraction of the local oscillation length `1/|α|`.
fn segment_panels(a: Complex64, b: Complex64, z: Complex64, alpha: Complex64) -> Vec<(f64, f64)> {
    let d = b - a;
    let len = d.norm();
    let foot = (((z - a) * d.conj()).re / (len * len)).clamp(0.0, 1.0);
    let gap = (a + d * foot - z).norm();
    let waves = (alpha.norm() * len / 2.0).ceil().max(1.0);
    panels_toward(foot, (gap / len).max(1e-15), 0.5f64.min(1.0 / waves))
}

/// `∫_P G(z, ξ) dξ` by the signed fan of triangles `(z, v_i, v_{i+1})`.
///
/// In each triangle the radial integral is exact,
/// `∫₀¹ K₀(c u) u du = (1 − cK₁(c))/c²`, leaving one smooth integral along
/// the far edge. The fan sums to the polygon for `z` inside or outside.
fn region_value(poly: &Polygon, freq: &Frequency, z: Complex64, gl: &GaussLegendre) -> Complex64 {
    let alpha = freq.alpha();
    let v = poly.vertices();
    let n = v.len();
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        let jac = cross(a - z, b - a);
        if jac == 0.0 {
            continue;
        }
        let mut edge = Complex64::new(0.0, 0.0);
        for (lo, hi) in segment_panels(a, b, z, alpha) {
            for (t, w) in gl.on(lo, hi) {
                let r = (a - z + (b - a) * t).norm();
                edge += ramp_integral_k0(alpha * r) * w;
            }
        }
        total += edge * jac;
    }
    total * freq.prefactor()
}

/// `∇_z ∫_P G(z, ξ) dξ = −∮_{∂P} G(z, ξ) n(ξ) ds` with `n` the outward normal
/// of `P`.
fn region_gradient(poly: &Polygon, freq: &Frequency, z: Complex64, gl: &GaussLegendre) -> (Complex64, Complex64) {
    let alpha = freq.alpha();
    let v = poly.vertices();
    let n = v.len();
    let (mut gx, mut gy) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        let d = b - a;
        let len = d.norm();
        let normal = Complex64::new(d.im, -d.re) / len;
        let mut edge = Complex64::new(0.0, 0.0);
        for (lo, hi) in segment_panels(a, b, z, alpha) {
            for (t, w) in gl.on(lo, hi) {
                let r = (a + d * t - z).norm();
                if r > 0.0 {
                    edge += k01(alpha * r).0 * w;
                }
            }
        }
        edge *= len;
        gx -= edge * normal.re;
        gy -= edge * normal.im;
    }
    let p = freq.prefactor();
    (gx * p, gy * p)
}

/// Transform of the free-space solution, `û_p(z) = ∫ G(z, ξ) u₀(ξ) dξ`.
pub fn particular_transform(scene: &Scene, freq: &Frequency, points: &[Complex64]) -> Result<Vec<Complex64>> {
    match scene.source() {
        Source::None => Ok(vec![Complex64::new(0.0, 0.0); points.len()]),
        Source::Delta(z0) => points.iter().map(|&z| greens(z, *z0, freq)).collect(),
        Source::Region(poly) => {
            let gl = GaussLegendre::new(REGION_ORDER);
            Ok(points.iter().map(|&z| region_value(poly, freq, z, &gl)).collect())
        }
    }
}

/// `∇û_p(z)`.
pub fn particular_gradient(scene: &Scene, freq: &Frequency, z: Complex64) -> Result<(Complex64, Complex64)> {
    match scene.source() {
        Source::None => Ok((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))),
        Source::Delta(z0) => greens_gradient(z, *z0, freq),
        Source::Region(poly) => Ok(region_gradient(poly, freq, z, &GaussLegendre::new(REGION_ORDER))),
    }
}

/// Solves the transform problem at every node of `rule`, tagging failures
/// with the node index.
pub fn solve_nodes<E: Executor>(
    scene: &Scene,
    rule: &TalbotRule,
    params: &SolveParams,
    exec: &E,
) -> Result<Vec<Expansion>> {
    let nodes = rule.nodes();
    exec.map(nodes.len(), |j| {
        let freq = Frequency::new(nodes[j], scene.diffusivity()).map_err(|e| e.at_node(j))?;
        solve_transform(scene, &freq, params.m, params.centers()).map_err(|e| e.at_node(j))
    })
    .into_iter()
    .collect()
}

/// Rectangular evaluation lattice, `nx × ny` points including the bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalGrid {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
}

impl EvalGrid {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 || !(x0.is_finite() && x1.is_finite() && y0.is_finite() && y1.is_finite()) {
            return Err(Error::InvalidParameter("grid needs finite bounds and at least one point per axis".into()));
        }
        if x1 < x0 || y1 < y0 {
            return Err(Error::InvalidParameter("grid bounds must be ordered".into()));
        }
        Ok(EvalGrid { x0, x1, y0, y1, nx, ny })
    }

    fn coordinate(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
        if n == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Points in row-major order: `x` varies fastest.
    pub fn points(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.ny {
            let y = Self::coordinate(self.y0, self.y1, self.ny, j);
            for i in 0..self.nx {
                out.push(Complex64::new(Self::coordinate(self.x0, self.x1, self.nx, i), y));
            }
        }
        out
    }
}

/// `u(z, t)` on a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatField {
    pub t: f64,
    pub grid: EvalGrid,
    /// `None` inside bodies and at a point source.
    pub values: Vec<Option<f64>>,
    pub m: usize,
    pub evaluations: usize,
    /// `E∞[u]` after inversion; `None` without bodies.
    pub boundary_error: Option<BoundaryError>,
    /// `E∞[û]` at each Talbot node.
    pub node_errors: Vec<BoundaryError>,
    /// Largest `|Im|` of the upper-branch Talbot sum over the lattice.
    pub imaginary_residue: f64,
}

impl HeatField {
    pub fn mask(&self) -> impl Iterator<Item = bool> + '_ {
        self.values.iter().map(Option::is_none)
    }
}

fn masked(scene: &Scene, z: Complex64) -> bool {
    scene.body_containing(z).is_some() || matches!(scene.source(), Source::Delta(z0) if *z0 == z)
}

/// `E∞[u] = sup|u − f| / sup|f − L⁻¹û_p|` on the oversampled boundary grid.
pub fn invert_boundary_error(expansions: &[Expansion], rule: &TalbotRule) -> Result<Option<BoundaryError>> {
    let traces: Vec<_> = expansions.iter().filter_map(Expansion::trace).collect();
    if traces.len() != expansions.len() || traces.first().is_none_or(|t| t.mismatch.is_empty()) {
        return Ok(None);
    }
    let count = traces[0].mismatch.len();
    let mut mismatch = Vec::with_capacity(count);
    let mut scale = 0.0f64;
    let mut buf = vec![Complex64::new(0.0, 0.0); traces.len()];
    for i in 0..count {
        for (b, t) in buf.iter_mut().zip(&traces) {
            *b = t.mismatch[i];
        }
        mismatch.push(rule.combine(&buf)?.re.abs());
        for (b, t) in buf.iter_mut().zip(&traces) {
            *b = t.data[i];
        }
        scale = scale.max(rule.combine(&buf)?.re.abs());
    }
    Ok(Some(BoundaryError::from_samples(mismatch.into_iter(), scale)))
}

/// Full pipeline on a lattice at time `t`.
pub fn solve_heat<E: Executor>(
    scene: &Scene,
    t: f64,
    grid: &EvalGrid,
    params: &SolveParams,
    exec: &E,
) -> Result<HeatField> {
    let rule = TalbotRule::new(params.evaluations, t)?;
    let points = grid.points();
    let live: Vec<usize> = (0..points.len()).filter(|&i| !masked(scene, points[i])).collect();
    let live_points: Vec<Complex64> = live.iter().map(|&i| points[i]).collect();
    let nodes = rule.nodes();
    let per_node = exec.map(nodes.len(), |j| -> Result<(Expansion, Vec<Complex64>)> {
        let run = || {
            let freq = Frequency::new(nodes[j], scene.diffusivity())?;
            let exp = solve_transform(scene, &freq, params.m, params.centers())?;
            let uh = exp.values(&live_points)?;
            let up = particular_transform(scene, &freq, &live_points)?;
            let total = uh.iter().zip(&up).map(|(a, b)| a + b).collect();
            Ok((exp, total))
        };
        run().map_err(|e: Error| e.at_node(j))
    });
    let mut expansions = Vec::with_capacity(nodes.len());
    let mut columns = Vec::with_capacity(nodes.len());
    for r in per_node {
        let (e, v) = r?;
        expansions.push(e);
        columns.push(v);
    }
    let mut values = vec![None; points.len()];
    let mut residue = 0.0f64;
    let mut buf = vec![Complex64::new(0.0, 0.0); nodes.len()];
    for (k, &i) in live.iter().enumerate() {
        for (b, col) in buf.iter_mut().zip(&columns) {
            *b = col[k];
        }
        let sum = rule.combine(&buf)?;
        residue = residue.max(sum.im.abs());
        values[i] = Some(sum.re);
    }
    Ok(HeatField {
        t,
        grid: *grid,
        values,
        m: params.m,
        evaluations: params.evaluations,
        boundary_error: invert_boundary_error(&expansions, &rule)?,
        node_errors: expansions.iter().map(Expansion::boundary_error).collect(),
        imaginary_residue: residue,
    })
}

/// Time-domain boundary error report.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatBoundaryReport {
    pub t: f64,
    pub error: BoundaryError,
    pub node_errors: Vec<BoundaryError>,
    pub pruned: usize,
    pub basis_size: usize,
}

/// `E∞[u]` at time `t` without evaluating a field.
pub fn heat_boundary_error<E: Executor>(
    scene: &Scene,
    t: f64,
    params: &SolveParams,
    exec: &E,
) -> Result<HeatBoundaryReport> {
    if scene.bodies().is_empty() {
        return Err(Error::InvalidScene("boundary error needs at least one body".into()));
    }
    let rule = TalbotRule::new(params.evaluations, t)?;
    let expansions = solve_nodes(scene, &rule, params, exec)?;
    let error = invert_boundary_error(&expansions, &rule)?.ok_or(Error::EmptySystem)?;
    Ok(HeatBoundaryReport {
        t,
        error,
        node_errors: expansions.iter().map(Expansion::boundary_error).collect(),
        pruned: expansions[0].plan().pruned(),
        basis_size: expansions[0].plan().basis_size(),
    })
}

/// Panel layout for boundary flux integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxRule {
    /// Dyadic refinement levels toward each corner.
    pub depth: usize,
    /// Gauss–Legendre points per panel.
    pub order: usize,
}

impl Default for FluxRule {
    fn default() -> Self {
        FluxRule { depth: 40, order: 8 }
    }
}

/// Quadrature nodes on every body: `(body, point, outward normal, weight)`.
fn flux_nodes(scene: &Scene, rule: &FluxRule) -> Vec<(usize, Complex64, Complex64, f64)> {
    let gl = GaussLegendre::new(rule.order);
    let panels = dyadic_panels(rule.depth);
    let mut out = Vec::new();
    for (bi, body) in scene.bodies().iter().enumerate() {
        for e in 0..body.len() {
            let (a, b) = body.polygon().edge(e);
            let half = (b - a) * 0.5;
            let w_scale = body.edge_lengths()[e] * 0.5;
            let normal = body.outward_normal(e);
            for &(lo, hi) in &panels {
                for (x, w) in gl.on(lo, hi) {
                    out.push((bi, a + half * x, normal, w * w_scale));
                    out.push((bi, b - half * x, normal, w * w_scale));
                }
            }
        }
    }
    out
}

/// `ĵ_k(s) = ∮_{∂Ω_k} D ∂_n û ds` per body, `n` pointing into the fluid.
pub fn flux_transform(exp: &Expansion, scene: &Scene, rule: &FluxRule) -> Result<Vec<Complex64>> {
    let mut out = vec![Complex64::new(0.0, 0.0); scene.bodies().len()];
    let d = scene.diffusivity();
    for (body, z, n, w) in flux_nodes(scene, rule) {
        let (gx, gy) = total_gradient(exp, scene, z)?;
        out[body] += (gx * n.re + gy * n.im) * (d * w);
    }
    Ok(out)
}

/// Arrival rates `j_k(t)` and cumulative captures `c_k(t)` per body.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxSeries {
    pub times: Vec<f64>,
    /// `j[k][i]` is the rate into body `k` at `times[i]`.
    pub j: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
}

impl FluxSeries {
    /// Sum over bodies of `c_k` at each time.
    pub fn total_captured(&self) -> Vec<f64> {
        (0..self.times.len()).map(|i| self.c.iter().map(|ck| ck[i]).sum()).collect()
    }
}

pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() || times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidParameter("times must be positive and finite".into()));
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("times must increase".into()));
    }
    Ok(())
}

/// Inverts per-body transforms `ĵ(s)` (one vector per node) for `j` and `ĵ/s`
/// for `c`.
pub(crate) fn invert_fluxes(rule: &TalbotRule, per_node: &[Vec<Complex64>], bodies: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut j = Vec::with_capacity(bodies);
    let mut c = Vec::with_capacity(bodies);
    for k in 0..bodies {
        let rates: Vec<Complex64> = per_node.iter().map(|v| v[k]).collect();
        let cumulative: Vec<Complex64> = rates.iter().zip(rule.nodes()).map(|(r, s)| r / s).collect();
        j.push(rule.combine(&rates)?.re);
        c.push(rule.combine(&cumulative)?.re);
    }
    Ok((j, c))
}

/// Lightning fluxes at each time; `times` must increase.
pub fn flux_series<E: Executor>(
    scene: &Scene,
    times: &[f64],
    params: &SolveParams,
    flux_rule: &FluxRule,
    exec: &E,
) -> Result<FluxSeries> {
    check_times(times)?;
    if matches!(scene.source(), Source::None) {
        return Err(Error::InvalidScene("fluxes need a delta or region source".into()));
    }
    let rules: Vec<TalbotRule> = times
        .iter()
        .map(|&t| TalbotRule::new(params.evaluations, t))
        .collect::<Result<_>>()?;
    let m = params.evaluations;
    let results = exec.map(times.len() * m, |idx| {
        let (ti, j) = (idx / m, idx % m);
        let run = || {
            let freq = Frequency::new(rules[ti].nodes()[j], scene.diffusivity())?;
            let exp = solve_transform(scene, &freq, params.m, params.centers())?;
            flux_transform(&exp, scene, flux_rule)
        };
        run().map_err(|e| e.at_node(j))
    });
    let mut flat = Vec::with_capacity(results.len());
    for r in results {
        flat.push(r?);
    }
    let bodies = scene.bodies().len();
    let mut j = vec![Vec::with_capacity(times.len()); bodies];
    let mut c = vec![Vec::with_capacity(times.len()); bodies];
    for (ti, rule) in rules.iter().enumerate() {
        let (jt, ct) = invert_fluxes(rule, &flat[ti * m..(ti + 1) * m], bodies)?;
        for k in 0..bodies {
            j[k].push(jt[k]);
            c[k].push(ct[k]);
        }
    }
    Ok(FluxSeries {
        times: times.to_vec(),
        j,
        c,
    })
}
