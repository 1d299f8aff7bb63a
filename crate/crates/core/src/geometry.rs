//! Polygonal bodies, corner geometry and exponentially graded boundary grids.
//!
//! Points are complex numbers `x + iy`. Bodies are stored counter-clockwise,
//! so the body interior lies to the left of every edge and the fluid to the
//! right. The corner angle `β` is the opening of the fluid region at a vertex
//! divided by `π`: a convex right-angled corner has `β = 3/2`, a reentrant one
//! `β = 1/2`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::{Error, Result};

/// Tolerance on `|β − 1|` below which a vertex counts as flat.
pub const FLAT_TOLERANCE: f64 = 1e-12;

/// Corners sharper than this (in units of `π`, on either side) are rejected
/// as spikes.
const SPIKE_TOLERANCE: f64 = 1e-9;

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn orientation(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    cross(b - a, c - a)
}

fn on_segment(a: Complex64, b: Complex64, p: Complex64) -> bool {
    p.re >= a.re.min(b.re) && p.re <= a.re.max(b.re) && p.im >= a.im.min(b.im) && p.im <= a.im.max(b.im)
}

/// Closed-segment intersection test, exact in the sign of the orientation
/// predicates.
pub fn segments_intersect(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    let o1 = orientation(a, b, c);
    let o2 = orientation(a, b, d);
    let o3 = orientation(c, d, a);
    let o4 = orientation(c, d, b);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0)) {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

fn signed_area(v: &[Complex64]) -> f64 {
    let n = v.len();
    (0..n).map(|i| cross(v[i], v[(i + 1) % n])).sum::<f64>() / 2.0
}

/// Winding number of a closed polyline around `z` (0 outside).
pub fn winding_number(vertices: &[Complex64], z: Complex64) -> i32 {
    let n = vertices.len();
    let mut w = 0;
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        if a.im <= z.im {
            if b.im > z.im && orientation(a, b, z) > 0.0 {
                w += 1;
            }
        } else if b.im <= z.im && orientation(a, b, z) < 0.0 {
            w -= 1;
        }
    }
    w
}

fn check_simple(v: &[Complex64]) -> Result<()> {
    let n = v.len();
    if n < 3 {
        return Err(Error::InvalidPolygon(format!("need at least 3 vertices, got {n}")));
    }
    if let Some(i) = v.iter().position(|z| !z.is_finite()) {
        return Err(Error::InvalidPolygon(format!("vertex {i} is not finite")));
    }
    for i in 0..n {
        for j in i + 1..n {
            if v[i] == v[j] {
                return Err(Error::InvalidPolygon(format!("vertices {i} and {j} coincide")));
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return Err(Error::InvalidPolygon(format!("edges {i} and {j} intersect")));
            }
        }
    }
    if signed_area(v) == 0.0 {
        return Err(Error::InvalidPolygon("zero area".into()));
    }
    Ok(())
}

/// A simple polygon, stored counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Complex64>,
}

impl Polygon {
    /// Validates simplicity and reorders to counter-clockwise if needed.
    pub fn new(mut vertices: Vec<Complex64>) -> Result<Self> {
        check_simple(&vertices)?;
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        Ok(Polygon { vertices })
    }

    pub fn vertices(&self) -> &[Complex64] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    /// Area centroid.
    pub fn centroid(&self) -> Complex64 {
        let v = &self.vertices;
        let n = v.len();
        let mut c = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            c += (a + b) * cross(a, b);
        }
        c / (6.0 * self.area())
    }

    /// Strict interior by winding number; boundary points may go either way.
    pub fn contains(&self, z: Complex64) -> bool {
        winding_number(&self.vertices, z) != 0
    }

    pub fn edge(&self, i: usize) -> (Complex64, Complex64) {
        let n = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    /// Whether the closed polygons share any point.
    pub fn overlaps(&self, other: &Polygon) -> bool {
        for i in 0..self.vertices.len() {
            let (a, b) = self.edge(i);
            for j in 0..other.vertices.len() {
                let (c, d) = other.edge(j);
                if segments_intersect(a, b, c, d) {
                    return true;
                }
            }
        }
        self.contains(other.vertices[0]) || other.contains(self.vertices[0])
    }

    /// Distance from `z` to the polygon boundary.
    pub fn boundary_distance(&self, z: Complex64) -> f64 {
        (0..self.vertices.len())
            .map(|i| {
                let (a, b) = self.edge(i);
                let d = b - a;
                let t = (((z - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
                (a + d * t - z).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// An absorbing body with its corner data.
#[derive(Debug, Clone, PartialEq)]
pub struct Body {
    polygon: Polygon,
    corner_angles: Vec<f64>,
    bisectors: Vec<Complex64>,
    edge_lengths: Vec<f64>,
    flat: Vec<bool>,
}

impl Body {
    /// Builds a body from a simple polygon in either orientation.
    pub fn new(vertices: Vec<Complex64>) -> Result<Self> {
        let polygon = Polygon::new(vertices)?;
        let v = polygon.vertices();
        let n = v.len();
        let edge_lengths: Vec<f64> = (0..n).map(|i| (v[(i + 1) % n] - v[i]).norm()).collect();
        let mut corner_angles = Vec::with_capacity(n);
        let mut bisectors = Vec::with_capacity(n);
        let mut flat = Vec::with_capacity(n);
        for i in 0..n {
            let prev = v[(i + n - 1) % n];
            let next = v[(i + 1) % n];
            let e_in = v[i] - prev;
            let e_out = next - v[i];
            let turn = (e_out / e_in).arg();
            let beta = 1.0 + turn / PI;
            if !(SPIKE_TOLERANCE..=2.0 - SPIKE_TOLERANCE).contains(&beta) {
                return Err(Error::InvalidPolygon(format!("vertex {i} is a zero-angle spike")));
            }
            let interior = PI - turn;
            let dir = e_out / e_out.norm();
            bisectors.push(dir * Complex64::from_polar(1.0, interior / 2.0));
            flat.push((beta - 1.0).abs() < FLAT_TOLERANCE);
            corner_angles.push(beta);
        }
        Ok(Body {
            polygon,
            corner_angles,
            bisectors,
            edge_lengths,
            flat,
        })
    }

    pub fn polygon(&self) -> &Polygon {
        &self.polygon
    }

    pub fn vertices(&self) -> &[Complex64] {
        self.polygon.vertices()
    }

    pub fn len(&self) -> usize {
        self.polygon.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polygon.vertices.is_empty()
    }

    /// `β` per vertex: fluid-side opening angle over `π`.
    pub fn corner_angles(&self) -> &[f64] {
        &self.corner_angles
    }

    /// Unit directions from each vertex into the body along the bisector of
    /// the interior angle.
    pub fn bisectors(&self) -> &[Complex64] {
        &self.bisectors
    }

    /// `edge_lengths[i]` is the length of the edge from vertex `i` to `i + 1`.
    pub fn edge_lengths(&self) -> &[f64] {
        &self.edge_lengths
    }

    /// Vertices with `β = 1` (collinear neighbours).
    pub fn flat_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.flat.iter().enumerate().filter(|(_, f)| **f).map(|(i, _)| i)
    }

    pub fn centroid(&self) -> Complex64 {
        self.polygon.centroid()
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.polygon.contains(z)
    }

    /// Unit normal of edge `i` pointing out of the body.
    pub fn outward_normal(&self, i: usize) -> Complex64 {
        let (a, b) = self.polygon.edge(i);
        let d = (b - a) / self.edge_lengths[i];
        Complex64::new(d.im, -d.re)
    }
}

/// Dirichlet data `f(z)` on one body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryData {
    Zero,
    /// `f(z) = (Re z)^p`.
    RePow(i32),
    Constant(f64),
}

impl BoundaryData {
    pub fn eval(&self, z: Complex64) -> f64 {
        match *self {
            BoundaryData::Zero => 0.0,
            BoundaryData::RePow(p) => z.re.powi(p),
            BoundaryData::Constant(c) => c,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, BoundaryData::Zero) || *self == BoundaryData::Constant(0.0)
    }
}

/// Initial condition `u₀`.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    /// Unit point mass at the given location.
    Delta(Complex64),
    /// Indicator function of a polygonal region.
    Region(Polygon),
    None,
}

/// Bodies, diffusivity, initial condition and boundary data.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    bodies: Vec<Body>,
    diffusivity: f64,
    source: Source,
    boundary: Vec<BoundaryData>,
    h_min: f64,
}

impl Scene {
    /// Validates the configuration. `boundary` holds one entry per body.
    pub fn new(bodies: Vec<Body>, diffusivity: f64, source: Source, boundary: Vec<BoundaryData>) -> Result<Self> {
        if !(diffusivity > 0.0 && diffusivity.is_finite()) {
            return Err(Error::InvalidScene(format!("diffusivity must be positive, got {diffusivity}")));
        }
        if boundary.len() != bodies.len() {
            return Err(Error::InvalidScene(format!(
                "{} bodies but {} boundary specifications",
                bodies.len(),
                boundary.len()
            )));
        }
        for (i, a) in bodies.iter().enumerate() {
            for (j, b) in bodies.iter().enumerate().skip(i + 1) {
                if a.polygon.overlaps(&b.polygon) {
                    return Err(Error::InvalidScene(format!("bodies {i} and {j} touch or overlap")));
                }
            }
        }
        match &source {
            Source::Delta(z0) => {
                if !z0.is_finite() {
                    return Err(Error::InvalidScene("source location is not finite".into()));
                }
                for (i, b) in bodies.iter().enumerate() {
                    if b.contains(*z0) || b.polygon.boundary_distance(*z0) == 0.0 {
                        return Err(Error::InvalidScene(format!("delta source lies in body {i}")));
                    }
                }
            }
            Source::Region(region) => {
                for (i, b) in bodies.iter().enumerate() {
                    if region.overlaps(&b.polygon) {
                        return Err(Error::InvalidScene(format!("source region meets body {i}")));
                    }
                }
            }
            Source::None => {}
        }
        let h_min = bodies
            .iter()
            .flat_map(|b| b.edge_lengths.iter().copied())
            .fold(f64::INFINITY, f64::min);
        Ok(Scene {
            bodies,
            diffusivity,
            source,
            boundary,
            h_min,
        })
    }

    pub fn bodies(&self) -> &[Body] {
        &self.bodies
    }

    pub fn diffusivity(&self) -> f64 {
        self.diffusivity
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    pub fn boundary(&self) -> &[BoundaryData] {
        &self.boundary
    }

    /// Shortest edge over all bodies; infinite for a scene without bodies.
    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    pub fn vertex_count(&self) -> usize {
        self.bodies.iter().map(Body::len).sum()
    }

    /// Index of the body containing `z`, if any.
    pub fn body_containing(&self, z: Complex64) -> Option<usize> {
        self.bodies.iter().position(|b| b.contains(z))
    }

    /// Boundary value `f(z)` for a point on body `body`.
    pub fn boundary_value(&self, body: usize, z: Complex64) -> f64 {
        self.boundary[body].eval(z)
    }

    pub fn has_zero_boundary(&self) -> bool {
        self.boundary.iter().all(BoundaryData::is_zero)
    }
}

/// A boundary sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub point: Complex64,
    pub body: usize,
    pub edge: usize,
    /// Unit normal pointing into the fluid.
    pub normal: Complex64,
}

/// Distances from a corner, as fractions of the half-edge, of the `n`
/// samples on one half-edge: `e^{−ρ(1−t)}` at `t = (i − 1)/n`, so the
/// closest sits at `e^{−ρ}` and the farthest just short of the midpoint.
pub fn half_edge_fractions(n: usize, rho: f64) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| (-rho * (1.0 - i as f64 / n as f64)).exp())
}

/// Samples every edge of every body from both ends toward its midpoint,
/// `per_half_edge` points per half, clustered exponentially into the corners
/// with rate `rho`. Points run edge by edge, the first half ordered from the
/// corner outward and the second half from the midpoint back toward the far
/// corner.
pub fn boundary_grid(scene: &Scene, per_half_edge: usize, rho: f64) -> Result<Vec<BoundaryPoint>> {
    if per_half_edge == 0 {
        return Err(Error::InvalidParameter("need at least one point per half-edge".into()));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!("clustering rate must be positive, got {rho}")));
    }
    let fractions: Vec<f64> = half_edge_fractions(per_half_edge, rho).collect();
    let mut out = Vec::with_capacity(2 * per_half_edge * scene.vertex_count());
    for (bi, body) in scene.bodies.iter().enumerate() {
        for e in 0..body.len() {
            let (a, b) = body.polygon.edge(e);
            let half = (b - a) * 0.5;
            let normal = body.outward_normal(e);
            for f in &fractions {
                out.push(BoundaryPoint {
                    point: a + half * *f,
                    body: bi,
                    edge: e,
                    normal,
                });
            }
            for f in fractions.iter().rev() {
                out.push(BoundaryPoint {
                    point: b - half * *f,
                    body: bi,
                    edge: e,
                    normal,
                });
            }
        }
    }
    Ok(out)
}
