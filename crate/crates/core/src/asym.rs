//! Matched-asymptotics model for small, well separated absorbers.
//!
//! Each body shrinks to a point `z_k` with strength `ν_k = −1/log ℓ_k`, where
//! `ℓ_k` is its logarithmic capacity in absolute length units. The transformed
//! fluxes solve a dense `N_B × N_B` system built from the Green's function and
//! its regular part. Errors are `O(ℓ)`, so agreement with the lightning solver
//! is only expected to a few percent at moderate body sizes.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::str::FromStr;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::c64;
use crate::exec::Executor;
use crate::heat::{check_times, invert_fluxes, FluxSeries};
use crate::linalg::{solve_square, ComplexMatrix};
use crate::ltinv::TalbotRule;
use crate::specfun::{greens, greens_regular_part, Frequency};
use crate::{Error, Result};

/// Shapes with a closed-form logarithmic capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Square,
    EquilateralTriangle,
    /// Right angle between two legs of length `h`.
    IsoscelesRightTriangle,
}

impl Shape {
    pub const TAGS: [&'static str; 3] = ["square", "equilateral_triangle", "isosceles_right_triangle"];

    pub fn tag(self) -> &'static str {
        match self {
            Shape::Square => Self::TAGS[0],
            Shape::EquilateralTriangle => Self::TAGS[1],
            Shape::IsoscelesRightTriangle => Self::TAGS[2],
        }
    }

    /// Capacity per unit side length.
    pub fn capacity_factor(self) -> f64 {
        let g14 = libm::tgamma(0.25);
        let g13 = libm::tgamma(1.0 / 3.0);
        let pi32 = PI * PI.sqrt();
        match self {
            Shape::Square => g14 * g14 / (4.0 * pi32),
            Shape::EquilateralTriangle => 3f64.sqrt() * g13 * g13 * g13 / (8.0 * PI * PI),
            Shape::IsoscelesRightTriangle => libm::pow(3.0, 0.75) * g14 * g14 / (libm::pow(2.0, 3.5) * pi32),
        }
    }

    /// Axis-aligned counter-clockwise vertices with centroid `center`.
    pub fn vertices(self, center: Complex64, h: f64) -> Vec<Complex64> {
        let local = match self {
            Shape::Square => vec![c64(-0.5, -0.5), c64(0.5, -0.5), c64(0.5, 0.5), c64(-0.5, 0.5)],
            Shape::EquilateralTriangle => {
                let r = 3f64.sqrt() / 6.0;
                vec![c64(-0.5, -r), c64(0.5, -r), c64(0.0, 2.0 * r)]
            }
            Shape::IsoscelesRightTriangle => {
                let t = 1.0 / 3.0;
                vec![c64(-t, -t), c64(1.0 - t, -t), c64(-t, 1.0 - t)]
            }
        };
        local.into_iter().map(|v| center + v * h).collect()
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(Shape::Square),
            "equilateral_triangle" => Ok(Shape::EquilateralTriangle),
            "isosceles_right_triangle" => Ok(Shape::IsoscelesRightTriangle),
            other => Err(Error::UnknownShape(other.to_string())),
        }
    }
}

/// Logarithmic capacity of `shape` with side (or leg) length `h`.
pub fn log_capacitance(shape: Shape, h: f64) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!("side length must be positive, got {h}")));
    }
    Ok(shape.capacity_factor() * h)
}

/// Point-absorber model of a multi-body scene with a delta source.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymModel {
    centers: Vec<Complex64>,
    capacitances: Vec<f64>,
    nu: Vec<f64>,
    source: Complex64,
    diffusivity: f64,
}

impl AsymModel {
    pub fn new(centers: Vec<Complex64>, capacitances: Vec<f64>, source: Complex64, diffusivity: f64) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::InvalidParameter("asymptotic model needs at least one body".into()));
        }
        if centers.len() != capacitances.len() {
            return Err(Error::DimensionMismatch {
                expected: centers.len(),
                got: capacitances.len(),
            });
        }
        if !(diffusivity > 0.0 && diffusivity.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("diffusivity must be positive, got {diffusivity}")));
        }
        if let Some(l) = capacitances.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
            return Err(Error::InvalidParameter(alloc::format!("capacity {l} outside (0, 1)")));
        }
        for (i, a) in centers.iter().enumerate() {
            if *a == source || centers[..i].contains(a) {
                return Err(Error::CoincidentPoints);
            }
        }
        let nu = capacitances.iter().map(|l| -1.0 / l.ln()).collect();
        Ok(AsymModel {
            centers,
            capacitances,
            nu,
            source,
            diffusivity,
        })
    }

    /// Builds the model from tagged shapes `(shape, centroid, h)`.
    pub fn from_shapes(bodies: &[(Shape, Complex64, f64)], source: Complex64, diffusivity: f64) -> Result<Self> {
        let caps = bodies
            .iter()
            .map(|&(shape, _, h)| log_capacitance(shape, h))
            .collect::<Result<Vec<_>>>()?;
        AsymModel::new(bodies.iter().map(|b| b.1).collect(), caps, source, diffusivity)
    }

    pub fn centers(&self) -> &[Complex64] {
        &self.centers
    }

    pub fn capacitances(&self) -> &[f64] {
        &self.capacitances
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn source(&self) -> Complex64 {
        self.source
    }

    pub fn diffusivity(&self) -> f64 {
        self.diffusivity
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Interaction matrix: `R(s)` on the diagonal, `G(z_i, z_j)` off it.
    pub fn interaction_matrix(&self, freq: &Frequency) -> Result<ComplexMatrix> {
        let n = self.len();
        let regular = greens_regular_part(freq);
        let mut g = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            g.set(i, i, regular);
            for j in 0..i {
                let v = greens(self.centers[i], self.centers[j], freq)?;
                g.set(i, j, v);
                g.set(j, i, v);
            }
        }
        Ok(g)
    }
}

/// Transformed fluxes `ĵ_k(s)` from `(I + 2πD V G) Ĵ = 2πD V g₀`.
pub fn asym_flux_transform(model: &AsymModel, freq: &Frequency) -> Result<Vec<Complex64>> {
    if freq.diffusivity() != model.diffusivity {
        return Err(Error::InvalidParameter("frequency and model diffusivities differ".into()));
    }
    let n = model.len();
    let scale = 2.0 * PI * model.diffusivity;
    let mut a = model.interaction_matrix(freq)?;
    for i in 0..n {
        let w = scale * model.nu[i];
        for v in a.row_mut(i) {
            *v *= w;
        }
        a.set(i, i, a.get(i, i) + 1.0);
    }
    let rhs = model
        .centers
        .iter()
        .zip(&model.nu)
        .map(|(&z, &nu)| Ok(greens(z, model.source, freq)? * (scale * nu)))
        .collect::<Result<Vec<_>>>()?;
    solve_square(&a, &rhs).map_err(|e| match e {
        Error::Singular(msg) => Error::Singular(alloc::format!("asymptotic system at s = {}: {msg}", freq.s())),
        other => other,
    })
}

/// Time-domain rates and cumulative captures for the asymptotic model.
pub fn asym_flux_series<E: Executor>(model: &AsymModel, times: &[f64], evaluations: usize, exec: &E) -> Result<FluxSeries> {
    check_times(times)?;
    let rules: Vec<TalbotRule> = times
        .iter()
        .map(|&t| TalbotRule::new(evaluations, t))
        .collect::<Result<_>>()?;
    let results = exec.map(times.len() * evaluations, |idx| {
        let (ti, j) = (idx / evaluations, idx % evaluations);
        Frequency::new(rules[ti].nodes()[j], model.diffusivity)
            .and_then(|f| asym_flux_transform(model, &f))
            .map_err(|e| e.at_node(j))
    });
    let flat = results.into_iter().collect::<Result<Vec<_>>>()?;
    let bodies = model.len();
    let mut j = vec![Vec::with_capacity(times.len()); bodies];
    let mut c = vec![Vec::with_capacity(times.len()); bodies];
    for (ti, rule) in rules.iter().enumerate() {
        let (jt, ct) = invert_fluxes(rule, &flat[ti * evaluations..(ti + 1) * evaluations], bodies)?;
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::geometry::Polygon;

    fn freq(s: Complex64) -> Frequency {
        Frequency::new(s, 1.0).unwrap()
    }

    #[test]
    fn capacity_table() {
        let sq = log_capacitance(Shape::Square, 1.0).unwrap();
        let eq = log_capacitance(Shape::EquilateralTriangle, 1.0).unwrap();
        let rt = log_capacitance(Shape::IsoscelesRightTriangle, 0.3).unwrap();
        assert!((sq - 0.590).abs() < 5e-4, "{sq}");
        assert!((eq - 0.422).abs() < 5e-4, "{eq}");
        assert!((rt - 0.1427).abs() < 5e-5, "{rt}");
        assert!((sq - 0.590_170).abs() < 1e-6);
        assert!(log_capacitance(Shape::Square, 0.0).is_err());
        assert!(matches!("circle".parse::<Shape>(), Err(Error::UnknownShape(_))));
        for tag in Shape::TAGS {
            assert_eq!(tag.parse::<Shape>().unwrap().tag(), tag);
        }
    }

    #[test]
    fn shape_vertices_have_requested_centroid_and_size() {
        let c = c64(-1.0, 2.5);
        for shape in [Shape::Square, Shape::EquilateralTriangle, Shape::IsoscelesRightTriangle] {
            let p = Polygon::new(shape.vertices(c, 0.3)).unwrap();
            assert!((p.centroid() - c).norm() < 1e-14, "{shape:?}");
            let v = p.vertices();
            let min_edge = (0..v.len())
                .map(|i| (v[(i + 1) % v.len()] - v[i]).norm())
                .fold(f64::INFINITY, f64::min);
            assert!((min_edge - 0.3).abs() < 1e-14);
        }
    }

    #[test]
    fn single_body_reduces_to_scalar() {
        let model = AsymModel::new(vec![c64(1.0, 1.0)], vec![0.1], c64(0.0, 0.0), 1.0).unwrap();
        let f = freq(c64(2.0, 1.5));
        let j = asym_flux_transform(&model, &f).unwrap();
        let nu = model.nu()[0];
        let g = greens(c64(1.0, 1.0), c64(0.0, 0.0), &f).unwrap();
        let expect = g * (2.0 * PI * nu) / (1.0 + greens_regular_part(&f) * (2.0 * PI * nu));
        assert!((j[0] - expect).norm() < 1e-14 * expect.norm());
    }

    #[test]
    fn symmetric_pair_gets_equal_flux() {
        let model = AsymModel::new(vec![c64(1.0, 0.0), c64(-1.0, 0.0)], vec![0.05, 0.05], c64(0.0, 0.3), 1.0).unwrap();
        let j = asym_flux_transform(&model, &freq(c64(0.7, 2.0))).unwrap();
        assert!((j[0] - j[1]).norm() < 1e-14 * j[0].norm());
        let g = model.interaction_matrix(&freq(c64(0.7, 2.0))).unwrap();
        assert_eq!(g.get(0, 1), g.get(1, 0));
    }

    #[test]
    fn conjugate_frequency_conjugates_flux() {
        let model = AsymModel::from_shapes(
            &[(Shape::Square, c64(1.0, 0.5), 0.2), (Shape::EquilateralTriangle, c64(-1.0, 1.0), 0.3)],
            c64(0.0, 0.0),
            1.0,
        )
        .unwrap();
        let f = freq(c64(-3.0, 5.0));
        let a = asym_flux_transform(&model, &f).unwrap();
        let b = asym_flux_transform(&model, &f.conj()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.conj() - y).norm() < 1e-12 * x.norm());
        }
    }

    #[test]
    fn larger_body_absorbs_more() {
        let f = freq(c64(1.3, 0.0));
        let mut last = 0.0;
        for h in [0.05, 0.1, 0.2, 0.4] {
            let model = AsymModel::from_shapes(&[(Shape::Square, c64(1.0, 0.0), h)], c64(0.0, 0.0), 1.0).unwrap();
            let j = asym_flux_transform(&model, &f).unwrap()[0].norm();
            assert!(j > last);
            last = j;
        }
        let small = AsymModel::new(vec![c64(1.0, 0.0)], vec![0.01], c64(0.0, 0.0), 1.0).unwrap();
        let big = AsymModel::new(vec![c64(1.0, 0.0)], vec![0.2], c64(0.0, 0.0), 1.0).unwrap();
        assert!(big.nu()[0] > small.nu()[0]);
    }

    #[test]
    fn rejects_bad_models() {
        let z = c64(0.0, 0.0);
        assert!(AsymModel::new(vec![], vec![], z, 1.0).is_err());
        assert!(AsymModel::new(vec![c64(1.0, 0.0)], vec![1.5], z, 1.0).is_err());
        assert!(AsymModel::new(vec![z], vec![0.1], z, 1.0).is_err());
        assert!(AsymModel::new(vec![c64(1.0, 0.0); 2], vec![0.1; 2], z, 1.0).is_err());
        assert!(AsymModel::new(vec![c64(1.0, 0.0)], vec![0.1, 0.2], z, 1.0).is_err());
    }

    #[test]
    fn capture_is_monotone_and_bounded() {
        let model = AsymModel::from_shapes(
            &[
                (Shape::EquilateralTriangle, c64(-1.0, 2.5), 0.3),
                (Shape::Square, c64(-2.0, -1.0), 0.3),
                (Shape::IsoscelesRightTriangle, c64(3.0, -3.0), 0.3),
            ],
            c64(0.0, 0.0),
            1.0,
        )
        .unwrap();
        let times = [0.01, 0.1, 0.5, 1.0, 2.0, 5.0];
        let series = asym_flux_series(&model, &times, 9, &Sequential).unwrap();
        for ck in &series.c {
            assert!(ck[0] <= 1e-6);
            // Early-time values sit at the inversion noise floor.
            assert!(ck.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{ck:?}");
        }
        assert!(series.total_captured().iter().all(|&c| c <= 1.0 + 1e-6));
    }

    #[test]
    fn single_rate_peaks_near_arrival_time() {
        let model = AsymModel::from_shapes(&[(Shape::Square, c64(2.0, 0.0), 0.1)], c64(0.0, 0.0), 1.0).unwrap();
        let times: Vec<f64> = (1..=60).map(|k| 0.05 * k as f64).collect();
        let series = asym_flux_series(&model, &times, 9, &Sequential).unwrap();
        let (imax, _) = series.j[0]
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let arrival = 4.0 / 4.0;
        let peak = times[imax];
        assert!(peak > arrival / 3.0 && peak < 3.0 * arrival, "peak at {peak}");
    }
}
