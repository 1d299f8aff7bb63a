//! Property measurements shared by the property suite and the acceptance
//! report. Each returns the measured quantity; callers decide the verdict.

use lightning_heat::exec::Sequential;
use lightning_heat::geometry::{Body, BoundaryData, Scene, Source};
use lightning_heat::heat::{flux_series, particular_gradient, particular_transform, solve_heat, EvalGrid, FluxRule, SolveParams};
use lightning_heat::helmholtz::{solve_transform, total_gradient};
use lightning_heat::linalg::{lstsq, norm2, ComplexMatrix};
use lightning_heat::specfun::{greens, psi, psi_gradient, Frequency};
use lightning_heat::{c64, Complex64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub const GRADIENT_TOL: f64 = 1e-6;
pub const CONJUGATE_TOL: f64 = 1e-10;
pub const FLUX_CONSISTENCY_TOL: f64 = 1e-4;
pub const MAX_PRINCIPLE_SLACK: f64 = 1e-7;

pub fn square(center: Complex64, side: f64) -> Body {
    let h = side / 2.0;
    Body::new(vec![
        center + c64(-h, -h),
        center + c64(h, -h),
        center + c64(h, h),
        center + c64(-h, h),
    ])
    .unwrap()
}

pub fn unit_square_scene(source: Complex64) -> Scene {
    Scene::new(vec![square(c64(0.0, 0.0), 2.0)], 1.0, Source::Delta(source), vec![BoundaryData::Zero]).unwrap()
}

/// Relative five-point residual `|(DΔ_h − s)f| / |s f|` at `z`.
fn helmholtz_residual(f: &dyn Fn(Complex64) -> Complex64, z: Complex64, freq: &Frequency, h: f64) -> f64 {
    let c = f(z);
    let lap = (f(z + h) + f(z - h) + f(z + c64(0.0, h)) + f(z - c64(0.0, h)) - c * 4.0) / (h * h);
    (lap * freq.diffusivity() - freq.s() * c).norm() / (freq.s() * c).norm()
}

/// Observed order of the finite-difference residual of `G` and `ψ_k` under
/// step halving, minimum over the cases.
pub fn pde_residual_order() -> f64 {
    let freq = Frequency::new(c64(2.0, 1.0), 1.3).unwrap();
    let xi = c64(0.2, -0.1);
    let z = c64(1.1, 0.7);
    let mut worst = f64::INFINITY;
    let cases: Vec<Box<dyn Fn(Complex64) -> Complex64>> = vec![
        Box::new(|w| greens(w, xi, &freq).unwrap()),
        Box::new(|w| psi(3, w, xi, &freq).unwrap()),
        Box::new(|w| psi(-5, w, xi, &freq).unwrap()),
    ];
    for f in &cases {
        let r1 = helmholtz_residual(f.as_ref(), z, &freq, 2e-2);
        let r2 = helmholtz_residual(f.as_ref(), z, &freq, 1e-2);
        worst = worst.min((r1 / r2).log2());
    }
    worst
}

fn central_difference(f: &dyn Fn(Complex64) -> Complex64, z: Complex64, h: f64) -> (Complex64, Complex64) {
    let dx = (f(z + h) - f(z - h)) / (2.0 * h);
    let dy = (f(z + c64(0.0, h)) - f(z - c64(0.0, h))) / (2.0 * h);
    (dx, dy)
}

fn gradient_gap(got: (Complex64, Complex64), want: (Complex64, Complex64)) -> f64 {
    let scale = want.0.norm().max(want.1.norm());
    (got.0 - want.0).norm().max((got.1 - want.1).norm()) / scale
}

/// Largest relative gap between analytic gradients and central differences,
/// over basis functions and a solved field.
pub fn gradient_mismatch() -> f64 {
    let freq = Frequency::new(c64(3.0, -2.0), 0.8).unwrap();
    let xi = c64(-0.3, 0.4);
    let z = c64(0.9, -0.6);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for k in [-4, -1, 0, 1, 2, 6] {
        let fd = central_difference(&|w| psi(k, w, xi, &freq).unwrap(), z, h);
        worst = worst.max(gradient_gap(psi_gradient(k, z, xi, &freq).unwrap(), fd));
    }

    let scene = unit_square_scene(c64(2.0, 0.5));
    let freq = Frequency::new(c64(4.0, 3.0), 1.0).unwrap();
    let exp = solve_transform(&scene, &freq, 8, None).unwrap();
    let total = |w: Complex64| exp.value(w).unwrap() + particular_transform(&scene, &freq, &[w]).unwrap()[0];
    for z in [c64(1.4, 0.3), c64(-1.2, 1.5), c64(0.0, -1.7)] {
        let fd = central_difference(&total, z, h);
        worst = worst.max(gradient_gap(total_gradient(&exp, &scene, z).unwrap(), fd));
    }

    let region = Scene::new(
        Vec::new(),
        1.0,
        Source::Region(lightning_heat::geometry::Polygon::new(vec![c64(0.0, 0.0), c64(1.0, 0.0), c64(0.5, 0.8)]).unwrap()),
        Vec::new(),
    )
    .unwrap();
    let up = |w: Complex64| particular_transform(&region, &freq, &[w]).unwrap()[0];
    for z in [c64(1.5, 0.5), c64(0.5, 0.3)] {
        let fd = central_difference(&up, z, h);
        worst = worst.max(gradient_gap(particular_gradient(&region, &freq, z).unwrap(), fd));
    }
    worst
}

/// Relative gap between `û(conj s)` and `conj û(s)` for a full solve.
pub fn conjugate_asymmetry() -> f64 {
    let scene = unit_square_scene(c64(2.0, 0.3));
    let freq = Frequency::new(c64(-5.0, 12.0), 1.0).unwrap();
    let a = solve_transform(&scene, &freq, 12, None).unwrap();
    let b = solve_transform(&scene, &freq.conj(), 12, None).unwrap();
    let points = [c64(1.5, 0.0), c64(-2.0, 1.0), c64(0.3, 1.2), c64(3.0, -3.0)];
    let va = a.values(&points).unwrap();
    let vb = b.values(&points).unwrap();
    let scale = va.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    va.iter().zip(&vb).map(|(x, y)| (x.conj() - y).norm()).fold(0.0, f64::max) / scale
}

/// Smallest relative residual decrease found by perturbing a least-squares
/// solution; never positive for a true minimiser.
pub fn least_squares_gain() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (m, n) = (40, 12);
    let a = ComplexMatrix::from_fn(m, n, |_, _| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let b: Vec<Complex64> = (0..m).map(|_| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let sol = lstsq(&a, &b).unwrap();
    let base = sol.residual_norm;
    let mut best_gain = f64::NEG_INFINITY;
    for _ in 0..200 {
        let x: Vec<Complex64> = sol
            .x
            .iter()
            .map(|v| v + c64(rng.gen_range(-1e-4..1e-4), rng.gen_range(-1e-4..1e-4)))
            .collect();
        let r: Vec<Complex64> = a.mul_vec(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
        best_gain = best_gain.max((base - norm2(&r)) / base);
    }
    best_gain
}

/// Free-space heat kernel.
pub fn heat_kernel(r: f64, t: f64, d: f64) -> f64 {
    (-r * r / (4.0 * d * t)).exp() / (4.0 * PI * d * t)
}

/// Worst violation of `0 ≤ u ≤ kernel` on a heat field around an absorbing
/// square (positive means the band was left).
pub fn max_principle_violation() -> f64 {
    let z0 = c64(2.0, 0.0);
    let scene = unit_square_scene(z0);
    // Offset so no lattice point lands on the boundary, where u = 0 holds only
    // to the boundary error.
    let grid = EvalGrid::new(-3.1, 2.9, -2.9, 3.1, 13, 13).unwrap();
    let mut worst = f64::NEG_INFINITY;
    for t in [0.1, 0.5] {
        let field = solve_heat(&scene, t, &grid, &SolveParams::new(20, 9), &Sequential).unwrap();
        for (z, v) in grid.points().iter().zip(&field.values) {
            if let Some(u) = v {
                let upper = heat_kernel((z - z0).norm(), t, 1.0);
                worst = worst.max(-u).max(u - upper);
            }
        }
    }
    worst
}

/// `|c(T) − ∫₀ᵀ j dτ| / c(T)` for a small absorber, the integral by
/// Gauss–Legendre in `τ` over inverted rates.
pub fn flux_consistency_gap() -> f64 {
    let scene = Scene::new(vec![square(c64(1.5, 0.0), 0.6)], 1.0, Source::Delta(c64(0.0, 0.0)), vec![BoundaryData::Zero]).unwrap();
    let horizon = 1.0;
    let (nodes, weights) = gauss_legendre(24);
    let mut times: Vec<f64> = nodes.iter().map(|x| 0.5 * horizon * (x + 1.0)).collect();
    times.push(horizon);
    let series = flux_series(&scene, &times, &SolveParams::new(8, 9), &FluxRule::default(), &Sequential).unwrap();
    let integral: f64 = weights.iter().zip(&series.j[0]).map(|(w, j)| 0.5 * horizon * w * j).sum();
    let c = *series.c[0].last().unwrap();
    (c - integral).abs() / c
}

fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut r = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, r);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * r * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (r * p1 - p0) / (r * r - 1.0);
            let step = p1 / dp;
            r -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        x[i] = r;
        w[i] = 2.0 / ((1.0 - r * r) * dp * dp);
    }
    // Flux times must increase.
    x.reverse();
    w.reverse();
    (x, w)
}
