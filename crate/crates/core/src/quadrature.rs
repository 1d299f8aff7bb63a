//! Gauss–Legendre rules and panel layouts for boundary and area integrals.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;

/// Gauss–Legendre nodes and weights on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 1 { x } else { p1 };
                let pm = if n == 1 { 1.0 } else { p0 };
                dp = nf * (x * pn - pm) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // Map [−1, 1] → [0, 1].
            nodes[i] = (1.0 - x) / 2.0;
            nodes[n - 1 - i] = (1.0 + x) / 2.0;
            weights[i] = w / 2.0;
            weights[n - 1 - i] = w / 2.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = b - a;
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (a + h * x, h * w))
    }
}

/// Dyadic panels of `[0, 1]` refined toward 0: `[0, 2^−depth]`,
/// `[2^−depth, 2^{1−depth}]`, …, `[1/2, 1]`.
pub fn dyadic_panels(depth: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(depth + 1);
    let mut lo = 0.5f64.powi(depth as i32);
    out.push((0.0, lo));
    for _ in 0..depth {
        out.push((lo, 2.0 * lo));
        lo *= 2.0;
    }
    out
}

/// Panels on `[0, 1]` graded geometrically toward `focus` down to width
/// `finest`, with no panel wider than `widest`.
pub fn panels_toward(focus: f64, finest: f64, widest: f64) -> Vec<(f64, f64)> {
    let focus = focus.clamp(0.0, 1.0);
    let finest = finest.clamp(1e-300, 1.0);
    let mut out = Vec::new();
    let mut side = |len: f64, sign: f64| {
        if len <= 0.0 {
            return;
        }
        // Breakpoints at distances finest·2^k from the focus, capped at len.
        let mut cuts = vec![0.0];
        let mut d = finest.min(len);
        while d < len {
            cuts.push(d);
            d *= 2.0;
        }
        cuts.push(len);
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let pieces = ((b - a) / widest).ceil().max(1.0) as usize;
            let step = (b - a) / pieces as f64;
            for p in 0..pieces {
                let (u, v) = (a + p as f64 * step, a + (p + 1) as f64 * step);
                let (x, y) = (focus + sign * u, focus + sign * v);
                out.push(if x < y { (x, y) } else { (y, x) });
            }
        }
    };
    side(1.0 - focus, 1.0);
    side(focus, -1.0);
    out
}
