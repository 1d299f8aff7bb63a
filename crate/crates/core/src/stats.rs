//! Ordinary least-squares line fits used by the convergence diagnostics.

#[cfg(not(feature = "std"))]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Pearson correlation of the samples.
    pub correlation: f64,
}

impl LinearFit {
    /// Fits `y ≈ slope·x + intercept`. `None` for fewer than two points or
    /// constant `x`.
    pub fn new(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
        let n = xs.len().min(ys.len());
        if n < 2 {
            return None;
        }
        let nf = n as f64;
        let mx = xs[..n].iter().sum::<f64>() / nf;
        let my = ys[..n].iter().sum::<f64>() / nf;
        let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
        for (x, y) in xs.iter().zip(ys) {
            let (dx, dy) = (x - mx, y - my);
            sxx += dx * dx;
            syy += dy * dy;
            sxy += dx * dy;
        }
        if sxx == 0.0 {
            return None;
        }
        let slope = sxy / sxx;
        let correlation = if syy == 0.0 { 0.0 } else { sxy / (sxx * syy).sqrt() };
        Some(LinearFit {
            slope,
            intercept: my - slope * mx,
            correlation,
        })
    }
}
