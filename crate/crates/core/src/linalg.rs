//! Dense complex least squares by Householder QR with column pivoting.
//!
//! The factorization works on a column-major copy with split real and
//! imaginary planes so the inner products and updates run over contiguous
//! `f64` slices. Pivoting stops once the largest remaining column norm drops
//! below [`DROP_TOLERANCE`] times the first pivot; columns past that point
//! get zero coefficients.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::{Error, Result};

/// Relative pivot size below which remaining columns are treated as
/// numerically dependent.
pub const DROP_TOLERANCE: f64 = 1e-14;

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            entries: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, entries }
    }

    /// Wraps row-major `entries`; panics if the length is not `rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<Complex64>) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count does not match shape");
        ComplexMatrix { rows, cols, entries }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Largest entry modulus.
    pub fn max_norm(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    fn all_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }
}

/// Result of [`column_scale`].
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnScaling {
    pub matrix: ComplexMatrix,
    /// Divisor applied to each column; the unscaled coefficient is
    /// `x_scaled[j] / factors[j]`.
    pub factors: Vec<f64>,
    /// Columns that were identically zero (factor left at 1).
    pub zero_columns: Vec<usize>,
}

impl ColumnScaling {
    /// Maps coefficients of the scaled system back to the original columns.
    pub fn unscale(&self, x: &mut [Complex64]) {
        for (v, f) in x.iter_mut().zip(&self.factors) {
            *v /= *f;
        }
    }
}

/// Divides every column by its largest entry modulus.
pub fn column_scale(a: &ComplexMatrix) -> ColumnScaling {
    let mut factors = vec![0.0f64; a.cols];
    for i in 0..a.rows {
        for (f, v) in factors.iter_mut().zip(a.row(i)) {
            *f = f.max(v.norm());
        }
    }
    let mut zero_columns = Vec::new();
    for (j, f) in factors.iter_mut().enumerate() {
        if *f == 0.0 {
            *f = 1.0;
            zero_columns.push(j);
        }
    }
    let inv: Vec<f64> = factors.iter().map(|f| 1.0 / f).collect();
    let mut matrix = a.clone();
    for i in 0..matrix.rows {
        for (v, s) in matrix.row_mut(i).iter_mut().zip(&inv) {
            *v *= *s;
        }
    }
    ColumnScaling {
        matrix,
        factors,
        zero_columns,
    }
}

/// Σ conj(v)·a over split planes.
#[inline]
fn dot_conj(vr: &[f64], vi: &[f64], ar: &[f64], ai: &[f64]) -> (f64, f64) {
    const LANES: usize = 4;
    let n = vr.len();
    let (mut sr, mut si) = ([0.0f64; LANES], [0.0f64; LANES]);
    let chunks = n / LANES;
    for c in 0..chunks {
        let o = c * LANES;
        for l in 0..LANES {
            let (xr, xi, yr, yi) = (vr[o + l], vi[o + l], ar[o + l], ai[o + l]);
            sr[l] += xr * yr + xi * yi;
            si[l] += xr * yi - xi * yr;
        }
    }
    let mut re = sr.iter().sum::<f64>();
    let mut im = si.iter().sum::<f64>();
    for k in chunks * LANES..n {
        re += vr[k] * ar[k] + vi[k] * ai[k];
        im += vr[k] * ai[k] - vi[k] * ar[k];
    }
    (re, im)
}

/// a ← a − c·v over split planes.
#[inline]
fn axpy_neg(cr: f64, ci: f64, vr: &[f64], vi: &[f64], ar: &mut [f64], ai: &mut [f64]) {
    for k in 0..vr.len() {
        let (xr, xi) = (vr[k], vi[k]);
        ar[k] -= cr * xr - ci * xi;
        ai[k] -= cr * xi + ci * xr;
    }
}

/// Householder QR with column pivoting, `A P = Q R`.
#[derive(Debug, Clone)]
pub struct ColPivQr {
    rows: usize,
    cols: usize,
    /// Column-major planes: reflector vectors on and below the diagonal,
    /// `R` above it, and the unreduced trailing block past `rank`.
    re: Vec<f64>,
    im: Vec<f64>,
    /// `2 / (vᴴv)` per reflector.
    beta: Vec<f64>,
    /// Diagonal of `R`.
    diag: Vec<Complex64>,
    perm: Vec<usize>,
    rank: usize,
}

impl ColPivQr {
    pub fn factor(a: &ComplexMatrix, tolerance: f64) -> Result<Self> {
        let (m, n) = (a.rows, a.cols);
        if m == 0 || n == 0 {
            return Err(Error::EmptySystem);
        }
        if !a.all_finite() {
            return Err(Error::NonFinite);
        }
        let mut re = vec![0.0; m * n];
        let mut im = vec![0.0; m * n];
        for i in 0..m {
            for (j, v) in a.row(i).iter().enumerate() {
                re[j * m + i] = v.re;
                im[j * m + i] = v.im;
            }
        }
        let mut qr = ColPivQr {
            rows: m,
            cols: n,
            re,
            im,
            beta: Vec::new(),
            diag: Vec::new(),
            perm: (0..n).collect(),
            rank: 0,
        };
        qr.run(tolerance);
        Ok(qr)
    }

    fn col_norm2(&self, j: usize, from: usize) -> f64 {
        let m = self.rows;
        let r = &self.re[j * m + from..(j + 1) * m];
        let i = &self.im[j * m + from..(j + 1) * m];
        r.iter().zip(i).map(|(a, b)| a * a + b * b).sum()
    }

    fn swap_columns(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let m = self.rows;
        let (lo, hi) = (a.min(b), a.max(b));
        let (left, right) = self.re.split_at_mut(hi * m);
        left[lo * m..(lo + 1) * m].swap_with_slice(&mut right[..m]);
        let (left, right) = self.im.split_at_mut(hi * m);
        left[lo * m..(lo + 1) * m].swap_with_slice(&mut right[..m]);
        self.perm.swap(a, b);
    }

    fn run(&mut self, tolerance: f64) {
        let (m, n) = (self.rows, self.cols);
        let steps = m.min(n);
        let mut norms: Vec<f64> = (0..n).map(|j| self.col_norm2(j, 0)).collect();
        let mut reference = norms.clone();
        let mut first_pivot = None;
        for k in 0..steps {
            let (p, _) = norms[k..]
                .iter()
                .enumerate()
                .fold((0, -1.0), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
            let p = p + k;
            self.swap_columns(k, p);
            norms.swap(k, p);
            reference.swap(k, p);

            // Recompute exactly; the downdated value only chooses the pivot.
            let xnorm = self.col_norm2(k, k).sqrt();
            let first = *first_pivot.get_or_insert(xnorm);
            if xnorm == 0.0 || xnorm <= tolerance * first {
                break;
            }

            let base = k * m + k;
            let x0 = Complex64::new(self.re[base], self.im[base]);
            let phase = if x0.norm() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                x0 / x0.norm()
            };
            // v = x + e^{iθ}‖x‖ e₁, H = I − 2vvᴴ/(vᴴv), H x = −e^{iθ}‖x‖ e₁.
            let v0 = x0 + phase * xnorm;
            self.re[base] = v0.re;
            self.im[base] = v0.im;
            let vnorm2 = 2.0 * xnorm * (xnorm + x0.norm());
            let beta = 2.0 / vnorm2;
            self.beta.push(beta);
            self.diag.push(-phase * xnorm);

            let (head, tail) = self.re.split_at_mut((k + 1) * m);
            let (head_i, tail_i) = self.im.split_at_mut((k + 1) * m);
            let vr = &head[k * m + k..];
            let vi = &head_i[k * m + k..];
            for (jj, (cr, ci)) in tail.chunks_exact_mut(m).zip(tail_i.chunks_exact_mut(m)).enumerate() {
                let j = k + 1 + jj;
                let (ar, ai) = (&mut cr[k..], &mut ci[k..]);
                let (dr, di) = dot_conj(vr, vi, ar, ai);
                axpy_neg(dr * beta, di * beta, vr, vi, ar, ai);
                let top = ar[0] * ar[0] + ai[0] * ai[0];
                norms[j] -= top;
                if norms[j] <= 1e-8 * reference[j] {
                    let fresh: f64 = ar[1..].iter().zip(&ai[1..]).map(|(a, b)| a * a + b * b).sum();
                    norms[j] = fresh;
                    reference[j] = fresh;
                }
            }
            self.rank = k + 1;
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `perm[k]` is the original column placed at position `k`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Applies `Qᴴ` (the product of the stored reflectors) to `b` in place.
    pub fn apply_qh(&self, b: &mut [Complex64]) {
        let m = self.rows;
        let (mut br, mut bi): (Vec<f64>, Vec<f64>) = b.iter().map(|v| (v.re, v.im)).unzip();
        for k in 0..self.rank {
            let vr = &self.re[k * m + k..(k + 1) * m];
            let vi = &self.im[k * m + k..(k + 1) * m];
            let (dr, di) = dot_conj(vr, vi, &br[k..], &bi[k..]);
            let beta = self.beta[k];
            axpy_neg(dr * beta, di * beta, vr, vi, &mut br[k..], &mut bi[k..]);
        }
        for (v, (r, i)) in b.iter_mut().zip(br.into_iter().zip(bi)) {
            *v = Complex64::new(r, i);
        }
    }

    /// Applies `Q` to `x` in place.
    fn apply_q(&self, x: &mut [Complex64]) {
        let m = self.rows;
        let (mut br, mut bi): (Vec<f64>, Vec<f64>) = x.iter().map(|v| (v.re, v.im)).unzip();
        for k in (0..self.rank).rev() {
            let vr = &self.re[k * m + k..(k + 1) * m];
            let vi = &self.im[k * m + k..(k + 1) * m];
            let (dr, di) = dot_conj(vr, vi, &br[k..], &bi[k..]);
            let beta = self.beta[k];
            axpy_neg(dr * beta, di * beta, vr, vi, &mut br[k..], &mut bi[k..]);
        }
        for (v, (r, i)) in x.iter_mut().zip(br.into_iter().zip(bi)) {
            *v = Complex64::new(r, i);
        }
    }

    /// Entry `(i, j)` of the reduced matrix `[R11 R12; 0 A22]` (pivoted
    /// column order).
    fn reduced(&self, i: usize, j: usize) -> Complex64 {
        let m = self.rows;
        if i < self.rank && i == j {
            self.diag[i]
        } else if i > j && j < self.rank {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(self.re[j * m + i], self.im[j * m + i])
        }
    }

    /// Rebuilds `A` from the factors.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let (m, n) = (self.rows, self.cols);
        let mut out = ComplexMatrix::zeros(m, n);
        let mut col = vec![Complex64::new(0.0, 0.0); m];
        for j in 0..n {
            for (i, c) in col.iter_mut().enumerate() {
                *c = self.reduced(i, j);
            }
            self.apply_q(&mut col);
            for (i, c) in col.iter().enumerate() {
                out.set(i, self.perm[j], *c);
            }
        }
        out
    }

    /// Minimum-norm-in-the-pivoted-sense least-squares solution: the
    /// first `rank` pivoted unknowns by back substitution, the rest zero.
    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        if b.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: b.len(),
            });
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut y = b.to_vec();
        self.apply_qh(&mut y);
        let m = self.rows;
        let r = self.rank;
        let mut z = vec![Complex64::new(0.0, 0.0); r];
        for i in (0..r).rev() {
            let mut acc = y[i];
            for (j, zj) in z.iter().enumerate().skip(i + 1) {
                acc -= Complex64::new(self.re[j * m + i], self.im[j * m + i]) * zj;
            }
            z[i] = acc / self.diag[i];
        }
        let mut x = vec![Complex64::new(0.0, 0.0); self.cols];
        for (k, v) in z.into_iter().enumerate() {
            x[self.perm[k]] = v;
        }
        Ok(x)
    }
}

/// Least-squares solution with its residual norm and numerical rank.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub x: Vec<Complex64>,
    pub residual_norm: f64,
    pub rank: usize,
}

pub fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Minimizes `‖Ax − b‖₂` for `rows ≥ cols`.
pub fn lstsq(a: &ComplexMatrix, b: &[Complex64]) -> Result<LeastSquares> {
    if a.rows < a.cols {
        return Err(Error::Underdetermined {
            rows: a.rows,
            cols: a.cols,
        });
    }
    if b.len() != a.rows {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            got: b.len(),
        });
    }
    let qr = ColPivQr::factor(a, DROP_TOLERANCE)?;
    let x = qr.solve(b)?;
    let fitted = a.mul_vec(&x);
    let residual: Vec<Complex64> = fitted.iter().zip(b).map(|(f, b)| f - b).collect();
    Ok(LeastSquares {
        residual_norm: norm2(&residual),
        x,
        rank: qr.rank(),
    })
}

/// Least squares after [`column_scale`]; coefficients are returned for the
/// original columns.
pub fn lstsq_scaled(a: &ComplexMatrix, b: &[Complex64]) -> Result<LeastSquares> {
    let scaling = column_scale(a);
    let mut sol = lstsq(&scaling.matrix, b)?;
    scaling.unscale(&mut sol.x);
    Ok(sol)
}

/// Solves a small square system by Gaussian elimination with partial
/// pivoting.
pub fn solve_square(a: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = a.rows;
    if n == 0 {
        return Err(Error::EmptySystem);
    }
    if a.cols != n {
        return Err(Error::InvalidParameter("solve_square needs a square matrix".into()));
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    if !a.all_finite() || b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m.max_norm();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m.get(i, k).norm().total_cmp(&m.get(j, k).norm()))
            .unwrap_or(k);
        let pivot = m.get(p, k);
        if pivot.norm() <= 1e-14 * scale {
            return Err(Error::Singular(alloc::format!("zero pivot in column {k}")));
        }
        if p != k {
            for j in 0..n {
                let (u, v) = (m.get(k, j), m.get(p, j));
                m.set(k, j, v);
                m.set(p, j, u);
            }
            x.swap(k, p);
        }
        for i in k + 1..n {
            let f = m.get(i, k) / pivot;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in k..n {
                let v = m.get(i, j) - f * m.get(k, j);
                m.set(i, j, v);
            }
            let xk = x[k];
            x[i] -= f * xk;
        }
    }
    for i in (0..n).rev() {
        let acc = (i + 1..n).fold(x[i], |acc, j| acc - m.get(i, j) * x[j]);
        x[i] = acc / m.get(i, i);
    }
    Ok(x)
}
