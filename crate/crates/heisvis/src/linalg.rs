//! Small dense linear algebra for the numeric core.
//!
//! Every matrix in this crate is (2n+1)-square for small n, so plain row-major
//! storage with classical O(n^3) algorithms is plenty. Hand-rolling this keeps
//! the numeric core dependency-free and every rank/convergence tolerance an
//! explicit, documented decision.

use crate::error::{HeisError, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Mat::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds from nested rows; all rows must share one length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(HeisError::DimensionMismatch("ragged matrix rows".into()));
        }
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Ok(Mat { rows: r, cols: c, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.data[i * self.cols..(i + 1) * self.cols].to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[f64]) {
        for i in 0..self.rows {
            self.set(i, j, v[i]);
        }
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    #[inline]
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(v) {
                acc += a * b;
            }
            out[i] = acc;
        }
        out
    }

    /// Writes `self * v` into `out` without allocating.
    #[inline]
    pub fn mul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(self.cols, v.len());
        debug_assert_eq!(self.rows, out.len());
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(v) {
                acc += a * b;
            }
            out[i] = acc;
        }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|a| a.is_finite())
    }

    /// Solves `self * x = b` by LU with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let lu = LuFactors::new(self)?;
        Ok(lu.solve(b))
    }

    /// Inverse via LU; errors on numerically singular input.
    pub fn inverse(&self) -> Result<Mat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let lu = LuFactors::new(self)?;
        let mut inv = Mat::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = lu.solve(&e);
            inv.set_column(j, &col);
            e[j] = 0.0;
        }
        Ok(inv)
    }
}

/// LU factorization with partial pivoting. Pivot deemed zero relative to the
/// matrix magnitude at 1e-13: far below any spectral gap handled here, far
/// above roundoff accumulated on these tiny systems.
struct LuFactors {
    n: usize,
    lu: Mat,
    perm: Vec<usize>,
}

const LU_PIVOT_RTOL: f64 = 1e-13;

impl LuFactors {
    fn new(a: &Mat) -> Result<Self> {
        assert_eq!(a.rows, a.cols, "LU requires a square matrix");
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (mut best, mut best_abs) = (k, lu.get(k, k).abs());
            for i in k + 1..n {
                let v = lu.get(i, k).abs();
                if v > best_abs {
                    best = i;
                    best_abs = v;
                }
            }
            if best_abs <= LU_PIVOT_RTOL * scale {
                return Err(HeisError::DegeneratePairing(format!(
                    "singular matrix: pivot {best_abs:.3e} at column {k}"
                )));
            }
            if best != k {
                for j in 0..n {
                    let t = lu.get(k, j);
                    lu.set(k, j, lu.get(best, j));
                    lu.set(best, j, t);
                }
                perm.swap(k, best);
            }
            let piv = lu.get(k, k);
            for i in k + 1..n {
                let f = lu.get(i, k) / piv;
                lu.set(i, k, f);
                for j in k + 1..n {
                    lu.set(i, j, lu.get(i, j) - f * lu.get(k, j));
                }
            }
        }
        Ok(LuFactors { n, lu, perm })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = b[self.perm[i]];
            for j in 0..i {
                acc -= self.lu.get(i, j) * y[j];
            }
            y[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in i + 1..n {
                acc -= self.lu.get(i, j) * y[j];
            }
            y[i] = acc / self.lu.get(i, i);
        }
        y
    }
}

/// Null-space basis of `a` by Gaussian elimination with full pivoting.
///
/// A pivot is treated as zero when |pivot| <= rtol * max|a|; callers choose
/// rtol to sit between roundoff (~1e-13) and the smallest genuine spectral
/// gap. Returned vectors have unit Euclidean norm.
pub fn null_space(a: &Mat, rtol: f64) -> Vec<Vec<f64>> {
    let (rows, cols) = (a.rows, a.cols);
    let mut u = a.clone();
    let mut colperm: Vec<usize> = (0..cols).collect();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let tol = rtol * scale;
    let mut rank = 0;
    for k in 0..rows.min(cols) {
        // full pivot over the untouched block
        let (mut bi, mut bj, mut best) = (k, k, 0.0f64);
        for i in k..rows {
            for j in k..cols {
                let v = u.get(i, j).abs();
                if v > best {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        }
        if best <= tol {
            break;
        }
        if bi != k {
            for j in 0..cols {
                let t = u.get(k, j);
                u.set(k, j, u.get(bi, j));
                u.set(bi, j, t);
            }
        }
        if bj != k {
            for i in 0..rows {
                let t = u.get(i, k);
                u.set(i, k, u.get(i, bj));
                u.set(i, bj, t);
            }
            colperm.swap(k, bj);
        }
        let piv = u.get(k, k);
        for i in k + 1..rows {
            let f = u.get(i, k) / piv;
            for j in k..cols {
                u.set(i, j, u.get(i, j) - f * u.get(k, j));
            }
        }
        rank = k + 1;
    }
    let mut basis = Vec::with_capacity(cols - rank);
    for free in rank..cols {
        let mut y = vec![0.0; cols];
        y[free] = 1.0;
        for i in (0..rank).rev() {
            let mut acc = 0.0;
            for j in i + 1..cols {
                acc += u.get(i, j) * y[j];
            }
            y[i] = -acc / u.get(i, i);
        }
        let mut x = vec![0.0; cols];
        for j in 0..cols {
            x[colperm[j]] = y[j];
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut x {
            *v /= norm;
        }
        basis.push(x);
    }
    basis
}

/// Householder reduction to upper Hessenberg form (similarity transform).
pub fn hessenberg(a: &Mat) -> Mat {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        let mut x: Vec<f64> = (k + 1..n).map(|i| h.get(i, k)).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        x[0] -= alpha;
        let vnorm2: f64 = x.iter().map(|v| v * v).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // H = I - 2 v v^T / (v^T v) acting on rows/cols k+1..n
        // left: h <- H h
        for j in 0..n {
            let mut dot = 0.0;
            for (idx, vi) in x.iter().enumerate() {
                dot += vi * h.get(k + 1 + idx, j);
            }
            let f = 2.0 * dot / vnorm2;
            for (idx, vi) in x.iter().enumerate() {
                let r = k + 1 + idx;
                h.set(r, j, h.get(r, j) - f * vi);
            }
        }
        // right: h <- h H
        for i in 0..n {
            let mut dot = 0.0;
            for (idx, vi) in x.iter().enumerate() {
                dot += vi * h.get(i, k + 1 + idx);
            }
            let f = 2.0 * dot / vnorm2;
            for (idx, vi) in x.iter().enumerate() {
                let c = k + 1 + idx;
                h.set(i, c, h.get(i, c) - f * vi);
            }
        }
    }
    h
}

/// Iteration cap per eigenvalue before the QR iteration gives up. Well beyond
/// what a real-spectrum matrix of this size needs (typically < 10).
const QR_MAX_ITERS_PER_EIGENVALUE: usize = 80;
/// Subdiagonal negligibility threshold, relative to neighboring diagonal mass.
const QR_DEFLATE_RTOL: f64 = 1e-14;

/// Real eigenvalues by shifted QR iteration on the Hessenberg form
/// (iterative similarity reduction with a hard iteration cap).
///
/// Returns eigenvalues in no particular order. Errors with
/// [`HeisError::ComplexSpectrum`] when a trailing 2x2 block has complex
/// roots and [`HeisError::NonDiagonalizable`] when the cap is exceeded.
pub fn real_eigenvalues(a: &Mat) -> Result<Vec<f64>> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    if n == 0 {
        return Ok(vec![]);
    }
    let mut h = hessenberg(a);
    let scale = h.max_abs().max(f64::MIN_POSITIVE);
    let mut m = n; // active leading block size
    let mut evals = Vec::with_capacity(n);
    let mut iters = 0usize;
    let cap = QR_MAX_ITERS_PER_EIGENVALUE * n;
    while m > 0 {
        // clean negligible subdiagonal entries of the active block
        for i in 1..m {
            let v = h.get(i, i - 1).abs();
            let local = h.get(i, i).abs() + h.get(i - 1, i - 1).abs();
            if v <= QR_DEFLATE_RTOL * local.max(scale) {
                h.set(i, i - 1, 0.0);
            }
        }
        if m == 1 {
            evals.push(h.get(0, 0));
            m = 0;
            continue;
        }
        if h.get(m - 1, m - 2) == 0.0 {
            evals.push(h.get(m - 1, m - 1));
            m -= 1;
            continue;
        }
        // trailing 2x2 isolated (either m == 2 or a zero above it): solve it
        if m == 2 || h.get(m - 2, m - 3) == 0.0 {
            let (a11, a12) = (h.get(m - 2, m - 2), h.get(m - 2, m - 1));
            let (a21, a22) = (h.get(m - 1, m - 2), h.get(m - 1, m - 1));
            let half = 0.5 * (a11 - a22);
            let disc = half * half + a12 * a21;
            if disc < 0.0 {
                return Err(HeisError::ComplexSpectrum(format!(
                    "conjugate pair {:.6} +- {:.6}i",
                    0.5 * (a11 + a22),
                    (-disc).sqrt()
                )));
            }
            let s = disc.sqrt();
            let mid = 0.5 * (a11 + a22);
            // stable split: larger-magnitude root first, mate via product
            let r1 = if mid >= 0.0 { mid + s } else { mid - s };
            let det = a11 * a22 - a12 * a21;
            let r2 = if r1 != 0.0 { det / r1 } else { mid - s };
            evals.push(r1);
            evals.push(r2);
            m -= 2;
            continue;
        }
        iters += 1;
        if iters > cap {
            return Err(HeisError::NonDiagonalizable(format!(
                "QR iteration exceeded {cap} steps without deflating"
            )));
        }
        // Wilkinson shift from the trailing 2x2 (real part when complex);
        // occasional exceptional shift breaks symmetric stalls.
        let (a11, a12) = (h.get(m - 2, m - 2), h.get(m - 2, m - 1));
        let (a21, a22) = (h.get(m - 1, m - 2), h.get(m - 1, m - 1));
        let mut mu = {
            let half = 0.5 * (a11 - a22);
            let disc = half * half + a12 * a21;
            if disc >= 0.0 {
                let s = disc.sqrt();
                let c1 = 0.5 * (a11 + a22) + s;
                let c2 = 0.5 * (a11 + a22) - s;
                if (c1 - a22).abs() < (c2 - a22).abs() {
                    c1
                } else {
                    c2
                }
            } else {
                a22
            }
        };
        if iters % 16 == 0 {
            mu += 0.75 * h.get(m - 1, m - 2).abs();
        }
        qr_step(&mut h, m, mu);
    }
    Ok(evals)
}

/// One explicit shifted QR step on the leading m-block of a Hessenberg matrix:
/// H_m - mu I = Q R (Givens), then H_m <- R Q + mu I. Only the leading block
/// is transformed; the coupling to already-deflated rows/columns is never
/// read again, and block-triangular eigenvalues are the union of the blocks'.
fn qr_step(h: &mut Mat, m: usize, mu: f64) {
    for i in 0..m {
        h.set(i, i, h.get(i, i) - mu);
    }
    let mut rot = Vec::with_capacity(m - 1);
    for i in 0..m - 1 {
        let (a, b) = (h.get(i, i), h.get(i + 1, i));
        let r = a.hypot(b);
        let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (a / r, b / r) };
        rot.push((c, s));
        if r != 0.0 {
            for j in i..m {
                let (x, y) = (h.get(i, j), h.get(i + 1, j));
                h.set(i, j, c * x + s * y);
                h.set(i + 1, j, -s * x + c * y);
            }
        }
    }
    for (i, &(c, s)) in rot.iter().enumerate() {
        for r in 0..i + 2 {
            let (x, y) = (h.get(r, i), h.get(r, i + 1));
            h.set(r, i, c * x + s * y);
            h.set(r, i + 1, -s * x + c * y);
        }
    }
    for i in 0..m {
        h.set(i, i, h.get(i, i) + mu);
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi. Used for singular
/// values of small pairing matrices; robust and boring by design.
pub fn symmetric_eigenvalues(a: &Mat) -> Vec<f64> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut m = a.clone();
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                off = off.max(m.get(i, j).abs());
            }
        }
        if off <= 1e-15 * m.max_abs().max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let (app, aqq) = (m.get(p, p), m.get(q, q));
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (m.get(k, p), m.get(k, q));
                    m.set(k, p, c * akp - s * akq);
                    m.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let (apk, aqk) = (m.get(p, k), m.get(q, k));
                    m.set(p, k, c * apk - s * aqk);
                    m.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    (0..n).map(|i| m.get(i, i)).collect()
}

/// Singular values, largest first, via Jacobi on A^T A.
pub fn singular_values(a: &Mat) -> Vec<f64> {
    let ata = a.transpose().mul(a);
    let mut sv: Vec<f64> = symmetric_eigenvalues(&ata).iter().map(|&l| l.max(0.0).sqrt()).collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}
