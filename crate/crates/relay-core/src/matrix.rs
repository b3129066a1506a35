//! Dense complex matrices and the numeric kernels built on them.
//!
//! The matrices in this problem are small (a few hundred rows at most), so
//! everything favors accuracy and determinism over large-scale performance:
//! the SVD is a one-sided complex Jacobi iteration, the log-determinant is a
//! Cholesky factorization, and water-filling uses the exact sorted-breakpoint
//! solution rather than bisection.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::Xoshiro256PlusPlus;

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting NaN/Inf.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::contract("matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::contract(format!(
                "entry count {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::contract("matrix entries must be finite"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Square matrix with the given real diagonal.
    pub fn diag(entries: &[f64]) -> Self {
        Self::from_fn(entries.len(), entries.len(), |i, j| {
            if i == j {
                Complex64::new(entries[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Fills a matrix with i.i.d. CN(0,1) entries, row-major draw order.
    pub fn gaussian(rows: usize, cols: usize, rng: &mut Xoshiro256PlusPlus) -> Self {
        let data = (0..rows * cols)
            .map(|_| rng.next_complex_gaussian())
            .collect();
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = value;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.at(j, i).conj())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    let v = out.at(i, j) + a * rhs.at(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a + b)
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a - b)
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scaled_re(&self, factor: f64) -> Self {
        self.scaled(Complex64::new(factor, 0.0))
    }

    /// Copy of `n_rows` consecutive rows starting at `start`.
    pub fn row_block(&self, start: usize, n_rows: usize) -> Self {
        assert!(start + n_rows <= self.rows);
        Self::from_fn(n_rows, self.cols, |i, j| self.at(start + i, j))
    }

    /// Vertical concatenation of equally wide blocks.
    pub fn stack_rows(blocks: &[&ComplexMatrix]) -> Self {
        assert!(!blocks.is_empty());
        let cols = blocks[0].cols;
        assert!(blocks.iter().all(|b| b.cols == cols));
        let rows = blocks.iter().map(|b| b.rows).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for b in blocks {
            data.extend_from_slice(&b.data);
        }
        Self { rows, cols, data }
    }

    pub fn trace(&self) -> Complex64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self.at(i, i)).sum()
    }

    pub fn frob_norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frob_norm(&self) -> f64 {
        self.frob_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Thin SVD factors: `a = u * diag(sigma) * v^H`.
///
/// `u` is rows x r and `v` is cols x r, both with orthonormal columns;
/// `sigma` holds the r = min(rows, cols) singular values in descending
/// order. The Gram eigenvalues of the input are `sigma[i]^2`. Per-column
/// phases are not normalized; downstream quantities are phase-invariant.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: ComplexMatrix,
    pub sigma: Vec<f64>,
    pub v: ComplexMatrix,
}

/// Convergence threshold for Jacobi column sweeps, relative to column norms.
const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 64;

/// Thin SVD via one-sided complex Jacobi.
///
/// Columns of a working copy are repeatedly rotated by 2x2 unitaries until
/// mutually orthogonal; their norms are the singular values and the
/// accumulated rotations form `v`. Wide inputs are factored through the
/// adjoint. Quadratic convergence makes this exact to near machine
/// precision for the small matrices used here.
pub fn svd_thin(a: &ComplexMatrix) -> Result<SvdFactors> {
    if a.rows() < a.cols() {
        let f = svd_thin(&a.adjoint())?;
        return Ok(SvdFactors {
            u: f.v,
            sigma: f.sigma,
            v: f.u,
        });
    }

    let m = a.rows();
    let n = a.cols();
    let mut w = a.clone();
    let mut v = ComplexMatrix::identity(n);

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = 0usize;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = Complex64::new(0.0, 0.0);
                for i in 0..m {
                    let wp = w.at(i, p);
                    let wq = w.at(i, q);
                    app += wp.norm_sqr();
                    aqq += wq.norm_sqr();
                    apq += wp.conj() * wq;
                }
                let mag = apq.norm();
                if mag <= JACOBI_TOL * (app * aqq).sqrt() || app == 0.0 || aqq == 0.0 {
                    continue;
                }
                rotated += 1;

                // Solve t^2 - 2*tau*t - 1 = 0 for the smaller-magnitude root.
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    -1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = apq.conj() / mag * (c * t);

                for i in 0..m {
                    let wp = w.at(i, p);
                    let wq = w.at(i, q);
                    w.set(i, p, wp * c + wq * s);
                    w.set(i, q, wq * c - wp * s.conj());
                }
                for i in 0..n {
                    let vp = v.at(i, p);
                    let vq = v.at(i, q);
                    v.set(i, p, vp * c + vq * s);
                    v.set(i, q, vq * c - vp * s.conj());
                }
            }
        }
        if rotated == 0 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::numeric("SVD Jacobi sweep did not converge"));
    }

    // Column norms are the singular values; sort descending, stable in the
    // original column order so ties keep input order.
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| w.at(i, j).norm_sqr()).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());

    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut u = ComplexMatrix::zeros(m, n);
    let mut v_sorted = ComplexMatrix::zeros(n, n);
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            v_sorted.set(i, new_j, v.at(i, old_j));
        }
        if sigma[new_j] > 0.0 {
            let inv = 1.0 / sigma[new_j];
            for i in 0..m {
                u.set(i, new_j, w.at(i, old_j).scale(inv));
            }
        }
    }

    // Columns with a zero singular value need an explicit orthonormal
    // completion (e.g. exactly rank-deficient inputs like diag(3, 0)).
    for j in 0..n {
        if sigma[j] > 0.0 {
            continue;
        }
        'candidates: for e in 0..m {
            let mut col: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); m];
            col[e] = Complex64::new(1.0, 0.0);
            for k in 0..n {
                if k == j {
                    continue;
                }
                let proj: Complex64 = (0..m).map(|i| u.at(i, k).conj() * col[i]).sum();
                for i in 0..m {
                    col[i] -= proj * u.at(i, k);
                }
            }
            let norm: f64 = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.5 {
                let inv = 1.0 / norm;
                for i in 0..m {
                    u.set(i, j, col[i].scale(inv));
                }
                break 'candidates;
            }
        }
    }

    Ok(SvdFactors {
        u,
        sigma,
        v: v_sorted,
    })
}

/// Moore-Penrose pseudo-inverse via the SVD.
///
/// Singular values below `max(rows, cols) * eps * sigma_max` are treated as
/// zero, the usual scale-aware rank cutoff.
pub fn pseudo_inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let f = svd_thin(a)?;
    let sigma_max = f.sigma.first().copied().unwrap_or(0.0);
    let cutoff = a.rows().max(a.cols()) as f64 * f64::EPSILON * sigma_max;
    let r = f.sigma.len();
    let mut out = ComplexMatrix::zeros(a.cols(), a.rows());
    for k in 0..r {
        if f.sigma[k] <= cutoff || f.sigma[k] == 0.0 {
            continue;
        }
        let inv = 1.0 / f.sigma[k];
        // out += inv * v_k * u_k^H
        for i in 0..a.cols() {
            let vk = f.v.at(i, k);
            for j in 0..a.rows() {
                let val = out.at(i, j) + vk * f.u.at(j, k).conj() * inv;
                out.set(i, j, val);
            }
        }
    }
    Ok(out)
}

/// Smallest singular value of `a`, reported below the rank cutoff as a
/// rank-deficiency signal. Used by the zero-forcing load computation.
pub fn min_singular_value(a: &ComplexMatrix) -> Result<(f64, f64)> {
    let f = svd_thin(a)?;
    let sigma_max = f.sigma.first().copied().unwrap_or(0.0);
    let cutoff = a.rows().max(a.cols()) as f64 * f64::EPSILON * sigma_max;
    Ok((*f.sigma.last().unwrap(), cutoff))
}

/// Minimum Gram eigenvalue: the smallest eigenvalue of `a * a^H`, which is
/// the squared smallest thin singular value of `a`.
pub fn min_gram_eigenvalue(a: &ComplexMatrix) -> Result<f64> {
    let f = svd_thin(a)?;
    let s = f.sigma.last().copied().unwrap_or(0.0);
    Ok(s * s)
}

/// Relative asymmetry allowed before a logdet input is rejected.
const HERMITIAN_TOL: f64 = 1e-8;

/// Natural-log determinant of a Hermitian positive-definite matrix via
/// Cholesky. Callers in this crate always pass `I + PSD`, so a non-positive
/// pivot means a genuine numeric problem rather than an edge case.
pub fn logdet_hermitian_psd(a: &ComplexMatrix) -> Result<f64> {
    if a.rows() != a.cols() {
        return Err(Error::contract("logdet requires a square matrix"));
    }
    let n = a.rows();
    let norm = a.frob_norm();
    let asym = a.sub(&a.adjoint()).frob_norm();
    if asym > HERMITIAN_TOL * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::contract(format!(
            "matrix is not Hermitian: relative asymmetry {:.3e}",
            asym / norm
        )));
    }

    // Factor the Hermitian part; tiny asymmetry is averaged away.
    let h = a.add(&a.adjoint()).scaled_re(0.5);
    let mut l = ComplexMatrix::zeros(n, n);
    let mut logdet = 0.0;
    for j in 0..n {
        let mut d = h.at(j, j).re;
        for k in 0..j {
            d -= l.at(j, k).norm_sqr();
        }
        if d <= 0.0 {
            return Err(Error::numeric(format!(
                "non-positive Cholesky pivot {d:.3e}: matrix is singular or indefinite"
            )));
        }
        logdet += d.ln();
        let root = d.sqrt();
        l.set(j, j, Complex64::new(root, 0.0));
        for i in (j + 1)..n {
            let mut v = h.at(i, j);
            for k in 0..j {
                v -= l.at(i, k) * l.at(j, k).conj();
            }
            l.set(i, j, v.scale(1.0 / root));
        }
    }
    Ok(logdet)
}

/// Water-filling power allocation.
///
/// Maximizes `sum_i log(1 + g_i p_i)` subject to `sum p_i = budget`,
/// `p_i >= 0`, by the exact sorted-breakpoint construction: gains are sorted
/// descending, channels are dropped from the active set until the water
/// level clears the worst active inverse gain. Returns the powers in the
/// original gain order.
pub fn water_fill(gains: &[f64], budget: f64) -> Result<Vec<f64>> {
    if gains.is_empty() {
        return Err(Error::contract("water_fill requires at least one gain"));
    }
    if !gains.iter().all(|g| g.is_finite() && *g > 0.0) {
        return Err(Error::contract("water_fill gains must be finite positive"));
    }
    if !budget.is_finite() || budget < 0.0 {
        return Err(Error::contract("water_fill budget must be nonnegative"));
    }

    let n = gains.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| gains[j].partial_cmp(&gains[i]).unwrap());

    // Try the largest active set first; shrink while the water level sits
    // below the worst active channel's inverse gain.
    let inv: Vec<f64> = order.iter().map(|&i| 1.0 / gains[i]).collect();
    let mut prefix = vec![0.0; n + 1];
    for k in 0..n {
        prefix[k + 1] = prefix[k] + inv[k];
    }
    let mut active = n;
    let mut level = 0.0;
    while active >= 1 {
        level = (budget + prefix[active]) / active as f64;
        if level >= inv[active - 1] {
            break;
        }
        active -= 1;
    }

    let mut powers = vec![0.0; n];
    for k in 0..active {
        powers[order[k]] = level - inv[k];
    }
    Ok(powers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reconstruct(f: &SvdFactors) -> ComplexMatrix {
        let mut s = ComplexMatrix::zeros(f.sigma.len(), f.sigma.len());
        for (i, &x) in f.sigma.iter().enumerate() {
            s.set(i, i, c(x, 0.0));
        }
        f.u.mul(&s).mul(&f.v.adjoint())
    }

    fn assert_orthonormal(m: &ComplexMatrix, tol: f64) {
        let g = m.adjoint().mul(m);
        let err = g.sub(&ComplexMatrix::identity(m.cols())).frob_norm();
        assert!(err < tol, "orthonormality defect {err}");
    }

    #[test]
    fn svd_identity() {
        let f = svd_thin(&ComplexMatrix::identity(3)).unwrap();
        assert!(f.sigma.iter().all(|&s| (s - 1.0).abs() < 1e-12));
        assert_orthonormal(&f.u, 1e-12);
        assert_orthonormal(&f.v, 1e-12);
        let err = reconstruct(&f).sub(&ComplexMatrix::identity(3)).frob_norm();
        assert!(err < 1e-12);
    }

    #[test]
    fn svd_already_diagonal_with_zero() {
        let a = ComplexMatrix::diag(&[3.0, 0.0]);
        let f = svd_thin(&a).unwrap();
        assert!((f.sigma[0] - 3.0).abs() < 1e-12);
        assert!(f.sigma[1].abs() < 1e-12);
        assert_orthonormal(&f.u, 1e-12);
        let err = reconstruct(&f).sub(&a).frob_norm();
        assert!(err < 1e-12);
    }

    #[test]
    fn svd_random_tall_reconstruction() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(101);
        let a = ComplexMatrix::gaussian(8, 2, &mut rng);
        let f = svd_thin(&a).unwrap();
        let rel = reconstruct(&f).sub(&a).frob_norm() / a.frob_norm();
        assert!(rel < 1e-10, "relative reconstruction error {rel}");
        assert_orthonormal(&f.u, 1e-10);
        assert_orthonormal(&f.v, 1e-10);
        assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn svd_wide_matches_gram_spectrum() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
        let a = ComplexMatrix::gaussian(2, 37, &mut rng);
        let f = svd_thin(&a).unwrap();
        assert_eq!(f.u.rows(), 2);
        assert_eq!(f.v.rows(), 37);
        let rel = reconstruct(&f).sub(&a).frob_norm() / a.frob_norm();
        assert!(rel < 1e-10);
    }

    #[test]
    fn pinv_inverts_full_rank_square() {
        let a = ComplexMatrix::new(2, 2, vec![c(1.0, 0.5), c(-0.3, 1.1), c(0.2, 0.0), c(2.0, -0.7)])
            .unwrap();
        let p = pseudo_inverse(&a).unwrap();
        let err = a.mul(&p).sub(&ComplexMatrix::identity(2)).frob_norm();
        assert!(err < 1e-10, "a * pinv(a) - I = {err}");
    }

    #[test]
    fn pinv_of_zero_is_zero_transposed() {
        let p = pseudo_inverse(&ComplexMatrix::zeros(2, 3)).unwrap();
        assert_eq!((p.rows(), p.cols()), (3, 2));
        assert_eq!(p.frob_norm(), 0.0);
    }

    #[test]
    fn pinv_moore_penrose_wide() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(55);
        let a = ComplexMatrix::gaussian(2, 4, &mut rng);
        let p = pseudo_inverse(&a).unwrap();
        let scale = a.frob_norm();
        assert!(a.mul(&p).mul(&a).sub(&a).frob_norm() < 1e-9 * scale);
        assert!(p.mul(&a).mul(&p).sub(&p).frob_norm() < 1e-9 * p.frob_norm());
        let ap = a.mul(&p);
        assert!(ap.sub(&ap.adjoint()).frob_norm() < 1e-9);
        let pa = p.mul(&a);
        assert!(pa.sub(&pa.adjoint()).frob_norm() < 1e-9);
    }

    #[test]
    fn min_gram_identity_and_diag() {
        assert!((min_gram_eigenvalue(&ComplexMatrix::identity(2)).unwrap() - 1.0).abs() < 1e-12);
        let d = ComplexMatrix::diag(&[3.0, 2.0]);
        assert!((min_gram_eigenvalue(&d).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn min_gram_matches_2x2_closed_form() {
        // Oracle: for the 2x2 Hermitian Gram matrix [[a, b], [conj(b), d]]
        // the smaller eigenvalue is (a+d)/2 - sqrt(((a-d)/2)^2 + |b|^2).
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(99);
        let a = ComplexMatrix::gaussian(2, 100, &mut rng);
        let g = a.mul(&a.adjoint());
        let (g11, g22) = (g.at(0, 0).re, g.at(1, 1).re);
        let b = g.at(0, 1);
        let mid = 0.5 * (g11 + g22);
        let rad = (0.25 * (g11 - g22) * (g11 - g22) + b.norm_sqr()).sqrt();
        let oracle = mid - rad;
        let got = min_gram_eigenvalue(&a).unwrap();
        assert!(
            (got - oracle).abs() < 1e-9 * oracle.abs().max(1.0),
            "got {got}, oracle {oracle}"
        );
    }

    #[test]
    fn logdet_identity_and_diag() {
        assert!(logdet_hermitian_psd(&ComplexMatrix::identity(4)).unwrap().abs() < 1e-12);
        let e = std::f64::consts::E;
        let d = ComplexMatrix::diag(&[e, e * e]);
        assert!((logdet_hermitian_psd(&d).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn logdet_rank_one_update() {
        // Oracle: det(I + q q^H) = 1 + ||q||^2.
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        let q = ComplexMatrix::gaussian(2, 1, &mut rng);
        let m = ComplexMatrix::identity(2).add(&q.mul(&q.adjoint()));
        let expect = (1.0 + q.frob_norm_sq()).ln();
        let got = logdet_hermitian_psd(&m).unwrap();
        assert!((got - expect).abs() < 1e-12, "got {got}, expect {expect}");
    }

    #[test]
    fn logdet_rejects_non_hermitian() {
        let m = ComplexMatrix::new(2, 2, vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])
            .unwrap();
        assert!(matches!(
            logdet_hermitian_psd(&m),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn logdet_rejects_singular() {
        let m = ComplexMatrix::diag(&[1.0, 0.0]);
        assert!(matches!(logdet_hermitian_psd(&m), Err(Error::NumericFailure(_))));
    }

    #[test]
    fn water_fill_single_and_symmetric() {
        let p = water_fill(&[1.0], 2.5).unwrap();
        assert_eq!(p, vec![2.5]);
        let p = water_fill(&[0.7, 0.7], 3.0).unwrap();
        assert!((p[0] - 1.5).abs() < 1e-12 && (p[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn water_fill_starves_weak_channel() {
        // level = 1.5 < 1/0.1 = 10, so channel 2 stays off.
        let p = water_fill(&[1.0, 0.1], 0.5).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12);
        assert_eq!(p[1], 0.0);
    }

    #[test]
    fn water_fill_rejects_empty() {
        assert!(matches!(
            water_fill(&[], 1.0),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn water_fill_matches_grid_search() {
        // Oracle: exhaustive split of the budget between two channels.
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(2024);
        for _ in 0..50 {
            let g = [0.05 + 3.0 * rng.next_f64(), 0.05 + 3.0 * rng.next_f64()];
            let budget = 0.1 + 5.0 * rng.next_f64();
            let p = water_fill(&g, budget).unwrap();
            let objective = |p0: f64| (1.0 + g[0] * p0).ln() + (1.0 + g[1] * (budget - p0)).ln();
            let ours = objective(p[0]);
            let steps = 10_000;
            let mut best = f64::NEG_INFINITY;
            for i in 0..=steps {
                best = best.max(objective(budget * i as f64 / steps as f64));
            }
            assert!(
                ours >= best - 1e-3,
                "water-fill {ours} vs grid {best} (g={g:?}, budget={budget})"
            );
            assert!((p.iter().sum::<f64>() - budget).abs() <= 1e-9 * budget.max(1.0));
        }
    }

    fn small_complex() -> impl Strategy<Value = Complex64> {
        (-10.0f64..10.0, -10.0f64..10.0).prop_map(|(re, im)| Complex64::new(re, im))
    }

    fn arb_matrix(max_dim: usize) -> impl Strategy<Value = ComplexMatrix> {
        (1..=max_dim, 1..=max_dim).prop_flat_map(|(r, c)| {
            prop::collection::vec(small_complex(), r * c)
                .prop_map(move |data| ComplexMatrix::new(r, c, data).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn prop_moore_penrose_identities(a in arb_matrix(6)) {
            let p = pseudo_inverse(&a).unwrap();
            let scale = a.frob_norm().max(1.0);
            prop_assert!(a.mul(&p).mul(&a).sub(&a).frob_norm() <= 1e-8 * scale);
            prop_assert!(p.mul(&a).mul(&p).sub(&p).frob_norm() <= 1e-8 * p.frob_norm().max(1.0));
            let ap = a.mul(&p);
            prop_assert!(ap.sub(&ap.adjoint()).frob_norm() <= 1e-8 * ap.frob_norm().max(1.0));
            let pa = p.mul(&a);
            prop_assert!(pa.sub(&pa.adjoint()).frob_norm() <= 1e-8 * pa.frob_norm().max(1.0));
        }

        #[test]
        fn prop_svd_reconstruction_orthonormal(a in arb_matrix(6)) {
            let f = svd_thin(&a).unwrap();
            let rel = reconstruct(&f).sub(&a).frob_norm();
            prop_assert!(rel <= 1e-10 * a.frob_norm().max(1.0));
            let gu = f.u.adjoint().mul(&f.u);
            prop_assert!(gu.sub(&ComplexMatrix::identity(gu.rows())).frob_norm() <= 1e-10);
            let gv = f.v.adjoint().mul(&f.v);
            prop_assert!(gv.sub(&ComplexMatrix::identity(gv.rows())).frob_norm() <= 1e-10);
            prop_assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(f.sigma.iter().all(|&s| s >= 0.0));
        }

        #[test]
        fn prop_water_fill_permutation_and_dominance(
            gains in prop::collection::vec(0.01f64..5.0, 1..6),
            budget in 0.0f64..10.0,
            shift in 0usize..6,
        ) {
            let p = water_fill(&gains, budget).unwrap();
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - budget).abs() <= 1e-9 * budget.max(1.0));

            // Rotating the gain order rotates the powers the same way.
            let k = shift % gains.len();
            let rot: Vec<f64> = gains[k..].iter().chain(&gains[..k]).copied().collect();
            let p_rot = water_fill(&rot, budget).unwrap();
            for i in 0..gains.len() {
                prop_assert!((p_rot[i] - p[(i + k) % gains.len()]).abs() <= 1e-9);
            }

            // Water-filling beats the uniform split.
            let uniform = budget / gains.len() as f64;
            let obj = |ps: &[f64]| -> f64 {
                gains.iter().zip(ps).map(|(g, p)| (1.0 + g * p).ln()).sum()
            };
            let uni: Vec<f64> = vec![uniform; gains.len()];
            prop_assert!(obj(&p) + 1e-9 >= obj(&uni));
        }

        #[test]
        fn prop_logdet_additive_on_commuting_diagonals(
            d1 in prop::collection::vec(0.1f64..10.0, 1..5),
            d2 in prop::collection::vec(0.1f64..10.0, 1..5),
        ) {
            let n = d1.len().min(d2.len());
            let a = ComplexMatrix::diag(&d1[..n]);
            let b = ComplexMatrix::diag(&d2[..n]);
            let sum = logdet_hermitian_psd(&a).unwrap() + logdet_hermitian_psd(&b).unwrap();
            let prod = logdet_hermitian_psd(&a.mul(&b)).unwrap();
            prop_assert!((sum - prod).abs() <= 1e-9 * sum.abs().max(1.0));
        }
    }
}
