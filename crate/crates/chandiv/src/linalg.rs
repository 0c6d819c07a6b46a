//! Small dense complex linear algebra helpers shared across the crate.
//!
//! Everything here targets d^2 x d^2 superoperators with d <= 16, so the
//! routines favor robustness over asymptotic speed.

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Frobenius distance between two complex matrices.
pub fn frob_dist(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm()
}

/// Frobenius distance between two real matrices.
pub fn frob_dist_r(a: &RMat, b: &RMat) -> f64 {
    (a - b).norm()
}

/// Hermitian part (m + m†)/2.
pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Frobenius norm of the anti-Hermitian part, i.e. how far `m` is from Hermitian.
pub fn herm_asymmetry(m: &CMat) -> f64 {
    (m - m.adjoint()).norm() * 0.5
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors as matching columns.
/// The input is hermitized first; callers are expected to have checked
/// [`herm_asymmetry`] when that matters.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let se = hermitize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].partial_cmp(&se.eigenvalues[a]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &se.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_hermitian_eig(m: &CMat) -> f64 {
    let (vals, _) = hermitian_eigen(m);
    *vals.last().expect("empty matrix")
}

/// Matrix exponential (Pade scaling-and-squaring).
pub fn expm(a: &CMat) -> CMat {
    a.clone().exp()
}

/// Square root of a Hermitian PSD matrix.
///
/// Eigenvalues below zero are clipped; returns the root together with the most
/// negative eigenvalue encountered so callers can decide whether the clipping
/// was inside their tolerance.
pub fn sqrtm_psd(m: &CMat) -> (CMat, f64) {
    let (vals, vecs) = hermitian_eigen(m);
    let min_eig = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let n = m.nrows();
    let mut d = CMat::zeros(n, n);
    for (i, &v) in vals.iter().enumerate() {
        d[(i, i)] = cr(v.max(0.0).sqrt());
    }
    (&vecs * d * vecs.adjoint(), min_eig)
}

/// Column-stacking vectorization: `vec(A)[j*d + i] = A[(i, j)]`.
pub fn vec_col(m: &CMat) -> CVec {
    let (rows, cols) = m.shape();
    let mut v = CVec::zeros(rows * cols);
    for j in 0..cols {
        for i in 0..rows {
            v[j * rows + i] = m[(i, j)];
        }
    }
    v
}

/// Inverse of [`vec_col`] for a d x d matrix.
pub fn unvec_col(v: &CVec, d: usize) -> CMat {
    let mut m = CMat::zeros(d, d);
    for j in 0..d {
        for i in 0..d {
            m[(i, j)] = v[j * d + i];
        }
    }
    m
}

/// Partial trace over the first tensor factor of a (da*db) x (da*db) matrix
/// indexed as |a b> = a*db + b.
pub fn trace_out_first(joint: &CMat, da: usize, db: usize) -> CMat {
    debug_assert_eq!(joint.nrows(), da * db);
    let mut out = CMat::zeros(db, db);
    for b1 in 0..db {
        for b2 in 0..db {
            let mut s = cr(0.0);
            for a in 0..da {
                s += joint[(a * db + b1, a * db + b2)];
            }
            out[(b1, b2)] = s;
        }
    }
    out
}

/// Complete `fixed` orthonormal columns to a full dim x dim unitary.
///
/// The completion is deterministic: canonical basis vectors are swept in order
/// and Gram-Schmidt-projected against everything accepted so far.
pub fn unitary_completion(fixed: &[CVec], dim: usize) -> CMat {
    let mut cols: Vec<CVec> = fixed.to_vec();
    let mut cand = 0usize;
    while cols.len() < dim {
        assert!(cand < dim, "completion ran out of candidate directions");
        let mut v = CVec::zeros(dim);
        v[cand] = cr(1.0);
        cand += 1;
        for u in &cols {
            let overlap = u.dotc(&v);
            v -= u * overlap;
        }
        let n = v.norm();
        if n > 1e-8 {
            cols.push(v.unscale(n));
        }
    }
    let mut u = CMat::zeros(dim, dim);
    for (j, col) in cols.iter().enumerate() {
        u.set_column(j, col);
    }
    u
}

/// Determinant of a complex matrix.
pub fn det(m: &CMat) -> C64 {
    m.determinant()
}
