//! Orthonormal Hermitian operator bases.
//!
//! The basis used everywhere is F_0 = 1/sqrt(d) followed by the traceless
//! generalized Gell-Mann matrices, normalized so tr(F_a† F_b) = δ_ab. For
//! d = 2 this is exactly the Pauli basis {1, X, Y, Z}/sqrt(2), which makes the
//! Pauli transfer matrix convention match the usual qubit one,
//! `ptm[i][j] = tr(σ_i E[σ_j]) / 2`.

use crate::linalg::{c, cr, CMat};

/// The orthonormal Hermitian basis of d x d operators, F_0 = 1/sqrt(d) first.
///
/// Ordering after F_0: for each k in 1..d, the symmetric and antisymmetric
/// pair elements (j, k) for j < k, then the k-th diagonal element. For d = 2
/// this yields [1, X, Y, Z]/sqrt(2).
pub fn operator_basis(d: usize) -> Vec<CMat> {
    assert!(d >= 1);
    let mut basis = Vec::with_capacity(d * d);
    let norm = 1.0 / (d as f64).sqrt();
    basis.push(CMat::identity(d, d).scale(norm));
    let s = 1.0 / 2.0f64.sqrt();
    for k in 1..d {
        for j in 0..k {
            // (|j><k| + |k><j|)/sqrt(2)
            let mut sym = CMat::zeros(d, d);
            sym[(j, k)] = cr(s);
            sym[(k, j)] = cr(s);
            basis.push(sym);
            // i(|k><j| - |j><k|)/sqrt(2); reduces to Pauli Y for (0, 1)
            let mut asym = CMat::zeros(d, d);
            asym[(j, k)] = c(0.0, -s);
            asym[(k, j)] = c(0.0, s);
            basis.push(asym);
        }
        // (sum_{m<k} |m><m| - k |k><k|)/sqrt(k(k+1))
        let nk = 1.0 / ((k * (k + 1)) as f64).sqrt();
        let mut diag = CMat::zeros(d, d);
        for m in 0..k {
            diag[(m, m)] = cr(nk);
        }
        diag[(k, k)] = cr(-(k as f64) * nk);
        basis.push(diag);
    }
    basis
}

/// d^2 x d^2 unitary whose columns are the column-stacked basis elements.
///
/// Converts between the standard superoperator representation and the PTM:
/// `ptm = Re(B† S B)` and `S = B ptm B†`.
pub fn basis_change_matrix(d: usize) -> CMat {
    let basis = operator_basis(d);
    let mut b = CMat::zeros(d * d, d * d);
    for (col, f) in basis.iter().enumerate() {
        b.set_column(col, &crate::linalg::vec_col(f));
    }
    b
}

/// Unnormalized Pauli matrices [1, X, Y, Z].
pub fn paulis() -> [CMat; 4] {
    let i2 = CMat::identity(2, 2);
    let x = CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]);
    let y = CMat::from_row_slice(2, 2, &[cr(0.0), c(0.0, -1.0), c(0.0, 1.0), cr(0.0)]);
    let z = CMat::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)]);
    [i2, x, y, z]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frob_dist;

    #[test]
    fn qubit_basis_is_pauli_over_sqrt2() {
        let b = operator_basis(2);
        let p = paulis();
        let s = 1.0 / 2.0f64.sqrt();
        for (f, sigma) in b.iter().zip(p.iter()) {
            assert!(frob_dist(f, &sigma.scale(s)) < 1e-15);
        }
    }

    #[test]
    fn basis_is_orthonormal_and_hermitian() {
        for d in [2usize, 3, 5] {
            let b = operator_basis(d);
            assert_eq!(b.len(), d * d);
            for (a, fa) in b.iter().enumerate() {
                assert!(frob_dist(fa, &fa.adjoint()) < 1e-15, "d={d} F_{a} not Hermitian");
                for (bb, fb) in b.iter().enumerate() {
                    let ip = (fa.adjoint() * fb).trace();
                    let expect = if a == bb { 1.0 } else { 0.0 };
                    assert!((ip.re - expect).abs() < 1e-14 && ip.im.abs() < 1e-14);
                }
            }
            // tr F_a = sqrt(d) δ_a0
            assert!((b[0].trace().re - (d as f64).sqrt()).abs() < 1e-14);
            for f in &b[1..] {
                assert!(f.trace().norm() < 1e-14);
            }
        }
    }

    #[test]
    fn change_of_basis_is_unitary() {
        for d in [2usize, 3] {
            let b = basis_change_matrix(d);
            let id = CMat::identity(d * d, d * d);
            assert!(frob_dist(&(b.adjoint() * &b), &id) < 1e-13);
        }
    }
}
