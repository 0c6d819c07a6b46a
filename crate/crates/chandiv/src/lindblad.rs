//! Lindblad (GKSL) generators in canonical form and the semigroup e^(tL).
//!
//! A generator is stored as a Hamiltonian H plus a Kossakowski matrix G over
//! the traceless part of the operator basis (index 0 is reserved for
//! 1/sqrt(d)), acting as
//!
//!   `L[X] = i[X, H] + Σ_(a,b >= 1) G_ab (F_a X F_b† - (F_b† F_a, X)/2)`.

use crate::basis::{basis_change_matrix, operator_basis};
use crate::chanrep::{ChannelRep, Tolerances};
use crate::error::{Error, Result};
use crate::linalg::{c, cr, expm, herm_asymmetry, hermitize, vec_col, CMat, CVec};

/// A GKSL generator in canonical form.
#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    dim: usize,
    hamiltonian: CMat,
    kossakowski: CMat,
}

impl LindbladGenerator {
    /// Builds a generator, checking that H is Hermitian (within 1e-12) and G
    /// is positive semidefinite (within `tol.eig_zero`).
    pub fn new(dim: usize, hamiltonian: CMat, kossakowski: CMat, tol: &Tolerances) -> Result<Self> {
        if hamiltonian.nrows() != dim || hamiltonian.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: hamiltonian.nrows() });
        }
        let gdim = dim * dim - 1;
        if kossakowski.nrows() != gdim || kossakowski.ncols() != gdim {
            return Err(Error::DimensionMismatch { expected: gdim, got: kossakowski.nrows() });
        }
        let h_asym = herm_asymmetry(&hamiltonian);
        if h_asym > 1e-12 * (1.0 + hamiltonian.norm()) {
            return Err(Error::NotHermitian { asymmetry: h_asym });
        }
        let g_asym = herm_asymmetry(&kossakowski);
        if g_asym > 1e-10 * (1.0 + kossakowski.norm()) {
            return Err(Error::NotHermitian { asymmetry: g_asym });
        }
        let g = hermitize(&kossakowski);
        let min_eig = crate::linalg::min_hermitian_eig(&g);
        if min_eig < -tol.eig_zero * (1.0 + g.norm()) {
            return Err(Error::KossakowskiNotPsd { min_eig });
        }
        Ok(Self { dim, hamiltonian: hermitize(&hamiltonian), kossakowski: g })
    }

    /// Purely dissipative generator (zero Hamiltonian).
    pub fn pure_dissipative(dim: usize, kossakowski: CMat, tol: &Tolerances) -> Result<Self> {
        Self::new(dim, CMat::zeros(dim, dim), kossakowski, tol)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &CMat {
        &self.hamiltonian
    }

    pub fn kossakowski(&self) -> &CMat {
        &self.kossakowski
    }

    /// Real trace of the Kossakowski matrix; enters the determinant bound
    /// det e^(-tL) = e^(t d tr G).
    pub fn kossakowski_trace(&self) -> f64 {
        self.kossakowski.trace().re
    }

    /// Frobenius norm of the dissipative part.
    pub fn dissipative_norm(&self) -> f64 {
        self.kossakowski.norm()
    }

    /// The generator scaled by a nonnegative factor (still a valid generator).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            hamiltonian: self.hamiltonian.scale(factor),
            kossakowski: self.kossakowski.scale(factor),
        }
    }

    /// Superoperator matrix of L over the standard basis.
    ///
    /// Satisfies `tr L[X] = 0` for every X (columns annihilate the trace
    /// functional).
    pub fn superop(&self) -> CMat {
        let d = self.dim;
        let n = d * d;
        let basis = operator_basis(d);
        let id = CMat::identity(d, d);
        // i[X, H] = i(X H - H X)
        let ht = self.hamiltonian.transpose();
        let mut l = (ht.kronecker(&id) - id.kronecker(&self.hamiltonian)).scale(1.0) * c(0.0, 1.0);
        for a in 1..n {
            for b in 1..n {
                let g = self.kossakowski[(a - 1, b - 1)];
                if g.norm() == 0.0 {
                    continue;
                }
                let fa = &basis[a];
                let fb = &basis[b];
                let fb_conj = fb.map(|z| z.conj());
                let fbd_fa = fb.adjoint() * fa;
                let term = fb_conj.kronecker(fa)
                    - (id.kronecker(&fbd_fa) + fbd_fa.transpose().kronecker(&id)).scale(0.5);
                l += term * g;
            }
        }
        l
    }

    /// The channel e^(tL) for t >= 0.
    pub fn exp(&self, t: f64) -> Result<ChannelRep> {
        if t < 0.0 {
            return Err(Error::NegativeTime { t });
        }
        let s = expm(&self.superop().scale(t));
        ChannelRep::from_superop(self.dim, s)
    }

    /// The inverse map e^(-tL) as a raw superoperator (not CP in general).
    pub fn exp_inverse(&self, t: f64) -> Result<CMat> {
        if t < 0.0 {
            return Err(Error::NegativeTime { t });
        }
        Ok(expm(&self.superop().scale(-t)))
    }

    /// Extracts the canonical form (H, G) from a generator superoperator.
    ///
    /// Fails if the input does not annihilate the trace, does not preserve
    /// Hermiticity, has a non-PSD Kossakowski matrix, or cannot be reproduced
    /// from the extracted canonical data.
    pub fn from_superop(dim: usize, l: &CMat, tol: &Tolerances) -> Result<Self> {
        let n = dim * dim;
        if l.nrows() != n || l.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: l.nrows() });
        }
        let scale = 1.0 + l.norm();
        // trace annihilation: vec(1)† L = 0
        let tr_row = vec_col(&CMat::identity(dim, dim)).adjoint() * l;
        if tr_row.norm() > 1e-9 * scale {
            return Err(Error::NotLindblad { details: format!("does not annihilate the trace (residual {:.3e})", tr_row.norm()) });
        }
        // process matrix chi = B† Gamma B where Gamma is the Choi matrix of L
        let gamma = ChannelRep::from_superop(dim, l.clone())?.to_choi();
        if herm_asymmetry(&gamma) > 1e-9 * scale {
            return Err(Error::NotLindblad { details: "does not preserve Hermiticity".into() });
        }
        let b = basis_change_matrix(dim);
        let chi = b.adjoint() * gamma * &b;
        let g = hermitize(&chi.view((1, 1), (n - 1, n - 1)).clone_owned());
        let min_eig = crate::linalg::min_hermitian_eig(&g);
        if min_eig < -tol.eig_zero.max(1e-9) * scale {
            return Err(Error::KossakowskiNotPsd { min_eig });
        }
        // Hamiltonian from the first chi column: A = Σ_{a>=1} chi_a0 F_a / sqrt(d),
        // H = i(A - A†)/2 (the chi_00 part is real and drops out).
        let basis = operator_basis(dim);
        let mut a_op = CMat::zeros(dim, dim);
        for a in 1..n {
            a_op += basis[a].scale(1.0) * (chi[(a, 0)] / cr((dim as f64).sqrt()));
        }
        let h = (a_op.clone() - a_op.adjoint()) * c(0.0, 0.5);
        let gen = Self { dim, hamiltonian: hermitize(&h), kossakowski: g };
        let resid = (gen.superop() - l).norm();
        if resid > 1e-8 * scale {
            return Err(Error::NotLindblad { details: format!("canonical form does not reproduce the superoperator (residual {resid:.3e})") });
        }
        Ok(gen)
    }

    /// Generator `L_psi[X] = mu (|psi><psi| tr X - X)`; purely dissipative.
    pub fn psi_collapse(psi: &CVec, mu: f64) -> Result<Self> {
        let d = psi.len();
        let deviation = (psi.norm() - 1.0).abs();
        if deviation > 1e-12 {
            return Err(Error::NotNormalized { deviation });
        }
        if !(mu > 0.0) {
            return Err(Error::InvalidParameter { name: "mu", reason: format!("must be strictly positive, got {mu}") });
        }
        let proj = psi * psi.adjoint();
        let collapse = vec_col(&proj) * vec_col(&CMat::identity(d, d)).adjoint();
        let l = (collapse - CMat::identity(d * d, d * d)).scale(mu);
        let mut gen = Self::from_superop(d, &l, &Tolerances::default())?;
        // the canonical Hamiltonian part of L_psi vanishes identically
        debug_assert!(gen.hamiltonian.norm() < 1e-10);
        gen.hamiltonian = CMat::zeros(d, d);
        Ok(gen)
    }

    /// Spontaneous-decay generator with jump operators |b_0><b_i| and rates
    /// `gammas[i - 1]`, for an orthonormal basis given as the columns of
    /// `basis_vectors`. The Hamiltonian part is zero.
    pub fn amplitude_damping(gammas: &[f64], basis_vectors: &CMat) -> Result<Self> {
        let d = basis_vectors.nrows();
        if basis_vectors.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: basis_vectors.ncols() });
        }
        if gammas.len() != d - 1 {
            return Err(Error::DimensionMismatch { expected: d - 1, got: gammas.len() });
        }
        let resid = ((basis_vectors.adjoint() * basis_vectors) - CMat::identity(d, d)).norm();
        if resid > 1e-10 {
            return Err(Error::NotOrthonormal { residual: resid });
        }
        for &g in gammas {
            if !(g > 0.0) {
                return Err(Error::InvalidParameter { name: "gammas", reason: format!("rates must be strictly positive, got {g}") });
            }
        }
        let mut l = CMat::zeros(d * d, d * d);
        let b0 = basis_vectors.column(0).clone_owned();
        for (i, &rate) in gammas.iter().enumerate() {
            let bi = basis_vectors.column(i + 1).clone_owned();
            let f = &b0 * bi.adjoint(); // |b0><b_i|
            let f_conj = f.map(|z| z.conj());
            let fdf = f.adjoint() * &f;
            let jump = f_conj.kronecker(&f)
                - (CMat::identity(d, d).kronecker(&fdf) + fdf.transpose().kronecker(&CMat::identity(d, d))).scale(0.5);
            l += jump.scale(rate);
        }
        let mut gen = Self::from_superop(d, &l, &Tolerances::default())?;
        debug_assert!(gen.hamiltonian.norm() < 1e-10);
        gen.hamiltonian = CMat::zeros(d, d);
        Ok(gen)
    }

    /// Isotropic depolarizing generator `L[X] = mu ((tr X) 1/d - X)`; its
    /// Kossakowski matrix is (mu/d) times the identity on the traceless block.
    pub fn depolarizing(dim: usize, mu: f64) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::InvalidParameter { name: "mu", reason: format!("must be strictly positive, got {mu}") });
        }
        let g = CMat::identity(dim * dim - 1, dim * dim - 1).scale(mu / dim as f64);
        Self::pure_dissipative(dim, g, &Tolerances::default())
    }
}
