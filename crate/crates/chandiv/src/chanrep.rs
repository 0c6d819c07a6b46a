//! Channel representations and the basic CP/TP/rank predicates.
//!
//! A [`ChannelRep`] stores a linear map on d x d operators in one of four
//! interconvertible forms:
//!
//! * `ptm` — real d^2 x d^2 matrix over the normalized Pauli/Gell-Mann basis,
//! * `choi` — Choi matrix `(1 ⊗ E)[ω] · d`, normalized to trace d,
//! * `kraus` — operator-sum form `E[X] = Σ_j K_j X K_j†`,
//! * `superop` — d^2 x d^2 matrix over the standard |i><j| basis
//!   (column-stacking convention, so `vec(E[X]) = S vec(X)`).
//!
//! Trace preservation is equivalent to the first PTM row being (1, 0, ..., 0)
//! and to the Kraus closure `Σ_j K_j† K_j = 1`.

use crate::basis::basis_change_matrix;
use crate::error::{Error, Result};
use crate::linalg::{cr, hermitian_eigen, herm_asymmetry, unvec_col, vec_col, CMat, RMat};

/// Numerical tolerances shared by the predicates and decompositions.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Eigenvalues with magnitude below this count as zero.
    pub eig_zero: f64,
    /// Allowed trace-preservation residual.
    pub tp_tol: f64,
    /// Target width for time bisections.
    pub t_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { eig_zero: 1e-9, tp_tol: 1e-10, t_tol: 1e-10 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eig_zero", self.eig_zero), ("tp_tol", self.tp_tol), ("t_tol", self.t_tol)] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter { name, reason: format!("must be strictly positive, got {v}") });
            }
        }
        Ok(())
    }
}

/// The stored body of a [`ChannelRep`].
#[derive(Debug, Clone)]
pub enum Body {
    Ptm(RMat),
    Choi(CMat),
    Kraus(Vec<CMat>),
    Superop(CMat),
}

impl Body {
    pub fn representation_name(&self) -> &'static str {
        match self {
            Body::Ptm(_) => "ptm",
            Body::Choi(_) => "choi",
            Body::Kraus(_) => "kraus",
            Body::Superop(_) => "superop",
        }
    }
}

/// A linear map on d x d operators in one of four representations.
///
/// Values are immutable; all conversions return fresh data.
#[derive(Debug, Clone)]
pub struct ChannelRep {
    dim: usize,
    body: Body,
}

fn check_square(m_rows: usize, m_cols: usize, want: usize) -> Result<()> {
    if m_rows != want || m_cols != want {
        return Err(Error::DimensionMismatch { expected: want, got: if m_rows != want { m_rows } else { m_cols } });
    }
    Ok(())
}

impl ChannelRep {
    pub fn from_ptm(dim: usize, ptm: RMat) -> Result<Self> {
        check_square(ptm.nrows(), ptm.ncols(), dim * dim)?;
        Ok(Self { dim, body: Body::Ptm(ptm) })
    }

    pub fn from_choi(dim: usize, choi: CMat) -> Result<Self> {
        check_square(choi.nrows(), choi.ncols(), dim * dim)?;
        Ok(Self { dim, body: Body::Choi(choi) })
    }

    pub fn from_superop(dim: usize, superop: CMat) -> Result<Self> {
        check_square(superop.nrows(), superop.ncols(), dim * dim)?;
        Ok(Self { dim, body: Body::Superop(superop) })
    }

    pub fn from_kraus(dim: usize, kraus: Vec<CMat>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidParameter { name: "kraus", reason: "empty operator list".into() });
        }
        for k in &kraus {
            check_square(k.nrows(), k.ncols(), dim)?;
        }
        Ok(Self { dim, body: Body::Kraus(kraus) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn body(&self) -> &Body {
        &self.body
    }

    /// Superoperator over the standard basis (column-stacking).
    pub fn to_superop(&self) -> CMat {
        let d = self.dim;
        match &self.body {
            Body::Superop(s) => s.clone(),
            Body::Ptm(r) => {
                let b = basis_change_matrix(d);
                let rc = CMat::from_fn(d * d, d * d, |i, j| cr(r[(i, j)]));
                &b * rc * b.adjoint()
            }
            Body::Kraus(ks) => {
                let mut s = CMat::zeros(d * d, d * d);
                for k in ks {
                    let kc = k.map(|z| z.conj());
                    s += kc.kronecker(k);
                }
                s
            }
            Body::Choi(c) => {
                let mut s = CMat::zeros(d * d, d * d);
                for i in 0..d {
                    for k in 0..d {
                        for j in 0..d {
                            for l in 0..d {
                                s[(l * d + k, j * d + i)] = c[(i * d + k, j * d + l)];
                            }
                        }
                    }
                }
                s
            }
        }
    }

    /// Choi matrix `Σ_ij |i><j| ⊗ E[|i><j|]`, trace d for a TP map.
    pub fn to_choi(&self) -> CMat {
        let d = self.dim;
        match &self.body {
            Body::Choi(c) => c.clone(),
            Body::Kraus(ks) => {
                let mut c = CMat::zeros(d * d, d * d);
                for k in ks {
                    let v = vec_col(k);
                    c += &v * v.adjoint();
                }
                c
            }
            _ => {
                let s = self.to_superop();
                let mut c = CMat::zeros(d * d, d * d);
                for i in 0..d {
                    for k in 0..d {
                        for j in 0..d {
                            for l in 0..d {
                                c[(i * d + k, j * d + l)] = s[(l * d + k, j * d + i)];
                            }
                        }
                    }
                }
                c
            }
        }
    }

    /// Pauli transfer matrix over the normalized Hermitian basis.
    ///
    /// Real by construction for Hermiticity-preserving maps; the imaginary
    /// residue of the change of basis is discarded.
    pub fn to_ptm(&self) -> RMat {
        let d = self.dim;
        match &self.body {
            Body::Ptm(r) => r.clone(),
            _ => {
                let b = basis_change_matrix(d);
                let rc = b.adjoint() * self.to_superop() * b;
                RMat::from_fn(d * d, d * d, |i, j| rc[(i, j)].re)
            }
        }
    }

    /// Canonical Kraus operators from the Choi eigendecomposition.
    ///
    /// Eigenvalues below `eig_zero * tr(choi)` are discarded; operators are
    /// ordered by descending eigenvalue and the phase of each is fixed by
    /// making its largest-magnitude entry real positive.
    pub fn to_kraus(&self, tol: &Tolerances) -> Result<Vec<CMat>> {
        let d = self.dim;
        let choi = self.to_choi();
        let asym = herm_asymmetry(&choi);
        if asym > 1e-8 * (1.0 + choi.norm()) {
            return Err(Error::NotHermitian { asymmetry: asym });
        }
        let (vals, vecs) = hermitian_eigen(&choi);
        let cutoff = tol.eig_zero * choi.trace().re.abs().max(1.0);
        let mut ops = Vec::new();
        for (idx, &v) in vals.iter().enumerate() {
            if v <= cutoff {
                continue;
            }
            let col = vecs.column(idx).clone_owned();
            let mut k = unvec_col(&col, d).scale(v.sqrt());
            // deterministic phase: largest-magnitude entry real positive
            let mut best = (0usize, 0usize);
            let mut best_n = -1.0f64;
            for i in 0..d {
                for j in 0..d {
                    let n = k[(i, j)].norm();
                    if n > best_n + 1e-15 {
                        best_n = n;
                        best = (i, j);
                    }
                }
            }
            if best_n > 0.0 {
                let phase = k[best] / cr(best_n);
                k *= phase.conj();
            }
            ops.push(k);
        }
        if ops.is_empty() {
            return Err(Error::InvalidParameter { name: "choi", reason: "no eigenvalue above the rank cutoff".into() });
        }
        Ok(ops)
    }

    /// Apply the map to a d x d operator.
    pub fn apply(&self, x: &CMat) -> Result<CMat> {
        check_square(x.nrows(), x.ncols(), self.dim)?;
        let s = self.to_superop();
        Ok(unvec_col(&(s * vec_col(x)), self.dim))
    }

    /// Complete positivity test via the minimal Choi eigenvalue.
    ///
    /// Returns `(is_cp, min_eig)`; errors if the Choi matrix is not Hermitian
    /// within tolerance (a malformed, non-Hermiticity-preserving input).
    pub fn is_cp(&self, tol: &Tolerances) -> Result<(bool, f64)> {
        let choi = self.to_choi();
        let asym = herm_asymmetry(&choi);
        if asym > 1e-8 * (1.0 + choi.norm()) {
            return Err(Error::NotHermitian { asymmetry: asym });
        }
        let min_eig = crate::linalg::min_hermitian_eig(&choi);
        Ok((min_eig >= -tol.eig_zero, min_eig))
    }

    /// Trace-preservation test; returns `(is_tp, residual)` where the residual
    /// is the Frobenius norm of `Tr_out(choi) - 1`.
    pub fn is_tp(&self, tol: &Tolerances) -> (bool, f64) {
        let d = self.dim;
        let choi = self.to_choi();
        let mut residual2 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let mut s = cr(0.0);
                for k in 0..d {
                    s += choi[(i * d + k, j * d + k)];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                residual2 += (s - cr(expect)).norm_sqr();
            }
        }
        let residual = residual2.sqrt();
        (residual <= tol.tp_tol, residual)
    }

    /// Number of Choi eigenvalues above `eig_zero * tr(choi)`.
    pub fn kraus_rank(&self, tol: &Tolerances) -> Result<usize> {
        let (cp, min_eig) = self.is_cp(tol)?;
        if !cp {
            return Err(Error::NotCompletelyPositive { min_eig });
        }
        let choi = self.to_choi();
        let cutoff = tol.eig_zero * choi.trace().re.abs().max(1.0);
        let (vals, _) = hermitian_eigen(&choi);
        Ok(vals.iter().filter(|&&v| v > cutoff).count())
    }

    /// Composition `self ∘ other` (apply `other` first): PTM product.
    pub fn compose(&self, other: &ChannelRep) -> Result<ChannelRep> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        ChannelRep::from_ptm(self.dim, self.to_ptm() * other.to_ptm())
    }

    /// Signed determinant of the superoperator (equal to the PTM determinant).
    pub fn determinant(&self) -> f64 {
        self.to_ptm().determinant()
    }

    /// Checks CP and TP, returning the channel unchanged.
    pub fn validated(self, tol: &Tolerances) -> Result<Self> {
        let (cp, min_eig) = self.is_cp(tol)?;
        if !cp {
            return Err(Error::NotCompletelyPositive { min_eig });
        }
        let (tp, residual) = self.is_tp(tol);
        if !tp {
            return Err(Error::NotTracePreserving { residual });
        }
        Ok(self)
    }

    // ---- named constructors ----

    /// Identity channel.
    pub fn identity(dim: usize) -> Self {
        Self { dim, body: Body::Ptm(RMat::identity(dim * dim, dim * dim)) }
    }

    /// Unitary conjugation X -> U X U†.
    pub fn unitary(u: &CMat) -> Result<Self> {
        let d = u.nrows();
        check_square(d, u.ncols(), d)?;
        let resid = frob_dist_c(&(u.adjoint() * u), &CMat::identity(d, d));
        if resid > 1e-10 {
            return Err(Error::NotOrthonormal { residual: resid });
        }
        Self::from_kraus(d, vec![u.clone()])
    }

    /// Completely depolarizing channel `N[X] = (tr X) 1/d`.
    pub fn completely_depolarizing(dim: usize) -> Self {
        let mut ptm = RMat::zeros(dim * dim, dim * dim);
        ptm[(0, 0)] = 1.0;
        Self { dim, body: Body::Ptm(ptm) }
    }

    /// Depolarizing mixture D_q = q 1 + (1-q) N.
    pub fn depolarizing_mixture(dim: usize, q: f64) -> Result<Self> {
        let mut ptm = RMat::identity(dim * dim, dim * dim).scale(q);
        ptm[(0, 0)] = 1.0;
        Self::from_ptm(dim, ptm)?.validated(&Tolerances::default())
    }

    /// Optimal qubit NOT channel, PTM diag(1, -1/3, -1/3, -1/3).
    pub fn optimal_not() -> Self {
        Self::pauli_channel(-1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0).expect("E_NOT is a channel")
    }

    /// Qubit Pauli channel with PTM diag(1, e1, e2, e3); checked CP.
    pub fn pauli_channel(e1: f64, e2: f64, e3: f64) -> Result<Self> {
        let ptm = RMat::from_diagonal(&crate::linalg::RVec::from_vec(vec![1.0, e1, e2, e3]));
        Self::from_ptm(2, ptm)?.validated(&Tolerances::default())
    }

    /// Bit flip family diag(1, 1, λ, λ).
    pub fn bit_flip(lambda: f64) -> Result<Self> {
        Self::pauli_channel(1.0, lambda, lambda)
    }

    /// Bit-phase flip family diag(1, λ, 1, λ).
    pub fn bit_phase_flip(lambda: f64) -> Result<Self> {
        Self::pauli_channel(lambda, 1.0, lambda)
    }

    /// Phase flip family diag(1, λ, λ, 1).
    pub fn phase_flip(lambda: f64) -> Result<Self> {
        Self::pauli_channel(lambda, lambda, 1.0)
    }

    /// Collapse channel X -> (tr X) ρ0.
    pub fn collapse_to(rho0: &CMat) -> Result<Self> {
        let d = rho0.nrows();
        check_square(d, rho0.ncols(), d)?;
        let s = vec_col(rho0) * vec_col(&CMat::identity(d, d)).adjoint();
        Self::from_superop(d, s)
    }
}

fn frob_dist_c(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, cr, frob_dist_r, CMat};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn diag_ptm(e: [f64; 3]) -> ChannelRep {
        ChannelRep::pauli_channel(e[0], e[1], e[2]).unwrap()
    }

    #[test]
    fn choi_of_completely_depolarizing_is_maximally_mixed() {
        let n = ChannelRep::completely_depolarizing(2);
        let choi = n.to_choi();
        assert!(frob_dist_c(&choi, &CMat::identity(4, 4).scale(0.5)) < 1e-12);
    }

    #[test]
    fn choi_of_diag_1_0_0_034_matches_closed_form() {
        // diag(1, 0, 0, 3/4) has Choi diag(0.875, 0.125, 0.125, 0.875)
        let e = diag_ptm([0.0, 0.0, 0.75]);
        let choi = e.to_choi();
        let expect = CMat::from_diagonal(&crate::linalg::CVec::from_vec(vec![
            cr(0.875),
            cr(0.125),
            cr(0.125),
            cr(0.875),
        ]));
        assert!(frob_dist_c(&choi, &expect) < 1e-12);
    }

    #[test]
    fn identity_choi_is_rank_one_bell() {
        for d in [2usize, 3] {
            let id = ChannelRep::identity(d);
            let choi = id.to_choi();
            let (vals, _) = hermitian_eigen(&choi);
            assert!((vals[0] - d as f64).abs() < 1e-10);
            for v in &vals[1..] {
                assert!(v.abs() < 1e-10);
            }
            assert!((choi.trace().re - d as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn transposition_is_not_cp() {
        // PTM diag(1, 1, -1, 1): transposition in the computational basis.
        // Oracle: its Choi matrix is the SWAP operator, eigenvalues ±1.
        let t = ChannelRep::from_ptm(2, RMat::from_diagonal(&crate::linalg::RVec::from_vec(vec![1.0, 1.0, -1.0, 1.0]))).unwrap();
        let choi = t.to_choi();
        let mut swap = CMat::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                swap[(i * 2 + j, j * 2 + i)] = cr(1.0);
            }
        }
        assert!(frob_dist_c(&choi, &swap) < 1e-12);
        let (cp, min_eig) = t.is_cp(&tol()).unwrap();
        assert!(!cp);
        assert!((min_eig + 1.0).abs() < 1e-10);
    }

    #[test]
    fn e_not_is_cp_with_rank_three() {
        let e = ChannelRep::optimal_not();
        let (cp, _) = e.is_cp(&tol()).unwrap();
        assert!(cp);
        assert_eq!(e.kraus_rank(&tol()).unwrap(), 3);
    }

    #[test]
    fn identity_has_kraus_rank_one_and_depolarizing_d_squared() {
        assert_eq!(ChannelRep::identity(2).kraus_rank(&tol()).unwrap(), 1);
        for d in [2usize, 3] {
            assert_eq!(ChannelRep::completely_depolarizing(d).kraus_rank(&tol()).unwrap(), d * d);
        }
    }

    #[test]
    fn compose_known_channel_identities() {
        let e_not = ChannelRep::optimal_not();
        let sq = e_not.compose(&e_not).unwrap();
        let expect = diag_ptm([1.0 / 9.0, 1.0 / 9.0, 1.0 / 9.0]);
        assert!(frob_dist_r(&sq.to_ptm(), &expect.to_ptm()) < 1e-12);

        let n = ChannelRep::completely_depolarizing(2);
        let nn = n.compose(&n).unwrap();
        assert!(frob_dist_r(&nn.to_ptm(), &n.to_ptm()) < 1e-14);

        // U ∘ U† = 1
        let u = CMat::from_row_slice(2, 2, &[
            cr(1.0 / 2.0f64.sqrt()), cr(1.0 / 2.0f64.sqrt()),
            c(0.0, 1.0 / 2.0f64.sqrt()), c(0.0, -1.0 / 2.0f64.sqrt()),
        ]);
        let cu = ChannelRep::unitary(&u).unwrap();
        let cud = ChannelRep::unitary(&u.adjoint().clone_owned()).unwrap();
        let prod = cu.compose(&cud).unwrap();
        assert!(frob_dist_r(&prod.to_ptm(), &RMat::identity(4, 4)) < 1e-12);
    }

    #[test]
    fn compose_with_identity_is_exact() {
        let e = diag_ptm([0.3, -0.2, 0.5]);
        let id = ChannelRep::identity(2);
        assert!(frob_dist_r(&e.compose(&id).unwrap().to_ptm(), &e.to_ptm()) < 1e-12);
    }

    #[test]
    fn determinant_examples() {
        assert!((diag_ptm([0.5, 0.25, 0.1]).determinant() - 0.5 * 0.25 * 0.1).abs() < 1e-12);
        assert!((ChannelRep::optimal_not().determinant() + 1.0 / 27.0).abs() < 1e-12);
        assert!(ChannelRep::completely_depolarizing(2).determinant().abs() < 1e-14);
    }

    #[test]
    fn depolarizing_power_matches_nth_root_construction() {
        let q = (1.0f64 / 9.0).powf(1.0 / 3.0);
        let dq = ChannelRep::depolarizing_mixture(2, q).unwrap();
        let cubed = dq.compose(&dq).unwrap().compose(&dq).unwrap();
        let expect = diag_ptm([1.0 / 9.0, 1.0 / 9.0, 1.0 / 9.0]);
        assert!(frob_dist_r(&cubed.to_ptm(), &expect.to_ptm()) < 1e-12);
    }

    #[test]
    fn pauli_1_0_0_0_is_completely_depolarizing_and_bitflip_1_is_identity() {
        let p = diag_ptm([0.0, 0.0, 0.0]);
        assert!(frob_dist_r(&p.to_ptm(), &ChannelRep::completely_depolarizing(2).to_ptm()) < 1e-14);
        let b = ChannelRep::bit_flip(1.0).unwrap();
        assert!(frob_dist_r(&b.to_ptm(), &RMat::identity(4, 4)) < 1e-14);
    }

    #[test]
    fn constructor_rejects_out_of_range_parameters() {
        match ChannelRep::pauli_channel(1.0, 1.0, -1.0) {
            Err(Error::NotCompletelyPositive { min_eig }) => assert!(min_eig < -0.4),
            other => panic!("expected NotCompletelyPositive, got {other:?}"),
        }
        assert!(ChannelRep::depolarizing_mixture(2, 1.2).is_err());
    }

    #[test]
    fn conversions_round_trip_on_constructed_channels() {
        let t = tol();
        let chans = [
            ChannelRep::identity(2),
            ChannelRep::completely_depolarizing(2),
            ChannelRep::optimal_not(),
            diag_ptm([0.7, 0.2, 0.4]),
        ];
        for ch in &chans {
            let ptm = ch.to_ptm();
            let via_choi = ChannelRep::from_choi(2, ch.to_choi()).unwrap().to_ptm();
            assert!(frob_dist_r(&ptm, &via_choi) < 1e-12);
            let via_kraus = ChannelRep::from_kraus(2, ch.to_kraus(&t).unwrap()).unwrap().to_ptm();
            assert!(frob_dist_r(&ptm, &via_kraus) < 1e-10);
            let via_superop = ChannelRep::from_superop(2, ch.to_superop()).unwrap().to_ptm();
            assert!(frob_dist_r(&ptm, &via_superop) < 1e-12);
        }
    }

    #[test]
    fn kraus_extraction_is_deterministic() {
        let ch = diag_ptm([0.6, 0.5, 0.4]);
        let a = ch.to_kraus(&tol()).unwrap();
        let b = ch.to_kraus(&tol()).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn kraus_closure_after_choi_conversion() {
        let ch = diag_ptm([0.6, 0.5, 0.4]);
        let ks = ChannelRep::from_choi(2, ch.to_choi()).unwrap().to_kraus(&tol()).unwrap();
        let mut closure = CMat::zeros(2, 2);
        for k in &ks {
            closure += k.adjoint() * k;
        }
        assert!(frob_dist_c(&closure, &CMat::identity(2, 2)) < 1e-10);
    }

    #[test]
    fn collapse_channel_is_cptp() {
        let rho = CMat::from_row_slice(2, 2, &[cr(0.8), cr(0.0), cr(0.0), cr(0.2)]);
        let ch = ChannelRep::collapse_to(&rho).unwrap().validated(&tol()).unwrap();
        assert_eq!(ch.kraus_rank(&tol()).unwrap(), 4);
    }
}
