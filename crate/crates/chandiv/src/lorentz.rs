//! Qubit Lorentz normal forms.
//!
//! Every qubit channel factors as E = T_2 ∘ M ∘ T_1 where T_1, T_2 are Kraus
//! rank one maps (invertible local filters, not necessarily trace preserving)
//! and the middle form M is either a Pauli channel (diagonal PTM) or the
//! non-diagonal family
//!
//! ```text
//!             [ 1        0        0     z     ]
//! M(v,x,z) =  [ 0    x f(v,z)     0     0     ]     f(v,z) = sqrt(1+v-z-vz)
//!             [ 0        0    x f(v,z)  0     ]
//!             [ v        0        0   v-z+1   ]
//! ```
//!
//! The split between the two cases is read off the matrix N = G R^T G R with
//! R = PTM(E) Φ_T, G = diag(1,-1,-1,-1), Φ_T = diag(1,1,-1,1): R = L_2 Σ L_1^T
//! for proper orthochronous Lorentz L_i, and N = W (G Σ^T G Σ) W^-1 with
//! W = L_1^{-T}. A diagonalizable N with real spectrum and a timelike
//! eigenvector gives the diagonal form; a defective N (Jordan block on a
//! lightlike eigenvector) gives M(v,x,z).

use crate::chanrep::{ChannelRep, Tolerances};
use crate::error::{Error, Result};
use crate::linalg::{RMat, RVec};

/// Parameters of the non-diagonal normal form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MParams {
    pub v: f64,
    pub x: f64,
    pub z: f64,
}

/// Case regions of the non-diagonal form, with their Kraus-rank table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MCase {
    /// z in [0,1), v in (-1,z], |x| < 1: rank 3 for v < z, rank 2 for v = z.
    I,
    /// z in [0,1), v in (-1,z], x = ±1: rank 2 for v < z, rank 1 for v = z.
    II,
    /// z in [0,1), v = -1, x = 0: rank 2.
    III,
    /// z = 1, x = 0, v in [-1,1]: rank 2 for |v| < 1, rank 1 for |v| = 1.
    IV,
}

/// Diagonal-versus-non-diagonal decision, with an explicit indeterminate
/// state for borderline defective spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormDecision {
    Diagonal,
    NonDiagonal,
    Indeterminate,
}

/// Kind of a successfully extracted normal form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormKind {
    Diagonal,
    NonDiagonal,
}

/// A qubit Lorentz normal form E = T_2 M T_1.
#[derive(Debug, Clone)]
pub struct LorentzNormalForm {
    pub kind: FormKind,
    /// Σ entries (s0, s1, s2, s3) with s0 >= s1 >= s2 >= |s3|, when diagonal.
    pub diagonal_entries: Option<[f64; 4]>,
    /// (v, x, z) parameters, when non-diagonal.
    pub params: Option<MParams>,
    /// Matched case region, when non-diagonal.
    pub case: Option<MCase>,
    /// PTM of the left flank T_2 (applied last).
    pub t2: RMat,
    /// PTM of the right flank T_1 (applied first).
    pub t1: RMat,
    /// The middle form M as a map (PTM body). CP, with `M[0][0] = 1`; trace
    /// preserving only when its top row is (1,0,0,0).
    pub normal_channel: ChannelRep,
    /// Frobenius norm of t2 * PTM(M) * t1 - PTM(input).
    pub reconstruction_error: f64,
}

const DIM: usize = 4;

fn metric() -> RMat {
    RMat::from_diagonal(&RVec::from_vec(vec![1.0, -1.0, -1.0, -1.0]))
}

fn phi_t() -> RMat {
    RMat::from_diagonal(&RVec::from_vec(vec![1.0, 1.0, -1.0, 1.0]))
}

fn f_of(v: f64, z: f64) -> f64 {
    (1.0 + v - z - v * z).max(0.0).sqrt()
}

/// The case region containing `p`, if any. Boundary membership (v = z,
/// |x| = 1, z = 1, v = ±1) is decided within `band`.
pub fn m_case_of(p: &MParams, band: f64) -> Option<MCase> {
    let MParams { v, x, z } = *p;
    let in_z = z >= -band && z < 1.0 - band;
    let z_is_one = (z - 1.0).abs() <= band;
    let x_is_unit = (x.abs() - 1.0).abs() <= band;
    let x_is_zero = x.abs() <= band;
    let v_is_neg_one = (v + 1.0).abs() <= band;
    if z_is_one && x_is_zero && (-1.0 - band..=1.0 + band).contains(&v) {
        return Some(MCase::IV);
    }
    if in_z && v_is_neg_one && x_is_zero {
        return Some(MCase::III);
    }
    let in_v = v > -1.0 + band && v <= z + band;
    if in_z && in_v && x_is_unit {
        return Some(MCase::II);
    }
    if in_z && in_v && x.abs() < 1.0 - band {
        return Some(MCase::I);
    }
    None
}

/// Kraus rank predicted by the case table.
pub fn case_table_rank(p: &MParams, band: f64) -> Option<usize> {
    let case = m_case_of(p, band)?;
    let v_eq_z = (p.v - p.z).abs() <= band;
    Some(match case {
        MCase::I => {
            if v_eq_z {
                2
            } else {
                3
            }
        }
        MCase::II => {
            if v_eq_z {
                1
            } else {
                2
            }
        }
        MCase::III => 2,
        MCase::IV => {
            if (p.v.abs() - 1.0).abs() <= band {
                1
            } else {
                2
            }
        }
    })
}

/// Raw PTM of M(v, x, z) exactly as displayed.
pub fn m_form_ptm(p: &MParams) -> RMat {
    let f = f_of(p.v, p.z);
    RMat::from_row_slice(4, 4, &[
        1.0, 0.0, 0.0, p.z,
        0.0, p.x * f, 0.0, 0.0,
        0.0, 0.0, p.x * f, 0.0,
        p.v, 0.0, 0.0, p.v - p.z + 1.0,
    ])
}

/// Builds M(v, x, z) as a verified-CP map.
///
/// Outside every case region the error reports the most negative Choi
/// eigenvalue of the candidate matrix.
pub fn make_m_form(p: &MParams) -> Result<ChannelRep> {
    let band = 1e-12;
    let ch = ChannelRep::from_ptm(2, m_form_ptm(p))?;
    let tol = Tolerances::default();
    let (cp, min_eig) = ch.is_cp(&tol)?;
    if m_case_of(p, band).is_none() {
        return Err(Error::InvalidParameter {
            name: "m_params",
            reason: format!(
                "(v, x, z) = ({}, {}, {}) lies outside cases i-iv; min Choi eigenvalue {min_eig:.6e}",
                p.v, p.x, p.z
            ),
        });
    }
    if !cp {
        return Err(Error::NotCompletelyPositive { min_eig });
    }
    Ok(ch)
}

/// The Kraus-rank-2 split M(v, x, z) = M(v, 1, z) diag(1, x, x, 1).
pub fn split_m_form(p: &MParams) -> Result<(ChannelRep, ChannelRep)> {
    make_m_form(p)?;
    let left = ChannelRep::from_ptm(2, m_form_ptm(&MParams { v: p.v, x: 1.0, z: p.z }))?;
    let right = ChannelRep::from_ptm(
        2,
        RMat::from_diagonal(&RVec::from_vec(vec![1.0, p.x, p.x, 1.0])),
    )?;
    let tol = Tolerances::default();
    for part in [&left, &right] {
        let (cp, min_eig) = part.is_cp(&tol)?;
        if !cp {
            return Err(Error::NotCompletelyPositive { min_eig });
        }
        let rank = part.kraus_rank(&tol)?;
        if rank > 2 {
            return Err(Error::RankTooHigh { rank, max: 2 });
        }
    }
    Ok((left, right))
}

// ---------------------------------------------------------------------------
// spectral analysis of N = G R^T G R
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct Cluster {
    value: f64,
    mult: usize,
    nullity: usize,
    /// Euclidean-orthonormal basis of the (N - value)-nullspace.
    basis: Vec<RVec>,
}

#[derive(Debug)]
struct Spectral {
    n: RMat,
    scale: f64,
    clusters: Vec<Cluster>,
    max_imag: f64,
    gray: bool,
}

fn nullspace(m: &RMat, cutoff: f64) -> Vec<RVec> {
    // pad wide matrices to square: the thin SVD only spans the row space
    let square = if m.nrows() < m.ncols() {
        let mut p = RMat::zeros(m.ncols(), m.ncols());
        p.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = square.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let mut out = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s < cutoff {
            out.push(vt.row(i).transpose().clone_owned());
        }
    }
    out
}

fn analyze(r: &RMat) -> Spectral {
    let g = metric();
    let n = &g * r.transpose() * &g * r;
    let scale = n.norm().max(1.0);
    let eigs = n.complex_eigenvalues();
    let max_imag = eigs.iter().map(|e| e.im.abs()).fold(0.0, f64::max);

    let mut re: Vec<f64> = eigs.iter().map(|e| e.re).collect();
    re.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let cluster_tol = 1e-7 * scale;
    let mut gray = false;
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for &v in &re {
        match groups.last_mut() {
            Some((center, count)) if (v - *center).abs() <= cluster_tol => {
                *center = (*center * *count as f64 + v) / (*count as f64 + 1.0);
                *count += 1;
            }
            _ => groups.push((v, 1)),
        }
    }
    // clusters separated by less than an order of magnitude above the merge
    // tolerance are ambiguous
    for w in groups.windows(2) {
        let gap = w[1].0 - w[0].0;
        if gap < 10.0 * cluster_tol {
            gray = true;
        }
    }

    let null_tol = 1e-9 * scale.max(1e-6);
    let mut clusters = Vec::new();
    for (value, mult) in groups {
        let shifted = &n - RMat::identity(DIM, DIM).scale(value);
        let svd = shifted.clone().svd(false, true);
        let vt = svd.v_t.expect("requested");
        let mut basis = Vec::new();
        for (i, &s) in svd.singular_values.iter().enumerate() {
            if s < null_tol {
                basis.push(vt.row(i).transpose().clone_owned());
            } else if s < 1e-6 * scale.max(1e-6) {
                gray = true;
            }
        }
        clusters.push(Cluster { value, mult, nullity: basis.len(), basis });
    }
    Spectral { n, scale, clusters, max_imag, gray }
}

fn is_semisimple(sp: &Spectral) -> bool {
    sp.max_imag <= 1e-9 * sp.scale && sp.clusters.iter().all(|c| c.nullity >= c.mult)
}

fn is_defective(sp: &Spectral) -> bool {
    sp.max_imag <= 1e-6 * sp.scale && sp.clusters.iter().any(|c| c.nullity < c.mult)
}

/// Diagonal-form decision from the spectral structure of G R^T G R.
pub fn is_diagonal_form(e: &ChannelRep, tol: &Tolerances) -> Result<FormDecision> {
    check_qubit_cptp(e, tol)?;
    let ptm = e.to_ptm();
    if ptm_rank_one(&ptm) {
        // collapse channel; pure targets are the degenerate non-diagonal cases
        let b = bloch_of_collapse(&ptm);
        return Ok(if b.norm() >= 1.0 - 1e-9 { FormDecision::NonDiagonal } else { FormDecision::Diagonal });
    }
    let r = ptm * phi_t();
    let sp = analyze(&r);
    if is_semisimple(&sp) {
        if timelike_structure_ok(&sp) {
            return Ok(FormDecision::Diagonal);
        }
        return Ok(if sp.gray { FormDecision::Indeterminate } else { FormDecision::NonDiagonal });
    }
    if is_defective(&sp) && !sp.gray {
        return Ok(FormDecision::NonDiagonal);
    }
    Ok(FormDecision::Indeterminate)
}

fn timelike_structure_ok(sp: &Spectral) -> bool {
    let g = metric();
    let mut timelike = 0usize;
    for c in &sp.clusters {
        if c.basis.is_empty() {
            continue;
        }
        match gram_split(&c.basis, &g, sp.scale) {
            Some((plus, _minus)) => timelike += plus.len(),
            None => return false,
        }
    }
    timelike == 1
}

/// G-orthonormalizes a cluster basis; returns (timelike, spacelike) vectors
/// with G-norms +1 / -1, or None when the restricted metric is near-singular
/// (lightlike content).
fn gram_split(basis: &[RVec], g: &RMat, scale: f64) -> Option<(Vec<RVec>, Vec<RVec>)> {
    let k = basis.len();
    let mut v = RMat::zeros(DIM, k);
    for (j, b) in basis.iter().enumerate() {
        v.set_column(j, b);
    }
    let gram = v.transpose() * g * &v;
    let se = gram.symmetric_eigen();
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for i in 0..k {
        let theta = se.eigenvalues[i];
        if theta.abs() < 1e-9 * scale.max(1e-3) {
            return None;
        }
        let dir = &v * se.eigenvectors.column(i).clone_owned();
        let w = dir.unscale(theta.abs().sqrt());
        if theta > 0.0 {
            plus.push(w);
        } else {
            minus.push(w);
        }
    }
    Some((plus, minus))
}

fn check_qubit_cptp(e: &ChannelRep, tol: &Tolerances) -> Result<()> {
    if e.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: e.dim() });
    }
    let (cp, min_eig) = e.is_cp(tol)?;
    if !cp {
        return Err(Error::NotCompletelyPositive { min_eig });
    }
    let (tp, residual) = e.is_tp(tol);
    if !tp {
        return Err(Error::NotTracePreserving { residual });
    }
    Ok(())
}

fn ptm_rank_one(ptm: &RMat) -> bool {
    let svd = ptm.clone().svd(false, false);
    svd.singular_values.iter().filter(|&&s| s > 1e-9).count() == 1
}

fn bloch_of_collapse(ptm: &RMat) -> nalgebra::Vector3<f64> {
    nalgebra::Vector3::new(ptm[(1, 0)], ptm[(2, 0)], ptm[(3, 0)])
}

// ---------------------------------------------------------------------------
// normal-form extraction
// ---------------------------------------------------------------------------

/// Extracts the Lorentz normal form of a qubit channel.
pub fn normal_form(e: &ChannelRep, tol: &Tolerances) -> Result<LorentzNormalForm> {
    check_qubit_cptp(e, tol)?;
    let ptm = e.to_ptm();

    if ptm_rank_one(&ptm) {
        let b = bloch_of_collapse(&ptm);
        if b.norm() >= 1.0 - 1e-9 {
            return collapse_to_pure_form(&ptm, b);
        }
        // collapse onto a mixed state falls through to the diagonal route
    }

    let r = ptm.clone() * phi_t();
    let sp = analyze(&r);

    if is_semisimple(&sp) && timelike_structure_ok(&sp) {
        return diagonal_route(&ptm, &r, &sp);
    }
    let mut last_nondiag_err = None;
    if is_defective(&sp) {
        match nondiagonal_route(&ptm, &r, &sp) {
            Ok(form) => return Ok(form),
            Err(e) => last_nondiag_err = Some(e),
        }
    }
    if sp.gray || sp.max_imag > 1e-9 * sp.scale {
        // borderline: try both routes before giving up
        if let Ok(form) = diagonal_route(&ptm, &r, &sp) {
            return Ok(form);
        }
        if last_nondiag_err.is_none() {
            match nondiagonal_route(&ptm, &r, &sp) {
                Ok(form) => return Ok(form),
                Err(e) => last_nondiag_err = Some(e),
            }
        }
        return Err(Error::Indeterminate {
            details: format!(
                "eigenvalue clusters of G R^T G R are too close to decide defectiveness (max imag {:.3e}; {})",
                sp.max_imag,
                last_nondiag_err.map_or_else(|| "no defective-route attempt".to_string(), |e| e.to_string()),
            ),
        });
    }
    Err(Error::NormalFormExtraction {
        details: format!(
            "spectrum of G R^T G R matches neither the diagonal nor the M(v,x,z) structure ({})",
            last_nondiag_err.map_or_else(|| "no defective-route attempt".to_string(), |e| e.to_string()),
        ),
    })
}

fn diagonal_route(ptm: &RMat, r: &RMat, sp: &Spectral) -> Result<LorentzNormalForm> {
    let g = metric();
    let mut timelike: Option<(f64, RVec)> = None;
    let mut spacelike: Vec<(f64, RVec)> = Vec::new();
    for c in &sp.clusters {
        if c.basis.is_empty() {
            continue;
        }
        let (plus, minus) = gram_split(&c.basis, &g, sp.scale).ok_or_else(|| Error::NormalFormExtraction {
            details: "lightlike eigenvector in a nominally diagonalizable spectrum".into(),
        })?;
        for w in plus {
            if timelike.is_some() {
                return Err(Error::NormalFormExtraction { details: "more than one timelike eigenvector".into() });
            }
            timelike = Some((c.value, w));
        }
        for w in minus {
            spacelike.push((c.value, w));
        }
    }
    let (lam0, mut w0) = timelike.ok_or_else(|| Error::NormalFormExtraction { details: "no timelike eigenvector".into() })?;
    if spacelike.len() != 3 {
        return Err(Error::NormalFormExtraction {
            details: format!("expected 3 spacelike eigenvectors, found {}", spacelike.len()),
        });
    }
    spacelike.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    if w0[0] < 0.0 {
        w0 = -w0;
    }
    let mut w = RMat::zeros(4, 4);
    w.set_column(0, &w0);
    for (j, (_, ws)) in spacelike.iter().enumerate() {
        w.set_column(j + 1, ws);
    }
    if w.determinant() < 0.0 {
        let flipped = -w.column(3).clone_owned();
        w.set_column(3, &flipped);
    }

    let mut s = [
        lam0.max(0.0).sqrt(),
        spacelike[0].0.max(0.0).sqrt(),
        spacelike[1].0.max(0.0).sqrt(),
        spacelike[2].0.max(0.0).sqrt(),
    ];
    let det_r = r.determinant();
    if s[3] > 1e-9 && det_r < 0.0 {
        s[3] = -s[3];
    }
    if s[0] < 1e-12 {
        return Err(Error::NormalFormExtraction { details: "vanishing timelike singular value".into() });
    }

    let p = r * &w;
    let mut l2 = RMat::zeros(4, 4);
    let mut free_cols = Vec::new();
    for (j, sj) in s.iter_mut().enumerate() {
        if sj.abs() > 1e-9 * sp.scale.max(1e-3).sqrt() {
            l2.set_column(j, &(p.column(j) / *sj));
        } else {
            *sj = 0.0;
            free_cols.push(j);
        }
    }
    complete_lorentz_columns(&mut l2, &free_cols, &g)?;
    if l2.determinant() < 0.0 {
        if let Some(&j) = free_cols.last() {
            let flipped = -l2.column(j).clone_owned();
            l2.set_column(j, &flipped);
        }
    }
    validate_lorentz(&l2, &g, 1e-7 * sp.scale.max(1.0))?;

    let w_inv = w.clone().try_inverse().ok_or_else(|| Error::NormalFormExtraction { details: "singular W".into() })?;
    let phi = phi_t();
    let t1 = &phi * &w_inv * &phi;
    let t2 = l2.scale(s[0]);
    let m_ptm = RMat::from_diagonal(&RVec::from_vec(vec![1.0, s[1] / s[0], -s[2] / s[0], s[3] / s[0]]));
    let recon = &t2 * &m_ptm * &t1;
    let err = (recon - ptm).norm();
    if err > 1e-8 * (1.0 + ptm.norm()) {
        return Err(Error::NormalFormExtraction { details: format!("diagonal reconstruction residual {err:.3e}") });
    }
    Ok(LorentzNormalForm {
        kind: FormKind::Diagonal,
        diagonal_entries: Some(s),
        params: None,
        case: None,
        t2,
        t1,
        normal_channel: ChannelRep::from_ptm(2, m_ptm)?,
        reconstruction_error: err,
    })
}

/// Fills the listed columns with G-orthonormal spacelike completions.
fn complete_lorentz_columns(l: &mut RMat, free: &[usize], g: &RMat) -> Result<()> {
    for &col in free {
        let mut found = false;
        for cand in 0..4usize {
            let mut v = RVec::zeros(4);
            v[cand] = 1.0;
            for j in 0..4 {
                if free.contains(&j) && j >= col {
                    continue;
                }
                let wj = l.column(j).clone_owned();
                let nj = (wj.transpose() * g * &wj)[(0, 0)];
                if nj.abs() < 1e-12 {
                    continue;
                }
                let proj = (wj.transpose() * g * &v)[(0, 0)] / nj;
                v -= wj * proj;
            }
            let norm2 = (v.transpose() * g * &v)[(0, 0)];
            if norm2 < -1e-10 {
                l.set_column(col, &(v / (-norm2).sqrt()));
                found = true;
                break;
            }
        }
        if !found {
            return Err(Error::NormalFormExtraction { details: "failed to complete Lorentz columns".into() });
        }
    }
    Ok(())
}

fn validate_lorentz(l: &RMat, g: &RMat, tol: f64) -> Result<()> {
    let resid = (l.transpose() * g * l - g).norm();
    if resid > tol.max(1e-8) {
        return Err(Error::NormalFormExtraction { details: format!("flank is not Lorentz (residual {resid:.3e})") });
    }
    if l[(0, 0)] < 0.0 {
        return Err(Error::NormalFormExtraction { details: "flank is antichronous".into() });
    }
    Ok(())
}

fn collapse_to_pure_form(ptm: &RMat, b: nalgebra::Vector3<f64>) -> Result<LorentzNormalForm> {
    // E[X] = (tr X) |psi><psi| = T_2 ∘ M(-1, 0, 0): M(-1,0,0) collapses onto
    // Bloch (0,0,-1) and T_2 rotates (0,0,-1) onto the target axis.
    let n = b.normalize();
    let o = rotation_taking(nalgebra::Vector3::new(0.0, 0.0, -1.0), n);
    let mut t2 = RMat::identity(4, 4);
    for i in 0..3 {
        for j in 0..3 {
            t2[(i + 1, j + 1)] = o[(i, j)];
        }
    }
    let params = MParams { v: -1.0, x: 0.0, z: 0.0 };
    let m_ptm = m_form_ptm(&params);
    let t1 = RMat::identity(4, 4);
    let recon = &t2 * &m_ptm * &t1;
    let err = (recon - ptm).norm();
    if err > 1e-8 * (1.0 + ptm.norm()) {
        return Err(Error::NormalFormExtraction { details: format!("collapse reconstruction residual {err:.3e}") });
    }
    Ok(LorentzNormalForm {
        kind: FormKind::NonDiagonal,
        diagonal_entries: None,
        params: Some(params),
        case: Some(MCase::III),
        t2,
        t1,
        normal_channel: ChannelRep::from_ptm(2, m_ptm)?,
        reconstruction_error: err,
    })
}

fn rotation_taking(a: nalgebra::Vector3<f64>, b: nalgebra::Vector3<f64>) -> nalgebra::Matrix3<f64> {
    let dot = a.dot(&b).clamp(-1.0, 1.0);
    if dot > 1.0 - 1e-12 {
        return nalgebra::Matrix3::identity();
    }
    if dot < -1.0 + 1e-12 {
        // rotate by pi about any axis orthogonal to a
        let axis = if a.x.abs() < 0.9 {
            a.cross(&nalgebra::Vector3::x()).normalize()
        } else {
            a.cross(&nalgebra::Vector3::y()).normalize()
        };
        return nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), std::f64::consts::PI)
            .into_inner();
    }
    let axis = nalgebra::Unit::new_normalize(a.cross(&b));
    nalgebra::Rotation3::from_axis_angle(&axis, dot.acos()).into_inner()
}

// -------------------- non-diagonal (defective) route ----------------------

fn nondiagonal_route(ptm: &RMat, r: &RMat, sp: &Spectral) -> Result<LorentzNormalForm> {
    let g = metric();
    let n = &sp.n;
    let fail = |d: &str| Error::NormalFormExtraction { details: format!("non-diagonal route: {d}") };

    // locate the defective (Jordan) cluster and the semisimple one
    let (mu, nu, single_cluster) = match sp.clusters.len() {
        1 => (sp.clusters[0].value, sp.clusters[0].value, true),
        2 => {
            let (a, b) = (&sp.clusters[0], &sp.clusters[1]);
            let (def, other) = if a.nullity < a.mult { (a, b) } else { (b, a) };
            if def.nullity >= def.mult {
                return Err(fail("no defective cluster"));
            }
            (def.value, other.value, false)
        }
        _ => return Err(fail("more than two eigenvalue clusters")),
    };
    if mu < 1e-10 * sp.scale {
        return Err(fail("Jordan eigenvalue vanishes (degenerate case iii/iv input)"));
    }

    // invariant plane carrying the Jordan block
    let (e1, e2) = if single_cluster {
        let shifted = n - RMat::identity(4, 4).scale(mu);
        let svd = shifted.clone().svd(true, true);
        let u = svd.u.as_ref().ok_or_else(|| fail("svd"))?;
        let vt = svd.v_t.as_ref().ok_or_else(|| fail("svd"))?;
        // rank-one nilpotent: image direction and co-kernel direction
        let p = u.column(0).clone_owned();
        let q = vt.row(0).transpose().clone_owned();
        orthonormal_plane(&p, &q).ok_or_else(|| fail("nilpotent image and co-kernel are parallel"))?
    } else {
        let shifted = n - RMat::identity(4, 4).scale(nu);
        let sq = &shifted * &shifted;
        let svd = sq.clone().svd(true, false);
        let u = svd.u.as_ref().ok_or_else(|| fail("svd"))?;
        if svd.singular_values[1] < 1e-9 * sp.scale {
            return Err(fail("invariant plane is rank deficient"));
        }
        (u.column(0).clone_owned(), u.column(1).clone_owned())
    };

    // null rays of the restricted metric
    let mut v2 = RMat::zeros(4, 2);
    v2.set_column(0, &e1);
    v2.set_column(1, &e2);
    let gram = v2.transpose() * &g * &v2;
    let se = gram.symmetric_eigen();
    let (tp, tm, qp, qm) = {
        let (a, b) = (se.eigenvalues[0], se.eigenvalues[1]);
        if a >= b {
            (a, b, se.eigenvectors.column(0).clone_owned(), se.eigenvectors.column(1).clone_owned())
        } else {
            (b, a, se.eigenvectors.column(1).clone_owned(), se.eigenvectors.column(0).clone_owned())
        }
    };
    if !(tp > 1e-11 * sp.scale.max(1e-3)) || !(tm < -1e-11 * sp.scale.max(1e-3)) {
        return Err(fail("Jordan plane is not of signature (+,-)"));
    }
    let ca = tm.abs().sqrt();
    let cb = tp.sqrt();
    let null_a = &v2 * (qp.scale(ca) + qm.scale(cb));
    let null_b = &v2 * (qp.scale(ca) - qm.scale(cb));

    // the Jordan kernel direction inside the plane
    let shifted = n - RMat::identity(4, 4).scale(mu);
    let k_a = (&shifted * &null_a).norm();
    let k_b = (&shifted * &null_b).norm();
    let (mut u_ker, mut u_other) = if k_a <= k_b { (null_a, null_b) } else { (null_b, null_a) };

    // deterministic lightcone gauge: equal time components
    if u_ker[0].abs() < 1e-9 || u_other[0].abs() < 1e-9 {
        return Err(fail("lightlike eigenvector has vanishing time component"));
    }
    u_ker /= u_ker[0];
    u_other /= u_other[0];
    let q_ip = (u_ker.transpose() * &g * &u_other)[(0, 0)];
    if q_ip <= 1e-12 {
        return Err(fail("degenerate lightcone pairing"));
    }
    let sc = (2.0 / q_ip).sqrt();
    let u_ker = u_ker.scale(sc);
    let u_other = u_other.scale(sc);
    let w0 = (&u_ker + &u_other).scale(0.5);
    let w3_base = (&u_other - &u_ker).scale(0.5);

    // spacelike partner plane
    let s_nu: (RVec, RVec) = if single_cluster {
        let mut constraints = RMat::zeros(2, 4);
        constraints.set_row(0, &(w0.transpose() * &g));
        constraints.set_row(1, &(w3_base.transpose() * &g));
        let ns = nullspace(&constraints, 1e-8);
        if ns.len() != 2 {
            return Err(fail("G-orthocomplement of the Jordan plane is not 2-dimensional"));
        }
        (ns[0].clone(), ns[1].clone())
    } else {
        let shifted_nu = n - RMat::identity(4, 4).scale(nu);
        let ns = nullspace(&shifted_nu, 1e-7 * sp.scale.max(1e-3));
        if ns.len() < 2 {
            return Err(fail("semisimple cluster eigenspace is not 2-dimensional"));
        }
        (ns[0].clone(), ns[1].clone())
    };
    let mut vn = RMat::zeros(4, 2);
    vn.set_column(0, &s_nu.0);
    vn.set_column(1, &s_nu.1);
    let gram_nu = vn.transpose() * &g * &vn;
    let se_nu = gram_nu.symmetric_eigen();
    if se_nu.eigenvalues[0] > -1e-11 * sp.scale.max(1e-3) || se_nu.eigenvalues[1] > -1e-11 * sp.scale.max(1e-3) {
        return Err(fail("partner plane is not spacelike"));
    }
    let w1_base = (&vn * se_nu.eigenvectors.column(0).clone_owned()).unscale(se_nu.eigenvalues[0].abs().sqrt());
    let w2_base = (&vn * se_nu.eigenvectors.column(1).clone_owned()).unscale(se_nu.eigenvalues[1].abs().sqrt());

    // discrete sign/orientation search; validated by full reconstruction
    let mut best: Option<LorentzNormalForm> = None;
    let mut rejections: Vec<String> = Vec::new();
    for &swap in &[false, true] {
        for &(s1, s2, s3) in &[
            (1.0, 1.0, 1.0),
            (1.0, 1.0, -1.0),
            (1.0, -1.0, 1.0),
            (-1.0, 1.0, 1.0),
            (1.0, -1.0, -1.0),
            (-1.0, 1.0, -1.0),
            (-1.0, -1.0, 1.0),
            (-1.0, -1.0, -1.0),
        ] {
            let (c1, c2) = if swap { (&w2_base, &w1_base) } else { (&w1_base, &w2_base) };
            let mut w = RMat::zeros(4, 4);
            w.set_column(0, &w0);
            w.set_column(1, &c1.scale(s1));
            w.set_column(2, &c2.scale(s2));
            w.set_column(3, &w3_base.scale(s3));
            if w.determinant() < 0.0 {
                continue;
            }
            match try_nondiagonal_candidate(ptm, r, n, &w, sp.scale) {
                Ok(form) => {
                    if best.as_ref().is_none_or(|b| form.reconstruction_error < b.reconstruction_error) {
                        best = Some(form);
                    }
                }
                Err(e) => {
                    if rejections.len() < 4 {
                        rejections.push(e.to_string());
                    }
                }
            }
        }
    }
    best.ok_or_else(|| fail(&format!("no orientation candidate reconstructs the channel ({})", rejections.join("; "))))
}

fn orthonormal_plane(p: &RVec, q: &RVec) -> Option<(RVec, RVec)> {
    let e1 = p.normalize();
    let mut e2 = q - &e1 * (e1.dot(q));
    let n = e2.norm();
    if n < 1e-9 {
        return None;
    }
    e2 /= n;
    Some((e1, e2))
}

fn try_nondiagonal_candidate(
    ptm: &RMat,
    r: &RMat,
    n: &RMat,
    w: &RMat,
    scale: f64,
) -> Result<LorentzNormalForm> {
    let g = metric();
    let fail = |d: &str| Error::NormalFormExtraction { details: format!("candidate: {d}") };
    validate_lorentz(w, &g, 1e-7 * scale.max(1.0))?;
    let w_inv = w.clone().try_inverse().ok_or_else(|| fail("singular W"))?;
    let k = &w_inv * n * w;

    // canonical sparsity [[α,0,0,β],[0,δ,0,0],[0,0,δ,0],[-β,0,0,γ]]
    let mut off = 0.0f64;
    for (i, j) in [(0, 1), (0, 2), (1, 0), (1, 2), (1, 3), (2, 0), (2, 1), (2, 3), (3, 1), (3, 2)] {
        off = off.max(k[(i, j)].abs());
    }
    if off > 1e-6 * scale {
        return Err(fail("block sparsity violated"));
    }
    let beta = 0.5 * (k[(0, 3)] - k[(3, 0)]);
    if beta < -1e-8 * scale {
        return Err(fail("negative nilpotent orientation"));
    }
    let beta = beta.max(1e-300);
    // block-derived invariants: the cluster mean carries the sqrt(eps)
    // eigenvalue-splitting error of the Jordan block, the block trace does not
    let mu = 0.5 * (k[(0, 0)] + k[(3, 3)]);
    if mu < 1e-10 * scale {
        return Err(fail("vanishing Jordan eigenvalue"));
    }
    let delta = 0.5 * (k[(1, 1)] + k[(2, 2)]);
    let x_abs = (delta.max(0.0) / mu).sqrt().min(1.0);

    // one-parameter gauge family: minimize the flank boost over z
    let p_mat = r * w;
    let z_lo = ((beta - mu) / (beta + mu)).max(0.0) + 1e-12;
    let z_hi = 1.0 - 1e-9;
    if z_lo >= z_hi {
        return Err(fail("empty gauge window"));
    }
    // (cost, a, l2, params)
    let mut best: Option<(f64, f64, RMat, MParams)> = None;
    let grid = 96usize;
    let eval = |z: f64, best: &mut Option<(f64, f64, RMat, MParams)>| {
        let p_scale = mu / (1.0 - z);
        let v = z - beta * (1.0 - z) / mu;
        if v <= -1.0 + 1e-12 || v > z + 1e-12 {
            return;
        }
        let a2 = p_scale / (1.0 + v);
        if !(a2 > 0.0) {
            return;
        }
        let a = a2.sqrt();
        for sign_d in [1.0f64, -1.0] {
            if x_abs == 0.0 && sign_d < 0.0 {
                continue;
            }
            let d = sign_d * x_abs * mu.sqrt();
            if let Some(l2) = solve_l2(&p_mat, a, v, z, d, &g) {
                let cost = l2.norm_squared() + 0.1 * (&l2 - RMat::identity(4, 4)).norm_squared();
                if best.as_ref().is_none_or(|(c, ..)| cost < *c) {
                    *best = Some((cost, a, l2, MParams { v, x: sign_d * x_abs, z }));
                }
            }
        }
    };
    for i in 0..=grid {
        let z = z_lo + (z_hi - z_lo) * i as f64 / grid as f64;
        eval(z, &mut best);
    }
    let coarse_z = best.as_ref().ok_or_else(|| fail("no gauge point admits a Lorentz flank"))?.3.z;
    // local refinement around the coarse optimum
    {
        let step = (z_hi - z_lo) / grid as f64;
        let mut lo = (coarse_z - step).max(z_lo);
        let mut hi = (coarse_z + step).min(z_hi);
        for _ in 0..60 {
            let m1 = lo + (hi - lo) * 0.381966;
            let m2 = hi - (hi - lo) * 0.381966;
            eval(m1, &mut best);
            eval(m2, &mut best);
            let bz = best.as_ref().unwrap().3.z;
            if (bz - m1).abs() < (bz - m2).abs() {
                hi = m2;
            } else {
                lo = m1;
            }
            if hi - lo < 1e-12 {
                break;
            }
        }
    }
    let (_, a, l2, params) = best.ok_or_else(|| fail("gauge search failed"))?;
    validate_lorentz(&l2, &g, 1e-6 * scale.max(1.0))?;

    let phi = phi_t();
    let t1 = &phi * &w_inv * &phi;
    let t2 = l2.scale(a);
    let m_ptm = m_form_ptm(&params);
    let recon = &t2 * &m_ptm * &t1;
    let err = (recon - ptm).norm();
    if err > 1e-8 * (1.0 + ptm.norm()) {
        return Err(fail("reconstruction residual too large"));
    }
    let band = 1e-9;
    let case = m_case_of(&params, band).ok_or_else(|| fail("parameters outside the case regions"))?;
    Ok(LorentzNormalForm {
        kind: FormKind::NonDiagonal,
        diagonal_entries: None,
        params: Some(params),
        case: Some(case),
        t2,
        t1,
        normal_channel: ChannelRep::from_ptm(2, m_ptm)?,
        reconstruction_error: err,
    })
}

/// Solves L2 from P = L2 Σ2, completing spacelike columns when x = 0.
fn solve_l2(p: &RMat, a: f64, v: f64, z: f64, d: f64, g: &RMat) -> Option<RMat> {
    let b = a * z;
    let c = a * v;
    let corner = nalgebra::Matrix2::new(a, b, c, a + c - b);
    let inv = corner.try_inverse()?;
    let mut l2 = RMat::zeros(4, 4);
    // columns 0 and 3 from the invertible (0,3) corner
    for out in 0..2usize {
        let col_idx = if out == 0 { 0 } else { 3 };
        for row in 0..4 {
            l2[(row, col_idx)] = p[(row, 0)] * inv[(0, out)] + p[(row, 3)] * inv[(1, out)];
        }
    }
    if d.abs() > 1e-12 {
        l2.set_column(1, &(p.column(1) / d));
        l2.set_column(2, &(p.column(2) / (-d)));
    } else {
        let mut l2m = l2.clone();
        complete_lorentz_columns(&mut l2m, &[1, 2], g).ok()?;
        if l2m.determinant() < 0.0 {
            let flipped = -l2m.column(2).clone_owned();
            l2m.set_column(2, &flipped);
        }
        l2 = l2m;
    }
    let resid = (l2.transpose() * g * &l2 - g).norm();
    if resid > 1e-6 || l2[(0, 0)] < 0.0 || l2.determinant() < 0.0 {
        return None;
    }
    Some(l2)
}
