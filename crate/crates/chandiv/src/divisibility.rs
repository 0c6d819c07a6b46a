//! Qubit divisibility classification and rank-2 factorization.
//!
//! The classes, decided through the Lorentz normal form:
//!
//! * `Unitary` — Kraus rank 1; plays the role of unity and is excluded from
//!   the other classes.
//! * `Indivisible` — diagonal normal form with Kraus rank 3; every
//!   factorization contains a unitary factor.
//! * `InfinitesimallyDivisible` — divisible into arbitrarily many channels,
//!   equivalently into factors of Kraus rank at most 2.
//! * `DivisibleNonInfinitesimal` — divisible, with a Lindblad-boundary
//!   decomposition whose boundary factor is indivisible.
//!
//! For a full-rank channel with Pauli normal form diag(1, η1, η2, η3) the
//! infinitesimal-divisibility test is the product condition
//! η_i >= η_j η_k (all positive after sign normalization); the factorization
//! uses λ_i = sqrt(η_j η_k / η_i), so that
//! diag(1,η1,η2,η3) = diag(1,1,λ1,λ1) diag(1,λ2,1,λ2) diag(1,λ3,λ3,1).

use crate::chanrep::{ChannelRep, Tolerances};
use crate::error::{Error, Result};
use crate::lbdecomp::{lb_decompose_auto, LbDecomposition};
use crate::linalg::RMat;
use crate::lorentz::{normal_form, FormKind, LorentzNormalForm};

/// Divisibility class of a qubit channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivisibilityClass {
    Indivisible,
    DivisibleNonInfinitesimal,
    InfinitesimallyDivisible,
    Unitary,
}

impl DivisibilityClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            DivisibilityClass::Indivisible => "indivisible",
            DivisibilityClass::DivisibleNonInfinitesimal => "divisible_non_infinitesimal",
            DivisibilityClass::InfinitesimallyDivisible => "infinitesimally_divisible",
            DivisibilityClass::Unitary => "unitary",
        }
    }
}

/// Evaluation of the Pauli product condition.
#[derive(Debug, Clone)]
pub struct EtaConditions {
    /// Sign/permutation-normalized triple (descending magnitudes).
    pub etas: [f64; 3],
    /// Ratios η_i / (η_j η_k) for i = 1, 2, 3; NaN when a denominator
    /// vanishes.
    pub ratios: [f64; 3],
    /// All η positive and every ratio >= 1.
    pub holds: bool,
    /// The tuple is (up to signs/permutation) of the singular family
    /// (0, 0, λ) with λ in [0, 1].
    pub singular_family: bool,
}

impl EtaConditions {
    /// Infinitesimally divisible per the Pauli criterion.
    pub fn infinitesimally_divisible(&self) -> bool {
        self.holds || self.singular_family
    }
}

/// Structured witnesses attached to a classification.
#[derive(Debug, Clone, Default)]
pub struct Witnesses {
    /// Product-condition data (Pauli-normal-form channels).
    pub eta: Option<EtaConditions>,
    /// Lindblad-boundary decomposition (divisible, not infinitesimally).
    pub lb: Option<LbDecomposition>,
    /// Explicit factorization into Kraus rank <= 2 channels.
    pub rank2_factors: Option<Vec<ChannelRep>>,
}

/// Divisibility report for a qubit channel.
#[derive(Debug, Clone)]
pub struct DivisibilityReport {
    pub class: DivisibilityClass,
    pub kraus_rank: usize,
    pub normal_form: LorentzNormalForm,
    /// Positive-η product test outcome; only meaningful for Pauli normal
    /// forms (membership in the Markovian class is not decided exactly).
    pub markovian_candidate: Option<bool>,
    pub witnesses: Witnesses,
}

/// Sign/permutation normalization of a Pauli triple.
///
/// Conjugations by Pauli rotations permute the axes and flip signs in pairs;
/// the orbit invariants are the magnitudes and the product sign. The
/// representative sorts magnitudes descending and carries the product sign on
/// the smallest entry.
pub fn normalize_pauli_triple(etas: [f64; 3]) -> [f64; 3] {
    let mut mags = [etas[0].abs(), etas[1].abs(), etas[2].abs()];
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let product = etas[0] * etas[1] * etas[2];
    if product < 0.0 {
        [mags[0], mags[1], -mags[2]]
    } else {
        mags
    }
}

/// Evaluates the product condition η_i >= η_j η_k on a Pauli triple.
///
/// The triple must define a CP channel diag(1, η1, η2, η3).
pub fn check_pauli_infdiv(etas: [f64; 3], tol: &Tolerances) -> Result<EtaConditions> {
    // CP validation of the raw tuple
    ChannelRep::pauli_channel(etas[0], etas[1], etas[2])?;
    Ok(eta_conditions_unchecked(etas, tol))
}

fn eta_conditions_unchecked(etas: [f64; 3], tol: &Tolerances) -> EtaConditions {
    let e = normalize_pauli_triple(etas);
    let band = tol.eig_zero.max(1e-12);
    let mut ratios = [f64::NAN; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let denom = e[j] * e[k];
        if denom.abs() > band * band {
            ratios[i] = e[i] / denom;
        }
    }
    let all_positive = e.iter().all(|&x| x > band);
    let holds = all_positive && ratios.iter().all(|&r| r >= 1.0 - 1e-9);
    let singular_family = e[0].abs() <= 1.0 + band && e[1].abs() <= band && e[2].abs() <= band;
    EtaConditions { etas: e, ratios, holds, singular_family }
}

/// Classifies a qubit channel.
///
/// Indeterminate normal forms propagate as errors rather than guessing a
/// class.
pub fn classify(e: &ChannelRep, tol: &Tolerances) -> Result<DivisibilityReport> {
    let rank = e.kraus_rank(tol)?;
    let nf = normal_form(e, tol)?;
    if rank == 1 {
        let eta = pauli_eta_of(&nf, tol);
        let markov = eta.as_ref().map(|c| c.infinitesimally_divisible());
        return Ok(DivisibilityReport {
            class: DivisibilityClass::Unitary,
            kraus_rank: rank,
            normal_form: nf,
            markovian_candidate: markov,
            witnesses: Witnesses { eta, ..Default::default() },
        });
    }
    match nf.kind {
        FormKind::NonDiagonal => {
            // non-diagonal forms split into two Kraus rank <= 2 maps, so the
            // channel is infinitesimally divisible
            let factors = factor_rank2_internal(e, &nf, tol).ok();
            Ok(DivisibilityReport {
                class: DivisibilityClass::InfinitesimallyDivisible,
                kraus_rank: rank,
                normal_form: nf,
                markovian_candidate: None,
                witnesses: Witnesses { rank2_factors: factors, ..Default::default() },
            })
        }
        FormKind::Diagonal => {
            let eta = pauli_eta_of(&nf, tol);
            let markov = eta.as_ref().map(|c| c.holds);
            if rank == 3 {
                return Ok(DivisibilityReport {
                    class: DivisibilityClass::Indivisible,
                    kraus_rank: rank,
                    normal_form: nf,
                    markovian_candidate: markov,
                    witnesses: Witnesses { eta, ..Default::default() },
                });
            }
            let inf_div = eta.as_ref().map(|c| c.infinitesimally_divisible()).unwrap_or(false);
            if rank <= 2 || inf_div {
                let factors = factor_rank2_internal(e, &nf, tol).ok();
                return Ok(DivisibilityReport {
                    class: DivisibilityClass::InfinitesimallyDivisible,
                    kraus_rank: rank,
                    normal_form: nf,
                    markovian_candidate: markov,
                    witnesses: Witnesses { eta, rank2_factors: factors, ..Default::default() },
                });
            }
            let lb = lb_decompose_auto(e, tol).ok();
            Ok(DivisibilityReport {
                class: DivisibilityClass::DivisibleNonInfinitesimal,
                kraus_rank: rank,
                normal_form: nf,
                markovian_candidate: markov,
                witnesses: Witnesses { eta, lb, ..Default::default() },
            })
        }
    }
}

/// η triple of a diagonal normal form: M = diag(1, s1/s0, -s2/s0, s3/s0).
fn pauli_eta_of(nf: &LorentzNormalForm, tol: &Tolerances) -> Option<EtaConditions> {
    let s = nf.diagonal_entries?;
    Some(eta_conditions_unchecked([s[1] / s[0], -s[2] / s[0], s[3] / s[0]], tol))
}

/// Factorization of an infinitesimally divisible qubit channel into channels
/// of Kraus rank at most 2.
pub fn factor_rank2(e: &ChannelRep, tol: &Tolerances) -> Result<Vec<ChannelRep>> {
    let report = classify(e, tol)?;
    match report.class {
        DivisibilityClass::InfinitesimallyDivisible | DivisibilityClass::Unitary => {}
        _ => return Err(Error::NotInfinitesimallyDivisible),
    }
    factor_rank2_internal(e, &report.normal_form, tol)
}

fn factor_rank2_internal(e: &ChannelRep, nf: &LorentzNormalForm, tol: &Tolerances) -> Result<Vec<ChannelRep>> {
    let ptm = e.to_ptm();
    // plain Pauli channel: factor the diagonal directly
    if off_diagonal_norm(&ptm) < 1e-10 {
        let etas = [ptm[(1, 1)], ptm[(2, 2)], ptm[(3, 3)]];
        return factor_pauli(etas, e, tol);
    }
    // diagonal normal form with unitary flanks: factor M and reattach
    if nf.kind == FormKind::Diagonal && is_unitary_flank(&nf.t1) && is_unitary_flank(&nf.t2) {
        let m = nf.normal_channel.to_ptm();
        let etas = [m[(1, 1)], m[(2, 2)], m[(3, 3)]];
        let mid = factor_pauli(etas, &nf.normal_channel, tol)?;
        return reattach_flanks(&nf.t2, mid, &nf.t1, e, tol);
    }
    // non-diagonal normal form with unitary flanks: the rank-2 split of M
    if nf.kind == FormKind::NonDiagonal && is_unitary_flank(&nf.t1) && is_unitary_flank(&nf.t2) {
        if let Some(p) = nf.params {
            let (left, right) = crate::lorentz::split_m_form(&p)?;
            let (ltp, _) = left.is_tp(tol);
            let (rtp, _) = right.is_tp(tol);
            if ltp && rtp {
                return reattach_flanks(&nf.t2, vec![left, right], &nf.t1, e, tol);
            }
        }
    }
    Err(Error::UnsupportedFactorization {
        details: "normal form has non-unitary flanks; only Pauli-like routes are constructed explicitly".into(),
    })
}

fn off_diagonal_norm(ptm: &RMat) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                s += ptm[(i, j)] * ptm[(i, j)];
            }
        }
    }
    s.sqrt()
}

fn is_unitary_flank(t: &RMat) -> bool {
    if (t[(0, 0)] - 1.0).abs() > 1e-8 {
        return false;
    }
    let rot = t.view((1, 1), (3, 3)).clone_owned();
    (rot.transpose() * &rot - RMat::identity(3, 3)).norm() < 1e-8
        && (t.view((0, 1), (1, 3)).norm() + t.view((1, 0), (3, 1)).norm()) < 1e-8
}

fn reattach_flanks(
    t2: &RMat,
    mut mid: Vec<ChannelRep>,
    t1: &RMat,
    e: &ChannelRep,
    tol: &Tolerances,
) -> Result<Vec<ChannelRep>> {
    if mid.is_empty() {
        mid.push(ChannelRep::identity(2));
    }
    let n = mid.len();
    let mut factors = Vec::with_capacity(n);
    for (i, f) in mid.into_iter().enumerate() {
        let mut p = f.to_ptm();
        if i == 0 {
            p = t2 * p;
        }
        if i == n - 1 {
            p *= t1;
        }
        factors.push(ChannelRep::from_ptm(2, p)?);
    }
    verify_factors(&factors, e, tol)?;
    Ok(factors)
}

/// Factorization of CP diag(1, η1, η2, η3) into flip channels, including the
/// singular diag(1, 0, 0, λ) family; sign/permutation normalization enters
/// through explicit unitary rotations folded into the first and last factor.
fn factor_pauli(etas: [f64; 3], e: &ChannelRep, tol: &Tolerances) -> Result<Vec<ChannelRep>> {
    let band = tol.eig_zero.max(1e-12);
    let conds = eta_conditions_unchecked(etas, tol);
    if !conds.infinitesimally_divisible() {
        return Err(Error::NotInfinitesimallyDivisible);
    }

    if !conds.holds {
        // singular family: λ on axis i, zeros elsewhere. A flip that keeps a
        // different axis times the projector onto axis i does it in place:
        // diag(1, 0, 0, λ) = diag(1, 1, λ, λ) diag(1, 0, 0, 1)
        let i = (0..3).max_by(|&a, &b| etas[a].abs().partial_cmp(&etas[b].abs()).unwrap()).unwrap();
        let lambda = etas[i];
        let j = (i + 1) % 3;
        let mut flip = [lambda; 3];
        flip[j] = 1.0;
        let mut projector = [0.0; 3];
        projector[i] = 1.0;
        let factors = vec![
            ChannelRep::pauli_channel(flip[0], flip[1], flip[2])?,
            ChannelRep::pauli_channel(projector[0], projector[1], projector[2])?,
        ];
        verify_factors(&factors, e, tol)?;
        return Ok(factors);
    }

    let (pre, post, normalized) = pauli_conjugation(etas);
    let [n1, n2, n3] = normalized;
    let lambda = [
        (n2 * n3 / n1).sqrt().min(1.0),
        (n1 * n3 / n2).sqrt().min(1.0),
        (n1 * n2 / n3).sqrt().min(1.0),
    ];
    let flips = [
        ChannelRep::bit_flip(lambda[0])?,
        ChannelRep::bit_phase_flip(lambda[1])?,
        ChannelRep::phase_flip(lambda[2])?,
    ];
    let mut mid: Vec<ChannelRep> = Vec::new();
    for (l, f) in lambda.iter().zip(flips) {
        if (l - 1.0).abs() > band {
            mid.push(f);
        }
    }
    if mid.is_empty() {
        mid.push(ChannelRep::identity(2));
    }
    reattach_flanks(&post, mid, &pre, e, tol)
}

fn verify_factors(factors: &[ChannelRep], e: &ChannelRep, tol: &Tolerances) -> Result<()> {
    let mut prod = RMat::identity(4, 4);
    for f in factors {
        let rank = f.kraus_rank(tol)?;
        if rank > 2 {
            return Err(Error::RankTooHigh { rank, max: 2 });
        }
        prod *= f.to_ptm();
    }
    let err = (prod - e.to_ptm()).norm();
    if err > 1e-9 * (1.0 + e.to_ptm().norm()) {
        return Err(Error::UnsupportedFactorization { details: format!("factor recomposition residual {err:.3e}") });
    }
    Ok(())
}

/// Unitary pre/post rotation PTMs with post * diag(1, normalized) * pre =
/// diag(1, etas), where `normalized` sorts magnitudes descending and carries
/// the product sign on the last slot.
///
/// Conjugation by a (possibly sign-fixed) permutation rotation handles the
/// axis reordering: signs square away under conjugation, so sign mismatches
/// are absorbed by composing with a π-rotation, diag(m) with an even number
/// of -1 entries.
fn pauli_conjugation(etas: [f64; 3]) -> (RMat, RMat, [f64; 3]) {
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| etas[b].abs().partial_cmp(&etas[a].abs()).unwrap());
    let normalized = normalize_pauli_triple(etas);

    // permutation rotation: O[new][idx[new]] = 1, det fixed to +1 by flipping
    // one row (the sign squares away in the conjugation)
    let mut o = nalgebra::Matrix3::<f64>::zeros();
    for (new, &old) in idx.iter().enumerate() {
        o[(new, old)] = 1.0;
    }
    if o.determinant() < 0.0 {
        for c in 0..3 {
            o[(0, c)] = -o[(0, c)];
        }
    }

    // sign mismatch between the permuted input and the representative
    let mut m = [1.0f64; 3];
    let mut minus = 0usize;
    for (new, &old) in idx.iter().enumerate() {
        let want = etas[old];
        let have = normalized[new];
        if want != 0.0 && have != 0.0 && (want < 0.0) != (have < 0.0) {
            m[new] = -1.0;
            minus += 1;
        }
    }
    if minus % 2 == 1 {
        // pair the flip with a zero axis (only reachable when a zero exists)
        let zero_axis = idx
            .iter()
            .enumerate()
            .find(|(new, &old)| etas[old] == 0.0 && m[*new] > 0.0)
            .map(|(new, _)| new)
            .unwrap_or(2);
        m[zero_axis] = -m[zero_axis];
    }

    let mut pre = RMat::identity(4, 4);
    let mut post = RMat::identity(4, 4);
    for i in 0..3 {
        for j in 0..3 {
            pre[(i + 1, j + 1)] = o[(i, j)];
            // post = O^T followed by the sign flip: (O^T diag(m))_{ij} = O[j][i] m[j]
            post[(i + 1, j + 1)] = o[(j, i)] * m[j];
        }
    }
    (pre, post, normalized)
}

/// Statement record for n-divisibility.
#[derive(Debug, Clone)]
pub struct NDivisibilityStatus {
    pub n: usize,
    pub divisible: bool,
    /// Explicit factors composing to the channel, when divisible.
    pub witness: Option<Vec<ChannelRep>>,
    /// Frobenius recomposition error of the witness.
    pub witness_error: Option<f64>,
}

/// Decides n-divisibility and constructs an explicit witness.
///
/// For n >= 2 a qubit channel is n-divisible exactly when it is not
/// indivisible; the witness uses semigroup roots for Pauli channels, Markov
/// splitting for the Lindblad-boundary route, and identity padding for
/// boundary-only cases.
pub fn n_divisibility_status(e: &ChannelRep, n: usize, tol: &Tolerances) -> Result<NDivisibilityStatus> {
    if n == 0 {
        return Err(Error::InvalidParameter { name: "n", reason: "must be at least 1".into() });
    }
    if n == 1 {
        return Ok(NDivisibilityStatus { n, divisible: true, witness: Some(vec![e.clone()]), witness_error: Some(0.0) });
    }
    let report = classify(e, tol)?;
    if report.class == DivisibilityClass::Indivisible {
        return Ok(NDivisibilityStatus { n, divisible: false, witness: None, witness_error: None });
    }
    let witness = build_n_witness(e, n, &report, tol);
    let witness_error = witness.as_ref().map(|w| {
        let mut prod = RMat::identity(4, 4);
        for f in w {
            prod *= f.to_ptm();
        }
        (prod - e.to_ptm()).norm()
    });
    Ok(NDivisibilityStatus { n, divisible: true, witness, witness_error })
}

fn build_n_witness(e: &ChannelRep, n: usize, report: &DivisibilityReport, tol: &Tolerances) -> Option<Vec<ChannelRep>> {
    let ptm = e.to_ptm();
    let band = tol.eig_zero.max(1e-12);
    if off_diagonal_norm(&ptm) < 1e-10 {
        let etas = [ptm[(1, 1)], ptm[(2, 2)], ptm[(3, 3)]];
        // positive-η Pauli semigroup root: diag(1, η^(1/n))
        if etas.iter().all(|&x| x > band) {
            let conds = eta_conditions_unchecked(etas, tol);
            if conds.holds {
                let root = ChannelRep::pauli_channel(
                    etas[0].powf(1.0 / n as f64),
                    etas[1].powf(1.0 / n as f64),
                    etas[2].powf(1.0 / n as f64),
                )
                .ok()?;
                return Some(vec![root; n]);
            }
        }
        // singular family diag(1, 0, 0, λ): n-1 flip roots times the boundary
        let conds = eta_conditions_unchecked(etas, tol);
        if conds.singular_family && etas[0].abs() < band && etas[1].abs() < band && etas[2] > band {
            let lambda = etas[2];
            let m = n - 1;
            let root = ChannelRep::bit_flip(lambda.powf(1.0 / m as f64)).ok()?;
            let mut w = vec![root; m];
            w.push(ChannelRep::pauli_channel(0.0, 0.0, 1.0).ok()?);
            return Some(w);
        }
    }
    match report.class {
        DivisibilityClass::Unitary => {
            let mut w = vec![e.clone()];
            w.extend(std::iter::repeat_with(|| ChannelRep::identity(2)).take(n - 1));
            Some(w)
        }
        DivisibilityClass::DivisibleNonInfinitesimal => {
            let lb = report.witnesses.lb.as_ref()?;
            let m = n - 1;
            let piece = lb.generator.scaled(1.0 / m as f64).exp(1.0).ok()?;
            let mut w = vec![piece; m];
            w.push(lb.boundary.clone());
            Some(w)
        }
        DivisibilityClass::InfinitesimallyDivisible => {
            // idempotent collapse channels divide into themselves
            if let Ok(squared) = e.compose(e) {
                if (squared.to_ptm() - e.to_ptm()).norm() < 1e-10 {
                    return Some(vec![e.clone(); n]);
                }
            }
            // boundary-only cases: identity padding
            let mut w = vec![e.clone()];
            w.extend(std::iter::repeat_with(|| ChannelRep::identity(2)).take(n - 1));
            Some(w)
        }
        DivisibilityClass::Indivisible => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frob_dist_r;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn e_not_is_indivisible() {
        let report = classify(&ChannelRep::optimal_not(), &tol()).unwrap();
        assert_eq!(report.class, DivisibilityClass::Indivisible);
        assert_eq!(report.kraus_rank, 3);
        assert_eq!(report.normal_form.kind, FormKind::Diagonal);
    }

    #[test]
    fn e_not_squared_is_infinitesimally_divisible() {
        let e = ChannelRep::optimal_not();
        let sq = e.compose(&e).unwrap();
        let report = classify(&sq, &tol()).unwrap();
        assert_eq!(report.class, DivisibilityClass::InfinitesimallyDivisible);
        assert_eq!(report.markovian_candidate, Some(true));
        assert!(report.witnesses.rank2_factors.is_some());
    }

    #[test]
    fn identity_is_unitary() {
        let report = classify(&ChannelRep::identity(2), &tol()).unwrap();
        assert_eq!(report.class, DivisibilityClass::Unitary);
    }

    #[test]
    fn fig1_red_dot_is_divisible_but_not_infinitesimally() {
        let e = ChannelRep::pauli_channel(-0.2, -0.2, -0.2).unwrap();
        let report = classify(&e, &tol()).unwrap();
        assert_eq!(report.class, DivisibilityClass::DivisibleNonInfinitesimal);
        let lb = report.witnesses.lb.expect("decomposition attached");
        let boundary_report = classify(&lb.boundary, &tol()).unwrap();
        assert_eq!(boundary_report.class, DivisibilityClass::Indivisible);
        let markov_report = classify(&lb.generator.exp(1.0).unwrap(), &tol()).unwrap();
        assert_eq!(markov_report.class, DivisibilityClass::InfinitesimallyDivisible);
    }

    #[test]
    fn eta_condition_examples() {
        let t = tol();
        let c = check_pauli_infdiv([0.6, 0.5, 0.4], &t).unwrap();
        assert!(c.holds);
        assert!((c.ratios[0] - 0.6 / 0.2).abs() < 1e-12);
        assert!((c.ratios[1] - 0.5 / 0.24).abs() < 1e-12);
        assert!((c.ratios[2] - 0.4 / 0.3).abs() < 1e-12);

        let c = check_pauli_infdiv([1.0 / 9.0, 1.0 / 9.0, 1.0 / 9.0], &t).unwrap();
        assert!(c.holds);

        let c = check_pauli_infdiv([-1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0], &t).unwrap();
        assert!(!c.infinitesimally_divisible());
        assert_eq!(c.etas, [1.0 / 3.0, 1.0 / 3.0, -1.0 / 3.0]);
    }

    #[test]
    fn eta_condition_rejects_non_cp_tuples() {
        assert!(check_pauli_infdiv([1.0, 1.0, -1.0], &tol()).is_err());
    }

    #[test]
    fn singular_family_is_recognized() {
        let c = check_pauli_infdiv([0.0, 0.0, 0.7], &tol()).unwrap();
        assert!(c.singular_family && c.infinitesimally_divisible());
        let c = check_pauli_infdiv([0.0, 0.0, -0.7], &tol()).unwrap();
        assert!(c.singular_family);
    }

    #[test]
    fn factor_rank2_flip_construction() {
        let e = ChannelRep::pauli_channel(0.6, 0.5, 0.4).unwrap();
        let factors = factor_rank2(&e, &tol()).unwrap();
        let mut prod = RMat::identity(4, 4);
        for f in &factors {
            assert!(f.kraus_rank(&tol()).unwrap() <= 2);
            prod *= f.to_ptm();
        }
        assert!(frob_dist_r(&prod, &e.to_ptm()) < 1e-9);
        // λ_2 λ_3 = η_1
        let lam = [
            (0.5 * 0.4f64 / 0.6).sqrt(),
            (0.6 * 0.4f64 / 0.5).sqrt(),
            (0.6 * 0.5f64 / 0.4).sqrt(),
        ];
        assert!((lam[1] * lam[2] - 0.6).abs() < 1e-12);
        assert_eq!(factors.len(), 3);
    }

    #[test]
    fn factor_rank2_singular_family() {
        // diag(1, 0, 0, λ) = diag(1, 1, λ, λ) diag(1, 0, 0, 1) exactly
        let lambda = 0.75;
        let e = ChannelRep::pauli_channel(0.0, 0.0, lambda).unwrap();
        let factors = factor_rank2(&e, &tol()).unwrap();
        assert_eq!(factors.len(), 2);
        let bit = ChannelRep::bit_flip(lambda).unwrap();
        let dephase = ChannelRep::pauli_channel(0.0, 0.0, 1.0).unwrap();
        assert!(frob_dist_r(&factors[0].to_ptm(), &bit.to_ptm()) < 1e-12);
        assert!(frob_dist_r(&factors[1].to_ptm(), &dephase.to_ptm()) < 1e-12);
        let mut prod = RMat::identity(4, 4);
        for f in &factors {
            assert!(f.kraus_rank(&tol()).unwrap() <= 2);
            prod *= f.to_ptm();
        }
        assert!(frob_dist_r(&prod, &e.to_ptm()) < 1e-10);
        // permuted and sign-flipped variants factor in place as well
        for etas in [[0.6, 0.0, 0.0], [0.0, -0.5, 0.0], [0.0, 0.0, 0.0]] {
            let e = ChannelRep::pauli_channel(etas[0], etas[1], etas[2]).unwrap();
            let factors = factor_rank2(&e, &tol()).unwrap();
            let mut prod = RMat::identity(4, 4);
            for f in &factors {
                assert!(f.kraus_rank(&tol()).unwrap() <= 2);
                prod *= f.to_ptm();
            }
            assert!(frob_dist_r(&prod, &e.to_ptm()) < 1e-10, "{etas:?}");
        }
    }

    #[test]
    fn factor_rank2_identity_is_trivial() {
        let factors = factor_rank2(&ChannelRep::identity(2), &tol()).unwrap();
        assert_eq!(factors.len(), 1);
        assert!(frob_dist_r(&factors[0].to_ptm(), &RMat::identity(4, 4)) < 1e-12);
    }

    #[test]
    fn factor_rank2_refuses_non_infdiv() {
        assert!(matches!(
            factor_rank2(&ChannelRep::optimal_not(), &tol()),
            Err(Error::NotInfinitesimallyDivisible)
        ));
        let e = ChannelRep::pauli_channel(-0.2, -0.2, -0.2).unwrap();
        assert!(matches!(factor_rank2(&e, &tol()), Err(Error::NotInfinitesimallyDivisible)));
    }

    #[test]
    fn factor_rank2_with_negative_signs() {
        // two negative entries, positive product: still infinitesimally
        // divisible after sign normalization
        let e = ChannelRep::pauli_channel(-0.6, -0.5, 0.4).unwrap();
        let factors = factor_rank2(&e, &tol()).unwrap();
        let mut prod = RMat::identity(4, 4);
        for f in &factors {
            assert!(f.kraus_rank(&tol()).unwrap() <= 2);
            prod *= f.to_ptm();
        }
        assert!(frob_dist_r(&prod, &e.to_ptm()) < 1e-9);
    }

    #[test]
    fn n_divisibility_examples() {
        let t = tol();
        let e_not = ChannelRep::optimal_not();
        let st = n_divisibility_status(&e_not, 2, &t).unwrap();
        assert!(!st.divisible);

        let sq = e_not.compose(&e_not).unwrap();
        let st = n_divisibility_status(&sq, 7, &t).unwrap();
        assert!(st.divisible);
        let w = st.witness.unwrap();
        assert_eq!(w.len(), 7);
        // factors are D_q with q = (1/9)^(1/7)
        let q = (1.0f64 / 9.0).powf(1.0 / 7.0);
        let expect = ChannelRep::depolarizing_mixture(2, q).unwrap();
        assert!(frob_dist_r(&w[0].to_ptm(), &expect.to_ptm()) < 1e-12);
        assert!(st.witness_error.unwrap() < 1e-9);

        let st = n_divisibility_status(&e_not, 1, &t).unwrap();
        assert!(st.divisible);
    }

    #[test]
    fn n_divisibility_witness_for_non_infinitesimal() {
        let e = ChannelRep::pauli_channel(-0.2, -0.2, -0.2).unwrap();
        let st = n_divisibility_status(&e, 4, &tol()).unwrap();
        assert!(st.divisible);
        assert!(st.witness_error.unwrap() < 1e-7, "err {:?}", st.witness_error);
        assert_eq!(st.witness.unwrap().len(), 4);
    }

    #[test]
    fn classification_invariant_under_unitary_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let chans = [
            ChannelRep::optimal_not(),
            ChannelRep::pauli_channel(0.6, 0.5, 0.4).unwrap(),
            ChannelRep::pauli_channel(-0.2, -0.2, -0.2).unwrap(),
        ];
        for e in &chans {
            let base = classify(e, &tol()).unwrap().class;
            for _ in 0..3 {
                let u = crate::haar::random_unitary(2, &mut rng);
                let rotated = ChannelRep::unitary(&u).unwrap().compose(e).unwrap();
                assert_eq!(classify(&rotated, &tol()).unwrap().class, base);
            }
        }
    }

    #[test]
    fn random_pauli_face_dichotomy() {
        // rank-3 diagonal => indivisible; rank-4 => divisible
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let e1: f64 = rng.random_range(-1.0..1.0);
            let e2: f64 = rng.random_range(-1.0..1.0);
            let e3: f64 = rng.random_range(-1.0..1.0);
            let Ok(ch) = ChannelRep::pauli_channel(e1, e2, e3) else { continue };
            let report = classify(&ch, &tol()).unwrap();
            match report.kraus_rank {
                3 => assert_eq!(report.class, DivisibilityClass::Indivisible),
                4 => assert_ne!(report.class, DivisibilityClass::Indivisible),
                _ => {}
            }
        }
    }
}
