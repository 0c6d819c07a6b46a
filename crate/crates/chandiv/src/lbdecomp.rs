//! The Lindblad-boundary factorization E = e^L E_boundary.
//!
//! Given a channel E and a generator L, the family F_t = e^(-tL) E starts at
//! E and eventually leaves the set of channels. The first time t_min at which
//! the smallest Choi eigenvalue of F_t hits zero yields the factorization
//! with E_boundary = F_{t_min} (Kraus deficient) and Markovian part
//! e^(t_min L).

use crate::chanrep::{ChannelRep, Tolerances};
use crate::error::{Error, Result};
use crate::lindblad::LindbladGenerator;
use crate::linalg::{hermitian_eigen, CMat};
use crate::par;

/// Which side of the channel the inverse semigroup multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// F_t = e^(-tL) ∘ E (the decomposition E = e^L E_boundary).
    Left,
    /// F_t = E ∘ e^(-tL) (the decomposition E = E_boundary e^L).
    Right,
}

/// Result of a Lindblad-boundary decomposition.
#[derive(Debug, Clone)]
pub struct LbDecomposition {
    /// Scaled generator: `e^L` with this L is the Markovian factor,
    /// i.e. the search generator times t_min.
    pub generator: LindbladGenerator,
    /// The boundary factor F_{t_min}.
    pub boundary: ChannelRep,
    /// Boundary-crossing time of the search generator.
    pub t_min: f64,
    /// Smallest Choi eigenvalue of the family at t_min.
    pub min_choi_eig_at_tmin: f64,
    /// The analytic horizon hint t' used to pick the scan range.
    pub bracket_hint: f64,
    /// Frobenius distance between e^L ∘ boundary and the input PTM.
    pub recomposition_error: f64,
}

/// One sample of the crossing scan.
#[derive(Debug, Clone, Copy)]
pub struct ScanSample {
    pub t: f64,
    pub min_choi_eig: f64,
    pub det: f64,
}

struct Family {
    dim: usize,
    channel_superop: CMat,
    generator_superop: CMat,
    side: Side,
}

impl Family {
    fn at(&self, t: f64) -> CMat {
        let inv = crate::linalg::expm(&self.generator_superop.scale(-t));
        match self.side {
            Side::Left => inv * &self.channel_superop,
            Side::Right => &self.channel_superop * inv,
        }
    }

    fn sample(&self, t: f64) -> ScanSample {
        let s = self.at(t);
        let ch = ChannelRep::from_superop(self.dim, s).expect("square superop");
        let choi = ch.to_choi();
        let (vals, _) = hermitian_eigen(&choi);
        ScanSample { t, min_choi_eig: *vals.last().unwrap(), det: crate::linalg::det(&ch.to_superop()).re }
    }
}

/// Minimum Choi eigenvalue and determinant of F_t on a uniform grid over
/// [0, t_max]. With `steps = 2` exactly the endpoints are sampled.
///
/// Samples are evaluated in parallel under the `parallel` feature.
pub fn crossing_scan(
    e: &ChannelRep,
    g: &LindbladGenerator,
    t_max: f64,
    steps: usize,
) -> Result<Vec<ScanSample>> {
    crossing_scan_sided(e, g, Side::Left, t_max, steps)
}

/// [`crossing_scan`] with an explicit composition side.
pub fn crossing_scan_sided(
    e: &ChannelRep,
    g: &LindbladGenerator,
    side: Side,
    t_max: f64,
    steps: usize,
) -> Result<Vec<ScanSample>> {
    let family = family_of(e, g, side)?;
    if !(t_max > 0.0) {
        return Err(Error::InvalidParameter { name: "t_max", reason: format!("must be positive, got {t_max}") });
    }
    if steps < 2 {
        return Err(Error::InvalidParameter { name: "steps", reason: format!("need at least 2, got {steps}") });
    }
    let ts: Vec<f64> = (0..steps).map(|i| t_max * i as f64 / (steps - 1) as f64).collect();
    Ok(par::maybe_par_map(ts, |t| family.sample(t)))
}

/// Sequential twin of [`crossing_scan_sided`]; same output, never touches the
/// rayon pool. Used for benchmarking the parallel speedup.
pub fn crossing_scan_seq(
    e: &ChannelRep,
    g: &LindbladGenerator,
    side: Side,
    t_max: f64,
    steps: usize,
) -> Result<Vec<ScanSample>> {
    let family = family_of(e, g, side)?;
    if !(t_max > 0.0) || steps < 2 {
        return Err(Error::InvalidParameter { name: "t_max/steps", reason: "invalid grid".into() });
    }
    let ts: Vec<f64> = (0..steps).map(|i| t_max * i as f64 / (steps - 1) as f64).collect();
    Ok(par::seq_map(ts, |t| family.sample(t)))
}

fn family_of(e: &ChannelRep, g: &LindbladGenerator, side: Side) -> Result<Family> {
    if e.dim() != g.dim() {
        return Err(Error::DimensionMismatch { expected: e.dim(), got: g.dim() });
    }
    Ok(Family { dim: e.dim(), channel_superop: e.to_superop(), generator_superop: g.superop(), side })
}

/// Decomposes `e = e^(t_min g) ∘ boundary` using the supplied generator.
pub fn lb_decompose(e: &ChannelRep, g: &LindbladGenerator, tol: &Tolerances) -> Result<LbDecomposition> {
    lb_decompose_sided(e, g, Side::Left, default_horizon(e, g), tol)
}

/// Decomposition with an explicit side and scan horizon.
///
/// The horizon is enlarged (doubled, up to a cap) if the family has not left
/// the CP set by `t_max`; the documented `NoBoundaryCrossing` error fires at
/// the cap.
pub fn lb_decompose_sided(
    e: &ChannelRep,
    g: &LindbladGenerator,
    side: Side,
    t_max: f64,
    tol: &Tolerances,
) -> Result<LbDecomposition> {
    tol.validate()?;
    let (cp, m0) = e.is_cp(tol)?;
    if !cp {
        return Err(Error::NotCompletelyPositive { min_eig: m0 });
    }
    let (tp, residual) = e.is_tp(tol);
    if !tp {
        return Err(Error::NotTracePreserving { residual });
    }
    if g.dissipative_norm() < 1e-14 {
        return Err(Error::InvalidParameter {
            name: "generator",
            reason: "dissipative part is zero; the family never leaves the channel set".into(),
        });
    }
    if m0 <= tol.eig_zero {
        return Err(Error::AlreadyOnBoundary { min_eig: m0 });
    }
    let family = family_of(e, g, side)?;
    let mut horizon = if t_max > 0.0 { t_max } else { 1.0 };
    let bracket_hint = horizon / HORIZON_FACTOR;

    const STEPS: usize = 1024;
    const MAX_ENLARGE: usize = 12;
    let e_norm = family.channel_superop.norm();
    for round in 0..=MAX_ENLARGE {
        let ts: Vec<f64> = (1..=STEPS).map(|i| horizon * i as f64 / STEPS as f64).collect();
        let samples = par::maybe_par_map(ts, |t| (family.at(t), t));

        // constant-family detection: e^(-tL) never moves the channel
        let constant = samples.iter().all(|(s, _)| (s - &family.channel_superop).norm() < 1e-12 * (1.0 + e_norm));
        if constant {
            return Err(Error::ConstantFamily);
        }

        let mut prev_t = 0.0;
        let mut prev_m = m0;
        for (s, t) in &samples {
            let m = min_choi_of_superop(family.dim, s);
            if m <= 0.0 {
                let (t_min, m_min) = bisect_crossing(&family, prev_t, prev_m, *t, m, tol);
                return finish(e, g, &family, t_min, m_min, bracket_hint, tol);
            }
            prev_t = *t;
            prev_m = m;
        }
        if round < MAX_ENLARGE {
            horizon *= 2.0;
        }
    }
    Err(Error::NoBoundaryCrossing { horizon })
}

const HORIZON_FACTOR: f64 = 10.0;

/// Default scan horizon: ten times the determinant bound
/// t' = -log|det E| / (d tr G) when E is non-singular, otherwise a unit window
/// (the caller-facing auto path computes the probe-based bound instead).
pub fn default_horizon(e: &ChannelRep, g: &LindbladGenerator) -> f64 {
    let det = e.determinant().abs();
    let d = e.dim() as f64;
    let tr_g = g.kossakowski_trace();
    if det > 1e-220 && tr_g > 0.0 {
        let t_prime = -det.ln() / (d * tr_g);
        HORIZON_FACTOR * t_prime.max(1e-3 / tr_g)
    } else {
        HORIZON_FACTOR / tr_g.max(1e-6)
    }
}

fn min_choi_of_superop(dim: usize, s: &CMat) -> f64 {
    let ch = ChannelRep::from_superop(dim, s.clone()).expect("square");
    crate::linalg::min_hermitian_eig(&ch.to_choi())
}

fn bisect_crossing(
    family: &Family,
    mut lo: f64,
    m_lo: f64,
    mut hi: f64,
    _m_hi: f64,
    tol: &Tolerances,
) -> (f64, f64) {
    debug_assert!(m_lo > 0.0);
    let mut mid = 0.5 * (lo + hi);
    let mut m_mid = 0.0;
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        m_mid = min_choi_of_superop(family.dim, &family.at(mid));
        if hi - lo < tol.t_tol && m_mid.abs() <= tol.eig_zero {
            return (mid, m_mid);
        }
        if m_mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < f64::EPSILON * hi.max(1.0) {
            break;
        }
    }
    (mid, m_mid)
}

fn finish(
    e: &ChannelRep,
    g: &LindbladGenerator,
    family: &Family,
    t_min: f64,
    m_min: f64,
    bracket_hint: f64,
    _tol: &Tolerances,
) -> Result<LbDecomposition> {
    let boundary = ChannelRep::from_superop(family.dim, family.at(t_min))?;
    let scaled = g.scaled(t_min);
    let markov = scaled.exp(1.0)?;
    let recomposed = match family.side {
        Side::Left => markov.compose(&boundary)?,
        Side::Right => boundary.compose(&markov)?,
    };
    let recomposition_error = (recomposed.to_ptm() - e.to_ptm()).norm();
    Ok(LbDecomposition {
        generator: scaled,
        boundary,
        t_min,
        min_choi_eig_at_tmin: m_min,
        bracket_hint,
        recomposition_error,
    })
}

/// Decomposes `e` with an automatically chosen purely dissipative generator.
///
/// Non-singular channels use the isotropic depolarizing generator; singular
/// channels use L_psi with psi picked from the least-pure output of a probe
/// frame, so that `<psi| E[sigma] |psi> < 1` and the family is non-trivial.
pub fn lb_decompose_auto(e: &ChannelRep, tol: &Tolerances) -> Result<LbDecomposition> {
    tol.validate()?;
    let (cp, m0) = e.is_cp(tol)?;
    if !cp {
        return Err(Error::NotCompletelyPositive { min_eig: m0 });
    }
    if e.kraus_rank(tol)? == 1 {
        return Err(Error::UnitaryInput);
    }
    let d = e.dim();
    let det = e.determinant().abs();
    if det > 1e-12 {
        let g = LindbladGenerator::depolarizing(d, 1.0)?;
        let horizon = default_horizon(e, &g);
        return lb_decompose_sided(e, &g, Side::Left, horizon, tol);
    }

    // probe frame: basis projectors plus the maximally mixed state
    let mut probes: Vec<CMat> = (0..d)
        .map(|i| {
            let mut p = CMat::zeros(d, d);
            p[(i, i)] = crate::linalg::cr(1.0);
            p
        })
        .collect();
    probes.push(CMat::identity(d, d).scale(1.0 / d as f64));

    let mut best: Option<(f64, CMat)> = None;
    for sigma in &probes {
        let rho = e.apply(sigma)?;
        let purity = (&rho * &rho).trace().re;
        if best.as_ref().is_none_or(|(p, _)| purity < *p) {
            best = Some((purity, rho));
        }
    }
    let (_, rho_star) = best.expect("probe frame is nonempty");
    let (vals, vecs) = hermitian_eigen(&rho_star);
    // eigenvector of the least eigenvalue maximizes the escape bracket
    let mu = 1.0;
    for idx in (0..d).rev() {
        let psi = vecs.column(idx).clone_owned();
        let q = vals[idx].clamp(0.0, 1.0);
        if q >= 1.0 - 1e-12 {
            continue;
        }
        let g = LindbladGenerator::psi_collapse(&psi, mu)?;
        let t_prime = -(1.0 - q).ln() / mu;
        let horizon = HORIZON_FACTOR * t_prime.max(0.1);
        match lb_decompose_sided(e, &g, Side::Left, horizon, tol) {
            Err(Error::ConstantFamily) => continue,
            other => return other,
        }
    }
    Err(Error::ConstantFamily)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cr, frob_dist_r, CVec, RMat};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn ket0() -> CVec {
        CVec::from_vec(vec![cr(1.0), cr(0.0)])
    }

    #[test]
    fn depolarizing_channel_decomposes_at_ln2() {
        let n = ChannelRep::completely_depolarizing(2);
        let g = LindbladGenerator::psi_collapse(&ket0(), 1.0).unwrap();
        let dec = lb_decompose(&n, &g, &tol()).unwrap();
        assert!((dec.t_min - 2.0f64.ln()).abs() < 1e-9, "t_min = {}", dec.t_min);

        let markov = dec.generator.exp(1.0).unwrap().to_ptm();
        let expect_markov = RMat::from_row_slice(4, 4, &[
            1.0, 0.0, 0.0, 0.0,
            0.0, 0.5, 0.0, 0.0,
            0.0, 0.0, 0.5, 0.0,
            0.5, 0.0, 0.0, 0.5,
        ]);
        assert!(frob_dist_r(&markov, &expect_markov) < 1e-9);

        let expect_boundary = RMat::from_row_slice(4, 4, &[
            1.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0,
            -1.0, 0.0, 0.0, 0.0,
        ]);
        assert!(frob_dist_r(&dec.boundary.to_ptm(), &expect_boundary) < 1e-9);
        assert_eq!(dec.boundary.kraus_rank(&tol()).unwrap(), 2);
        assert!(dec.recomposition_error < 1e-9);
        assert!(dec.min_choi_eig_at_tmin.abs() <= tol().eig_zero);
    }

    #[test]
    fn t_min_formula_and_boundary_rank_for_higher_dims() {
        for (d, mu) in [(2usize, 1.0), (3, 1.0), (3, 2.5), (4, 0.7)] {
            let n = ChannelRep::completely_depolarizing(d);
            let mut psi = CVec::zeros(d);
            psi[0] = cr(1.0);
            let g = LindbladGenerator::psi_collapse(&psi, mu).unwrap();
            let dec = lb_decompose_sided(&n, &g, Side::Left, 10.0 / mu, &tol()).unwrap();
            let expect = (d as f64 / (d as f64 - 1.0)).ln() / mu;
            assert!((dec.t_min - expect).abs() < 1e-8, "d={d} mu={mu}: {} vs {expect}", dec.t_min);
            assert_eq!(dec.boundary.kraus_rank(&tol()).unwrap(), d * d - d);
        }
    }

    #[test]
    fn pauli_singular_channel_splits_into_flip_factors() {
        // diag(1, 0, 0, λ) = diag(1, 1, λ, λ) ∘ diag(1, 0, 0, 1)
        let lambda = 0.75;
        let e = ChannelRep::pauli_channel(0.0, 0.0, lambda).unwrap();
        // bit-flip generator: dissipation only on the X slot of the basis
        let mut g_mat = crate::linalg::CMat::zeros(3, 3);
        g_mat[(0, 0)] = cr(1.0);
        let g = LindbladGenerator::pure_dissipative(2, g_mat, &tol()).unwrap();
        let dec = lb_decompose_sided(&e, &g, Side::Left, 5.0, &tol()).unwrap();
        let expect_boundary = ChannelRep::pauli_channel(0.0, 0.0, 1.0).unwrap();
        assert!(frob_dist_r(&dec.boundary.to_ptm(), &expect_boundary.to_ptm()) < 1e-8);
        let markov = dec.generator.exp(1.0).unwrap();
        let expect_markov = ChannelRep::bit_flip(lambda).unwrap();
        assert!(frob_dist_r(&markov.to_ptm(), &expect_markov.to_ptm()) < 1e-8);
        assert_eq!(dec.boundary.kraus_rank(&tol()).unwrap(), 2);
        assert_eq!(markov.kraus_rank(&tol()).unwrap(), 2);
    }

    #[test]
    fn auto_depolarizing_matches_explicit_psi_route() {
        let n = ChannelRep::completely_depolarizing(2);
        let dec = lb_decompose_auto(&n, &tol()).unwrap();
        assert!((dec.t_min - 2.0f64.ln()).abs() < 1e-8);
        assert!(dec.recomposition_error < 1e-8);
        assert!(dec.boundary.kraus_rank(&tol()).unwrap() < 4);
    }

    #[test]
    fn auto_e_not_squared_has_deficient_boundary() {
        let e = ChannelRep::optimal_not();
        let sq = e.compose(&e).unwrap();
        let dec = lb_decompose_auto(&sq, &tol()).unwrap();
        assert!(dec.boundary.kraus_rank(&tol()).unwrap() < 4);
        assert!(dec.recomposition_error < 1e-8);
    }

    #[test]
    fn identity_is_rejected_as_unitary() {
        let id = ChannelRep::identity(2);
        assert!(matches!(lb_decompose_auto(&id, &tol()), Err(Error::UnitaryInput)));
    }

    #[test]
    fn scan_with_two_steps_samples_endpoints() {
        let n = ChannelRep::completely_depolarizing(2);
        let g = LindbladGenerator::psi_collapse(&ket0(), 1.0).unwrap();
        let samples = crossing_scan(&n, &g, 1.0, 2).unwrap();
        assert_eq!(samples.len(), 2);
        assert_eq!(samples[0].t, 0.0);
        assert_eq!(samples[1].t, 1.0);
    }

    #[test]
    fn scan_brackets_ln2_for_depolarizing() {
        let n = ChannelRep::completely_depolarizing(2);
        let g = LindbladGenerator::psi_collapse(&ket0(), 1.0).unwrap();
        let samples = crossing_scan(&n, &g, 1.0, 101).unwrap();
        let mut crossing = None;
        for w in samples.windows(2) {
            if w[0].min_choi_eig > 0.0 && w[1].min_choi_eig <= 0.0 {
                crossing = Some((w[0].t, w[1].t));
            }
        }
        let (lo, hi) = crossing.expect("sign change found");
        assert!(lo < 2.0f64.ln() && 2.0f64.ln() < hi);
        assert!(lo >= 0.69 - 1e-9 && hi <= 0.70 + 1e-9, "bracket [{lo}, {hi}]");
    }

    #[test]
    fn inverse_family_of_identity_leaves_cp_immediately() {
        // e^(-tL) alone is not CP for any t > 0 when L is strictly dissipative
        let id = ChannelRep::identity(2);
        let g = LindbladGenerator::psi_collapse(&ket0(), 1.0).unwrap();
        let samples = crossing_scan(&id, &g, 1.0, 50).unwrap();
        for s in &samples[1..] {
            assert!(s.min_choi_eig < -1e-12, "t={}: {}", s.t, s.min_choi_eig);
        }
    }

    #[test]
    fn right_sided_decomposition_of_depolarizing_detects_constant_family() {
        let n = ChannelRep::completely_depolarizing(2);
        let g = LindbladGenerator::psi_collapse(&ket0(), 1.0).unwrap();
        match lb_decompose_sided(&n, &g, Side::Right, 5.0, &tol()) {
            Err(Error::ConstantFamily) => {}
            other => panic!("expected ConstantFamily, got {other:?}"),
        }
    }

    #[test]
    fn determinant_bracket_bounds_tmin_for_nonsingular_channels() {
        // t_min <= t' for the same generator (the det bound is only sufficient)
        let e = ChannelRep::pauli_channel(0.4, 0.3, 0.2).unwrap();
        let g = LindbladGenerator::depolarizing(2, 1.0).unwrap();
        let dec = lb_decompose(&e, &g, &tol()).unwrap();
        let t_prime = -e.determinant().abs().ln() / (2.0 * g.kossakowski_trace());
        assert!(dec.t_min <= t_prime + 1e-9, "t_min {} > t' {}", dec.t_min, t_prime);
    }

    #[test]
    fn boundary_input_is_reported() {
        let e = ChannelRep::optimal_not(); // already rank 3, on the boundary
        let g = LindbladGenerator::depolarizing(2, 1.0).unwrap();
        assert!(matches!(lb_decompose(&e, &g, &tol()), Err(Error::AlreadyOnBoundary { .. })));
    }

    #[test]
    fn zero_generator_is_rejected() {
        let e = ChannelRep::completely_depolarizing(2);
        let g = LindbladGenerator::pure_dissipative(2, crate::linalg::CMat::zeros(3, 3), &tol()).unwrap();
        assert!(matches!(lb_decompose(&e, &g, &tol()), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn minimality_no_crossing_before_tmin() {
        let n = ChannelRep::completely_depolarizing(2);
        let g = LindbladGenerator::psi_collapse(&ket0(), 1.0).unwrap();
        let dec = lb_decompose(&n, &g, &tol()).unwrap();
        // no earlier crossing: strictly CP-interior on [0, t_min - t_tol]
        let samples = crossing_scan(&n, &g, dec.t_min - tol().t_tol, 64).unwrap();
        for s in &samples {
            assert!(s.min_choi_eig > 0.0, "t={}", s.t);
        }
        // with a margin larger than the eigenvalue slope times eig_zero, the
        // witness clears the zero band as well
        let margin = crossing_scan(&n, &g, dec.t_min - 1e-5, 64).unwrap();
        for s in &margin {
            assert!(s.min_choi_eig > tol().eig_zero, "t={}", s.t);
        }
    }
}
