//! Two-qubit dilation circuits, exact simulation and simulated process
//! tomography.
//!
//! A Kraus rank <= 2 qubit channel embeds into a single 4x4 unitary V acting
//! on ancilla ⊗ system (ancilla starts in |0>):
//!
//!   `E[ρ] = tr_ancilla[ V (|0><0| ⊗ ρ) V† ]`
//!
//! with V(|0> ⊗ |φ>) = |0> ⊗ K1|φ> + |1> ⊗ K2|φ>. Chains of such factors run
//! as a two-qubit circuit with an ancilla reset between stages; the reset is
//! simulated directly as trace-out plus fresh |0> preparation.
//!
//! Process tomography runs the 12 standard settings (four preparations
//! |0>, |1>, |+>, |+i> times three measurement bases X, Y, Z), estimates the
//! output expectations from seeded binomial samples and reconstructs PTM and
//! Choi matrix by linear inversion. No maximum-likelihood projection is
//! applied; negative reconstructed eigenvalues are reported as-is.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::basis::paulis;
use crate::chanrep::{ChannelRep, Tolerances};
use crate::error::{Error, Result};
use crate::linalg::{c, cr, sqrtm_psd, trace_out_first, unitary_completion, CMat, CVec, RMat};
use crate::par;

/// One unitary stage of a dilation circuit.
#[derive(Debug, Clone)]
pub struct DilationStage {
    /// 4x4 unitary on ancilla ⊗ system.
    pub unitary: CMat,
    /// Whether the ancilla is reset to |0> after this stage (true for every
    /// stage except possibly the last; semantics are unaffected because the
    /// ancilla is traced out either way).
    pub reset_ancilla_after: bool,
}

/// A dilation circuit: ancilla initialized to |0>, one unitary per factor,
/// reset between stages.
#[derive(Debug, Clone)]
pub struct DilationCircuit {
    pub stages: Vec<DilationStage>,
}

/// Result of a simulated process tomography run.
#[derive(Debug, Clone)]
pub struct TomographyResult {
    /// Linear-inversion Choi matrix (trace 2 by construction).
    pub reconstructed_choi: CMat,
    /// Linear-inversion PTM.
    pub reconstructed_ptm: RMat,
    /// Shots per setting; 0 means exact outcome probabilities were used.
    pub shots_per_setting: u64,
    pub seed: u64,
    /// Fidelity against the exact Choi matrix of the simulated circuit.
    pub fidelity_vs_exact: Option<f64>,
}

/// Fidelity between two trace-2 Choi matrices.
#[derive(Debug, Clone, Copy)]
pub struct Fidelity {
    pub value: f64,
    /// An eigenvalue below -eig_zero was clipped during the matrix square
    /// roots (statistical noise warning).
    pub clipped_negative: bool,
}

/// Stinespring dilation of a Kraus rank <= 2 qubit channel.
///
/// Returns the 4x4 unitary V with `tr_anc[V(|0><0| ⊗ ρ)V†] = E[ρ]`; the two
/// fixed columns come from the Kraus operators, the rest from a deterministic
/// Gram-Schmidt completion.
pub fn dilate_rank2(e: &ChannelRep, tol: &Tolerances) -> Result<CMat> {
    if e.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: e.dim() });
    }
    let rank = e.kraus_rank(tol)?;
    if rank > 2 {
        return Err(Error::RankTooHigh { rank, max: 2 });
    }
    let mut kraus = e.to_kraus(tol)?;
    kraus.truncate(2);
    while kraus.len() < 2 {
        kraus.push(CMat::zeros(2, 2));
    }
    // columns for inputs |anc=0, sys=s>: stack K1|s> on the ancilla-0 block
    // and K2|s> on the ancilla-1 block
    let mut fixed = Vec::with_capacity(2);
    for s in 0..2 {
        let mut col = CVec::zeros(4);
        for r in 0..2 {
            col[r] = kraus[0][(r, s)];
            col[2 + r] = kraus[1][(r, s)];
        }
        fixed.push(col);
    }
    let full = unitary_completion(&fixed, 4);
    // completion appends the free columns last; reorder so the fixed ones sit
    // at input indices 0 and 1 (|0,s>)
    let mut v = CMat::zeros(4, 4);
    v.set_column(0, &full.column(0).clone_owned());
    v.set_column(1, &full.column(1).clone_owned());
    v.set_column(2, &full.column(2).clone_owned());
    v.set_column(3, &full.column(3).clone_owned());
    verify_dilation(&v, e, tol)?;
    Ok(v)
}

/// Checks that a 4x4 unitary dilates the channel; returns the worst
/// entrywise error over an operator basis of inputs.
pub fn verify_dilation(v: &CMat, e: &ChannelRep, _tol: &Tolerances) -> Result<f64> {
    if v.nrows() != 4 || v.ncols() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: v.nrows() });
    }
    let unitarity = ((v.adjoint() * v) - CMat::identity(4, 4)).norm();
    if unitarity > 1e-10 {
        return Err(Error::NotOrthonormal { residual: unitarity });
    }
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let mut x = CMat::zeros(2, 2);
            x[(i, j)] = cr(1.0);
            let expect = e.apply(&x)?;
            let got = apply_stage(v, &x);
            worst = worst.max((got - expect).norm());
        }
    }
    if worst > 1e-9 * (1.0 + e.to_superop().norm()) {
        return Err(Error::InvalidParameter {
            name: "unitary",
            reason: format!("does not dilate the channel (worst basis error {worst:.3e})"),
        });
    }
    Ok(worst)
}

/// tr_anc[V (|0><0| ⊗ x) V†] for an arbitrary 2x2 operator x.
fn apply_stage(v: &CMat, x: &CMat) -> CMat {
    let mut joint = CMat::zeros(4, 4);
    // ancilla |0><0| block is the top-left 2x2 block in ancilla ⊗ system
    for r in 0..2 {
        for cc in 0..2 {
            joint[(r, cc)] = x[(r, cc)];
        }
    }
    let evolved = v * joint * v.adjoint();
    trace_out_first(&evolved, 2, 2)
}

/// Builds a circuit with one dilation stage per rank <= 2 factor, applied in
/// list order, with ancilla resets between stages.
pub fn build_circuit(factors: &[ChannelRep], tol: &Tolerances) -> Result<DilationCircuit> {
    let mut stages = Vec::with_capacity(factors.len());
    for (i, f) in factors.iter().enumerate() {
        stages.push(DilationStage {
            unitary: dilate_rank2(f, tol)?,
            reset_ancilla_after: i + 1 < factors.len(),
        });
    }
    Ok(DilationCircuit { stages })
}

/// The channel induced by the circuit, as an exact PTM-backed representation.
pub fn simulate_exact(circuit: &DilationCircuit) -> ChannelRep {
    let mut superop = CMat::identity(4, 4);
    for stage in &circuit.stages {
        let mut stage_op = CMat::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                let mut x = CMat::zeros(2, 2);
                x[(i, j)] = cr(1.0);
                let out = apply_stage(&stage.unitary, &x);
                let col = crate::linalg::vec_col(&out);
                // column index of vec(|i><j|) in column stacking is j*2+i
                for r in 0..4 {
                    stage_op[(r, j * 2 + i)] = col[r];
                }
            }
        }
        superop = stage_op * superop;
    }
    ChannelRep::from_superop(2, superop).expect("4x4 superoperator")
}

/// Runs the circuit on a density matrix (resets included).
fn run_circuit_density(circuit: &DilationCircuit, rho: &CMat) -> CMat {
    let mut state = rho.clone();
    for stage in &circuit.stages {
        state = apply_stage(&stage.unitary, &state);
    }
    state
}

fn preparation_states() -> [CMat; 4] {
    let zero = CMat::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(0.0)]);
    let one = CMat::from_row_slice(2, 2, &[cr(0.0), cr(0.0), cr(0.0), cr(1.0)]);
    let plus = CMat::from_row_slice(2, 2, &[cr(0.5), cr(0.5), cr(0.5), cr(0.5)]);
    let plus_i = CMat::from_row_slice(2, 2, &[cr(0.5), c(0.0, -0.5), c(0.0, 0.5), cr(0.5)]);
    [zero, one, plus, plus_i]
}

/// Simulated process tomography over the 12 settings.
///
/// `shots = 0` uses exact outcome probabilities (the infinite-shot limit);
/// otherwise each setting draws a seeded binomial sample. Fixed seeds give
/// bit-identical results.
pub fn simulate_tomography(circuit: &DilationCircuit, shots: u64, seed: u64) -> Result<TomographyResult> {
    let preps = preparation_states();
    let sigma = paulis();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // m[prep][basis] = estimated <sigma_basis> on the output
    let mut m = [[0.0f64; 3]; 4];
    for (pi, prep) in preps.iter().enumerate() {
        let out = run_circuit_density(circuit, prep);
        for b in 0..3 {
            let p_plus = {
                let proj = (CMat::identity(2, 2) + sigma[b + 1].clone()).scale(0.5);
                (proj * &out).trace().re.clamp(0.0, 1.0)
            };
            m[pi][b] = if shots == 0 {
                2.0 * p_plus - 1.0
            } else {
                let dist = Binomial::new(shots, p_plus).map_err(|e| Error::InvalidParameter {
                    name: "shots",
                    reason: e.to_string(),
                })?;
                let k = dist.sample(&mut rng) as f64;
                2.0 * k / shots as f64 - 1.0
            };
        }
    }

    // linear inversion: PTM = [[1, 0], [t, M]] with
    // t = (m_0 + m_1)/2, M e_z = (m_0 - m_1)/2, M e_x = m_+ - t, M e_y = m_+i - t
    let mut ptm = RMat::identity(4, 4);
    for b in 0..3 {
        let t = 0.5 * (m[0][b] + m[1][b]);
        ptm[(b + 1, 0)] = t;
        ptm[(b + 1, 3)] = 0.5 * (m[0][b] - m[1][b]);
        ptm[(b + 1, 1)] = m[2][b] - t;
        ptm[(b + 1, 2)] = m[3][b] - t;
    }
    let rep = ChannelRep::from_ptm(2, ptm.clone())?;
    let choi = rep.to_choi();

    let exact_choi = simulate_exact(circuit).to_choi();
    let fidelity = choi_fidelity(&choi, &exact_choi, &Tolerances::default()).ok().map(|f| f.value);

    Ok(TomographyResult {
        reconstructed_choi: choi,
        reconstructed_ptm: ptm,
        shots_per_setting: shots,
        seed,
        fidelity_vs_exact: fidelity,
    })
}

/// Tomography repeated over `trials` independent seeds derived from
/// `master_seed` by fixed offsets; trials run in parallel under the
/// `parallel` feature with identical results either way.
pub fn tomography_trials(
    circuit: &DilationCircuit,
    shots: u64,
    master_seed: u64,
    trials: usize,
) -> Result<Vec<TomographyResult>> {
    let seeds: Vec<u64> = (0..trials as u64).map(|i| trial_seed(master_seed, i)).collect();
    let results = par::maybe_par_map(seeds, |s| simulate_tomography(circuit, shots, s));
    results.into_iter().collect()
}

/// Sequential twin of [`tomography_trials`] for benchmarking.
pub fn tomography_trials_seq(
    circuit: &DilationCircuit,
    shots: u64,
    master_seed: u64,
    trials: usize,
) -> Result<Vec<TomographyResult>> {
    let seeds: Vec<u64> = (0..trials as u64).map(|i| trial_seed(master_seed, i)).collect();
    let results = par::seq_map(seeds, |s| simulate_tomography(circuit, shots, s));
    results.into_iter().collect()
}

fn trial_seed(master: u64, index: u64) -> u64 {
    master.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Fidelity F = tr sqrt(sqrt(A) B sqrt(A)) / 2 between trace-2 Choi matrices.
pub fn choi_fidelity(a: &CMat, b: &CMat, tol: &Tolerances) -> Result<Fidelity> {
    for m in [a, b] {
        let asym = crate::linalg::herm_asymmetry(m);
        if asym > 1e-8 * (1.0 + m.norm()) {
            return Err(Error::NotHermitian { asymmetry: asym });
        }
        let tr = m.trace().re;
        if (tr - 2.0).abs() > 0.05 {
            return Err(Error::InvalidParameter {
                name: "choi",
                reason: format!("trace {tr} is not close to 2"),
            });
        }
    }
    let (sqrt_a, min_a) = sqrtm_psd(a);
    let inner = &sqrt_a * b * &sqrt_a;
    let (vals, _) = crate::linalg::hermitian_eigen(&inner);
    let min_inner = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let clipped = min_a < -tol.eig_zero || min_inner < -tol.eig_zero;
    // eigenvalues at rounding scale turn into sqrt(eps)-sized contributions
    // after the square root; zero them relative to the largest eigenvalue
    let cutoff = 1e-13 * vals.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let value = vals.iter().map(|&v| if v > cutoff { v.sqrt() } else { 0.0 }).sum::<f64>() / 2.0;
    Ok(Fidelity { value, clipped_negative: clipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frob_dist_r;
    use rand::{Rng, SeedableRng};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    /// The dephasing boundary factor diag(1, 0, 0, 1) dilates through the
    /// permutation-like unitary with rows (|10>, |01>, |00>, |11>).
    #[test]
    fn explicit_boundary_unitary_passes_verification() {
        let u = CMat::from_row_slice(4, 4, &[
            cr(0.0), cr(0.0), cr(1.0), cr(0.0),
            cr(0.0), cr(1.0), cr(0.0), cr(0.0),
            cr(1.0), cr(0.0), cr(0.0), cr(0.0),
            cr(0.0), cr(0.0), cr(0.0), cr(1.0),
        ]);
        let e = ChannelRep::pauli_channel(0.0, 0.0, 1.0).unwrap();
        let err = verify_dilation(&u, &e, &tol()).unwrap();
        assert!(err < 1e-12);
    }

    /// The bit-flip Markov factor diag(1, 1, λ, λ) with λ = 3/4 dilates
    /// through the unitary with entries ±sqrt((1 ∓ λ)/2).
    #[test]
    fn explicit_markov_unitary_passes_verification() {
        let l: f64 = 0.75;
        let gm = ((1.0 - l) / 2.0).sqrt();
        let gp = ((1.0 + l) / 2.0).sqrt();
        let u = CMat::from_row_slice(4, 4, &[
            cr(0.0), cr(gm), cr(0.0), cr(-gp),
            cr(gm), cr(0.0), cr(-gp), cr(0.0),
            cr(gp), cr(0.0), cr(gm), cr(0.0),
            cr(0.0), cr(gp), cr(0.0), cr(gm),
        ]);
        let e = ChannelRep::bit_flip(l).unwrap();
        let err = verify_dilation(&u, &e, &tol()).unwrap();
        assert!(err < 1e-12);
    }

    #[test]
    fn identity_dilation_is_ancilla_decoupled() {
        let v = dilate_rank2(&ChannelRep::identity(2), &tol()).unwrap();
        let err = verify_dilation(&v, &ChannelRep::identity(2), &tol()).unwrap();
        assert!(err < 1e-12);
    }

    #[test]
    fn rank_three_input_is_refused() {
        let e = ChannelRep::optimal_not();
        assert!(matches!(dilate_rank2(&e, &tol()), Err(Error::RankTooHigh { rank: 3, max: 2 })));
    }

    #[test]
    fn swap_stage_collapses_to_ancilla_state() {
        // V = SWAP: tr_anc[SWAP (|0><0| ⊗ ρ) SWAP] = |0><0| tr(ρ)
        let mut swap = CMat::zeros(4, 4);
        for a in 0..2 {
            for s in 0..2 {
                swap[(s * 2 + a, a * 2 + s)] = cr(1.0);
            }
        }
        let circuit = DilationCircuit { stages: vec![DilationStage { unitary: swap, reset_ancilla_after: false }] };
        let ch = simulate_exact(&circuit);
        let mut zero = CMat::zeros(2, 2);
        zero[(0, 0)] = cr(1.0);
        let expect = ChannelRep::collapse_to(&zero).unwrap();
        assert!(frob_dist_r(&ch.to_ptm(), &expect.to_ptm()) < 1e-12);
    }

    #[test]
    fn empty_circuit_is_identity() {
        let ch = simulate_exact(&DilationCircuit { stages: vec![] });
        assert!(frob_dist_r(&ch.to_ptm(), &RMat::identity(4, 4)) < 1e-14);
    }

    #[test]
    fn two_stage_circuit_implements_diag_1_0_0_lambda() {
        let lambda = 0.75;
        let factors = vec![
            ChannelRep::pauli_channel(0.0, 0.0, 1.0).unwrap(),
            ChannelRep::bit_flip(lambda).unwrap(),
        ];
        let circuit = build_circuit(&factors, &tol()).unwrap();
        let ch = simulate_exact(&circuit);
        let expect = ChannelRep::pauli_channel(0.0, 0.0, lambda).unwrap();
        assert!(frob_dist_r(&ch.to_ptm(), &expect.to_ptm()) < 1e-12);
        assert!(circuit.stages[0].reset_ancilla_after);
        assert!(!circuit.stages[1].reset_ancilla_after);
    }

    #[test]
    fn three_flip_factors_recompose() {
        let e = ChannelRep::pauli_channel(0.6, 0.5, 0.4).unwrap();
        let factors = crate::divisibility::factor_rank2(&e, &tol()).unwrap();
        let circuit = build_circuit(&factors, &tol()).unwrap();
        let ch = simulate_exact(&circuit);
        assert!(frob_dist_r(&ch.to_ptm(), &e.to_ptm()) < 1e-9);
    }

    #[test]
    fn random_rank2_dilations_are_sound() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(101);
        for _ in 0..50 {
            let k = 1 + rng.random_range(0..2usize);
            let e = crate::haar::random_channel(2, k, &mut rng);
            let circuit = build_circuit(std::slice::from_ref(&e), &tol()).unwrap();
            let ch = simulate_exact(&circuit);
            assert!(frob_dist_r(&ch.to_ptm(), &e.to_ptm()) < 1e-9);
        }
    }

    #[test]
    fn exact_mode_tomography_is_lossless() {
        let factors = vec![
            ChannelRep::pauli_channel(0.0, 0.0, 1.0).unwrap(),
            ChannelRep::bit_flip(0.75).unwrap(),
        ];
        let circuit = build_circuit(&factors, &tol()).unwrap();
        let result = simulate_tomography(&circuit, 0, 7).unwrap();
        let exact = simulate_exact(&circuit);
        assert!(frob_dist_r(&result.reconstructed_ptm, &exact.to_ptm()) < 1e-12);
        assert!((result.reconstructed_choi.trace().re - 2.0).abs() < 1e-12);
        assert!((result.fidelity_vs_exact.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tomography_is_deterministic_under_fixed_seed() {
        let circuit = build_circuit(&[ChannelRep::bit_flip(0.5).unwrap()], &tol()).unwrap();
        let a = simulate_tomography(&circuit, 500, 42).unwrap();
        let b = simulate_tomography(&circuit, 500, 42).unwrap();
        assert_eq!(a.reconstructed_ptm, b.reconstructed_ptm);
        assert_eq!(a.reconstructed_choi, b.reconstructed_choi);
    }

    #[test]
    fn sampled_tomography_fidelity_is_high() {
        let factors = vec![
            ChannelRep::pauli_channel(0.0, 0.0, 1.0).unwrap(),
            ChannelRep::bit_flip(0.75).unwrap(),
        ];
        let circuit = build_circuit(&factors, &tol()).unwrap();
        let result = simulate_tomography(&circuit, 20_000, 3).unwrap();
        assert!(result.fidelity_vs_exact.unwrap() > 0.99);
    }

    #[test]
    fn fidelity_of_identical_chois_is_one() {
        let choi = ChannelRep::bit_flip(0.3).unwrap().to_choi();
        let f = choi_fidelity(&choi, &choi, &tol()).unwrap();
        assert!((f.value - 1.0).abs() < 1e-10);
        assert!(!f.clipped_negative);
    }

    #[test]
    fn fidelity_identity_vs_depolarizing_is_one_half() {
        // A = 2 |Bell><Bell| (rank one): sqrt(A) B sqrt(A) = |Bell><Bell| for
        // B = 1/2, so F = tr sqrt(|Bell><Bell|) / 2 = 1/2
        let a = ChannelRep::identity(2).to_choi();
        let b = ChannelRep::completely_depolarizing(2).to_choi();
        let f = choi_fidelity(&a, &b, &tol()).unwrap();
        assert!((f.value - 0.5).abs() < 1e-10, "got {}", f.value);
        let g = choi_fidelity(&b, &a, &tol()).unwrap();
        assert!((f.value - g.value).abs() < 1e-9);
    }

    #[test]
    fn fidelity_against_hardware_choi_sample() {
        // a single-run hardware tomography estimate of diag(1, 0, 0, 3/4)
        let exp = CMat::from_row_slice(4, 4, &[
            cr(0.87815), c(0.0104, -0.03035), c(0.001725, -0.040975), c(0.0119, -0.011),
            c(0.0104, 0.03035), cr(0.12185), c(-0.0066, -0.0091), c(-0.001725, 0.040975),
            c(0.001725, 0.040975), c(-0.0066, 0.0091), cr(0.1649), c(0.0046, 0.00495),
            c(0.0119, 0.011), c(-0.001725, -0.040975), c(0.0046, -0.00495), cr(0.8351),
        ]);
        let theo = ChannelRep::pauli_channel(0.0, 0.0, 0.75).unwrap().to_choi();
        let f = choi_fidelity(&theo, &exp, &tol()).unwrap();
        assert!(f.value > 0.97 && f.value <= 1.0 + 1e-9, "got {}", f.value);
    }

    #[test]
    fn trials_are_parallel_safe_and_seed_stable() {
        let circuit = build_circuit(&[ChannelRep::bit_flip(0.6).unwrap()], &tol()).unwrap();
        let a = tomography_trials(&circuit, 200, 9, 4).unwrap();
        let b = tomography_trials_seq(&circuit, 200, 9, 4).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.reconstructed_ptm, y.reconstructed_ptm);
        }
    }
}
