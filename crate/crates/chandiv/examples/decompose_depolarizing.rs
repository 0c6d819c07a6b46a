//! Decompose a depolarizing mixture into its Markovian and boundary parts,
//! classify everything involved, and rebuild the channel from a two-qubit
//! dilation circuit.
//!
//! Run with `cargo run --example decompose_depolarizing`.

use chandiv::chanrep::{ChannelRep, Tolerances};
use chandiv::dilation;
use chandiv::divisibility;
use chandiv::lbdecomp;

fn main() -> chandiv::Result<()> {
    let tol = Tolerances::default();

    // a NOT-like mixture: divisible, but not into arbitrarily many pieces
    let channel = ChannelRep::pauli_channel(-0.2, -0.2, -0.2)?;
    let report = divisibility::classify(&channel, &tol)?;
    println!("class: {}", report.class.as_str());
    println!("kraus rank: {}", report.kraus_rank);

    let dec = lbdecomp::lb_decompose_auto(&channel, &tol)?;
    println!("t_min = {:.12}", dec.t_min);
    println!("recomposition error = {:.3e}", dec.recomposition_error);

    let boundary_class = divisibility::classify(&dec.boundary, &tol)?;
    println!("boundary class: {}", boundary_class.class.as_str());

    // infinitesimally divisible channels run on a single ancilla qubit
    let infdiv = ChannelRep::pauli_channel(0.0, 0.0, 0.75)?;
    let factors = divisibility::factor_rank2(&infdiv, &tol)?;
    println!("factors: {}", factors.len());
    let circuit = dilation::build_circuit(&factors, &tol)?;
    let simulated = dilation::simulate_exact(&circuit);
    let err = (simulated.to_ptm() - infdiv.to_ptm()).norm();
    println!("circuit reproduces the channel to {err:.3e}");

    let tomo = dilation::simulate_tomography(&circuit, 20_000, 7)?;
    println!(
        "sampled tomography fidelity: {:.6}",
        tomo.fidelity_vs_exact.unwrap_or(f64::NAN)
    );
    Ok(())
}
