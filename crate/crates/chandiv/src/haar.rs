//! Seeded random unitaries and channels, used by the property suites and the
//! statistical tests.

use rand::Rng;

use crate::chanrep::ChannelRep;
use crate::linalg::{c, CMat, CVec};

/// Haar-random d x d unitary via QR of a complex Gaussian matrix.
pub fn random_unitary<R: Rng>(d: usize, rng: &mut R) -> CMat {
    let g = random_gaussian(d, d, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    // fix the phase convention so Q is Haar distributed
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / c(rjj.norm(), 0.0) } else { c(1.0, 0.0) };
        let col = q.column(j) * phase.conj();
        q.set_column(j, &col);
    }
    q
}

/// Random CPTP channel from `kraus_count` Kraus operators (a random Stinespring
/// isometry cut into blocks).
pub fn random_channel<R: Rng>(d: usize, kraus_count: usize, rng: &mut R) -> ChannelRep {
    assert!(kraus_count >= 1);
    let g = random_gaussian(d * kraus_count, d, rng);
    let qr = g.qr();
    let q = qr.q(); // (d*kraus_count) x d isometry
    let mut kraus = Vec::with_capacity(kraus_count);
    for b in 0..kraus_count {
        kraus.push(q.rows(b * d, d).clone_owned());
    }
    ChannelRep::from_kraus(d, kraus).expect("blocks are d x d")
}

/// Random normalized state vector.
pub fn random_state<R: Rng>(d: usize, rng: &mut R) -> CVec {
    let mut v = CVec::from_fn(d, |_, _| gaussian_c(rng));
    let n = v.norm();
    v /= c(n, 0.0);
    v
}

fn random_gaussian<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| gaussian_c(rng))
}

fn gaussian_c<R: Rng>(rng: &mut R) -> crate::linalg::C64 {
    // Box-Muller
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    let r = (-2.0 * u1.ln()).sqrt();
    c(r * (2.0 * std::f64::consts::PI * u2).cos(), r * (2.0 * std::f64::consts::PI * u2).sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chanrep::Tolerances;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in [2usize, 3] {
            let u = random_unitary(d, &mut rng);
            assert!(((u.adjoint() * &u) - CMat::identity(d, d)).norm() < 1e-10);
        }
    }

    #[test]
    fn random_channel_is_cptp() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let tol = Tolerances::default();
        for d in [2usize, 3] {
            for k in 1..=d * d {
                let ch = random_channel(d, k, &mut rng);
                let (cp, _) = ch.is_cp(&tol).unwrap();
                let (tp, _) = ch.is_tp(&tol);
                assert!(cp && tp);
            }
        }
    }
}
