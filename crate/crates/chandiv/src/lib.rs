//! Divisibility analysis of finite-dimensional quantum channels.
//!
//! The crate decides divisibility properties of quantum channels and builds
//! the decompositions behind those decisions:
//!
//! * [`chanrep`] — channel representations (PTM, Choi, Kraus, superoperator),
//!   conversions and CP/TP/rank predicates;
//! * [`lindblad`] — GKSL generators in canonical form and the semigroup
//!   `t -> e^(tL)`;
//! * [`lbdecomp`] — the Lindblad-boundary factorization `E = e^L E_boundary`;
//! * [`lorentz`] — qubit Lorentz normal forms and the M(v, x, z) family;
//! * [`divisibility`] — qubit divisibility classification and rank-2
//!   factorization of infinitesimally divisible channels;
//! * [`dilation`] — two-qubit dilation circuits, exact simulation and
//!   shot-sampled process tomography.
//!
//! All types are immutable values and safe to share across threads. The
//! `parallel` feature (default on) runs scans, lattice sweeps and tomography
//! batches on rayon; disabling it gives bit-identical sequential results.

// `!(x > 0.0)`-style guards are deliberate: they reject NaN parameters.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod chanrep;
pub mod dilation;
pub mod divisibility;
pub mod error;
pub mod haar;
pub mod io;
pub mod lbdecomp;
pub mod linalg;
pub mod lindblad;
pub mod lorentz;
mod par;

pub use chanrep::{Body, ChannelRep, Tolerances};
pub use error::{Error, Result};
