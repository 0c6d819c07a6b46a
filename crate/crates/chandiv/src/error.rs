//! Crate-wide error type.

/// Errors produced by channel construction, decomposition and analysis.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix of size {rows}x{cols} is not a square d^2 x d^2 (or d x d) matrix")]
    BadShape { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: asymmetry {asymmetry:.3e}")]
    NotHermitian { asymmetry: f64 },

    #[error("map is not completely positive: min Choi eigenvalue {min_eig:.6e}")]
    NotCompletelyPositive { min_eig: f64 },

    #[error("map is not trace preserving: residual {residual:.3e}")]
    NotTracePreserving { residual: f64 },

    #[error("state vector is not normalized: |norm - 1| = {deviation:.3e}")]
    NotNormalized { deviation: f64 },

    #[error("basis is not orthonormal: residual {residual:.3e}")]
    NotOrthonormal { residual: f64 },

    #[error("Kossakowski matrix is not positive semidefinite: min eigenvalue {min_eig:.6e}")]
    KossakowskiNotPsd { min_eig: f64 },

    #[error("superoperator is not a Lindblad generator: {details}")]
    NotLindblad { details: String },

    #[error("negative evolution time t = {t}")]
    NegativeTime { t: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("channel is unitary (Kraus rank 1); there is nothing to decompose")]
    UnitaryInput,

    #[error("channel is already on the CP boundary: min Choi eigenvalue {min_eig:.3e}")]
    AlreadyOnBoundary { min_eig: f64 },

    #[error("family e^(-tL) E stays completely positive up to t = {horizon:.6e}; enlarge the scan horizon")]
    NoBoundaryCrossing { horizon: f64 },

    #[error("family is constant (e^(-tL) composed with the channel never moves); choose a different generator")]
    ConstantFamily,

    #[error("Kraus rank {rank} exceeds the maximum of {max} supported here")]
    RankTooHigh { rank: usize, max: usize },

    #[error("normal-form extraction failed: {details}")]
    NormalFormExtraction { details: String },

    #[error("result is numerically indeterminate: {details}")]
    Indeterminate { details: String },

    #[error("channel is not infinitesimally divisible; every factorization contains a factor of Kraus rank at least 3")]
    NotInfinitesimallyDivisible,

    #[error("factorization not implemented for this input: {details}")]
    UnsupportedFactorization { details: String },

    #[error("malformed specification: {details}")]
    Spec { details: String },
}

pub type Result<T> = std::result::Result<T, Error>;
