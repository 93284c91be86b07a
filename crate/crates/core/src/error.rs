use thiserror::Error;

/// Errors raised by the numerical and physical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("eigensolver did not converge after {sweeps} sweeps (residual {residual:.3e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),

    #[error("gap set is empty (fewer than two distinct energies)")]
    EmptyGapSet,

    #[error("fewer than two distinct gap values")]
    AllGapsEqual,

    #[error("averaging window must be positive, got T = {0}")]
    NonPositiveT(f64),

    #[error("quadrature pitch {pitch:.3e} exceeds the limit {limit:.3e}")]
    PitchTooCoarse { pitch: f64, limit: f64 },

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("measurement set is empty")]
    EmptySet,

    #[error("input `{0}` must be positive")]
    NonPositiveInput(&'static str),

    #[error("d_E = {0} is below the lemma's domain (d_E >= 2)")]
    DomainTooSmall(usize),

    #[error("model too large: {0}")]
    TooLarge(String),

    #[error("bad parameters: {0}")]
    BadParameters(String),

    #[error("invalid state: {0}")]
    InvalidState(String),
}

impl Error {
    /// True for failures of the numerical machinery rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NoConvergence { .. } | Error::PitchTooCoarse { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
