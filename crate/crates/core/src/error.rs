use thiserror::Error;

pub type Result<T> = std::result::Result<T, EchoError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EchoError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("tridiagonal eigensolver did not converge for eigenvalue {index} after {iterations} iterations")]
    EigenNoConvergence { index: usize, iterations: usize },

    #[error("Schur decomposition of the Floquet operator failed: {0}")]
    SpectralFailure(String),

    #[error("resonant denominator for mode m={m} at j={j}")]
    SingularFrequency { m: i32, j: f64 },

    #[error("non-resonance condition violated near j={j}; use the lattice-sum plateau instead")]
    NonresonanceViolated { j: f64 },

    #[error("degenerate eigenphases for levels {n} and {k} (gap {gap:e})")]
    DegenerateSpectrum { n: i64, k: i64, gap: f64 },

    #[error("quadrature failed to converge on [{a}, {b}] (error estimate {error:e})")]
    QuadratureNoConvergence { a: f64, b: f64, error: f64 },

    #[error("point lies on a pole of the sphere; angle is undefined")]
    PoleDegenerate,

    #[error("no stationary point of the doubly averaged perturbation in the action range (boundary-dominated regime)")]
    NoStationaryPoint,

    #[error("frequency derivative vanishes at the packet center; no t1 scale")]
    NoT1Scale,

    #[error("dense oracle requested for S={spin} above the limit S={limit}; pass the override flag")]
    OracleSizeExceeded { spin: u32, limit: u32 },
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> EchoError {
    EchoError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
