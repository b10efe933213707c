use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degree {degree} exceeds recurrence table range (n_max = {n_max})")]
    DegreeOutOfRange { degree: usize, n_max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point {0} is a root of phi_(N-1); r_N has a pole there")]
    PoleStart(f64),

    #[error("symmetric tridiagonal eigensolve failed: {0}")]
    EigenFailure(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("multi-index set is not downward closed (missing {missing:?})")]
    NotDownwardClosed { missing: Vec<u32> },

    #[error("index set would have more than {limit} elements")]
    SizeOverflow { limit: usize },

    #[error("candidate matrix is rank deficient: achieved rank {achieved}, requested {requested} pivots")]
    RankDeficient { achieved: usize, requested: usize },

    #[error("least-squares system is rank deficient (smallest singular value {sigma_min:e})")]
    SingularLeastSquares { sigma_min: f64 },

    #[error("instance too large for exhaustive search: {0}")]
    InstanceTooLarge(String),

    #[error("unsupported density combination: {0}")]
    UnsupportedDensity(String),

    #[error("singular tridiagonal system at row {0}")]
    SingularSystem(usize),
}
