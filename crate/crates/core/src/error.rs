use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({0}, {1}, {2}) lies on a singular locus of the field")]
    SingularPoint(f64, f64, f64),

    #[error("point ({0}, {1}, {2}) lies outside the field domain")]
    OutOfDomain(f64, f64, f64),

    #[error("integral does not converge: {0}")]
    NonFinite(String),

    #[error("sphere of radius {radius} around ({}, {}, {}) meets a singular locus", center[0], center[1], center[2])]
    SingularOnSphere { center: [f64; 3], radius: f64 },

    #[error("dipole half-length {half_length} is below 4 grid spacings ({spacing})")]
    DegenerateDipole { half_length: f64, spacing: f64 },

    #[error("{requested} segments exceed the configured cap of {cap}")]
    ResourceLimit { requested: u128, cap: u128 },

    #[error("right-hand side has mean {mean} (scale {scale}); Poisson problem is not solvable")]
    NonZeroMean { mean: f64, scale: f64 },

    #[error("need at least 2 valid radii, found {0}")]
    TooFewRadii(usize),

    #[error("charges sum to {0}, zero-flux boundary requires 0")]
    Incompatible(i64),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
