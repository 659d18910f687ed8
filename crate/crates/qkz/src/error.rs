use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("subset {0:?} is not strictly increasing")]
    UnsortedSubset(Vec<usize>),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },

    #[error("{what} evaluated within pole tolerance at {location}")]
    PoleProximity { what: &'static str, location: Complex64 },

    #[error("singular configuration: {0}")]
    Singular(String),

    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("quadrature did not converge{}: worst panel [{a}, {b}] with error {error:e}", variable.map(|v| format!(" in variable {v}")).unwrap_or_default())]
    NonConvergence { variable: Option<usize>, a: f64, b: f64, error: f64 },

    #[error("integrand is not finite at {0}")]
    NonFinite(Complex64),

    #[error("pole at {0} is not simple")]
    NonSimplePole(Complex64),

    #[error("residue at {location} unstable under node doubling (change {change:e})")]
    ResidueUnstable { location: Complex64, change: f64 },

    #[error("contour construction failed: {0}")]
    Contour(String),

    #[error("outside the convergence regime: {0}")]
    ConvergenceRegime(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParams { field, reason: reason.into() }
    }

    /// Tag a quadrature failure with the integration variable it came from.
    pub(crate) fn in_variable(self, v: usize) -> Self {
        match self {
            Error::NonConvergence { variable: None, a, b, error } => {
                Error::NonConvergence { variable: Some(v), a, b, error }
            }
            other => other,
        }
    }
}
