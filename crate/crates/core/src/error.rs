use thiserror::Error;

/// Errors raised by the scheme analysis, boundary-layer construction and the
/// IBVP driver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A structural invariant of a scheme description is violated.
    #[error("invalid scheme: {0}")]
    InvalidScheme(String),

    /// The scheme fails one of the consistency sums needed by the operation.
    #[error("inconsistent scheme: {0}")]
    Inconsistent(String),

    #[error("unknown builtin scheme `{name}` (available: {available})")]
    UnknownScheme { name: String, available: String },

    /// A bad argument value (sample counts, tolerances, grid sizes, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The amplification function was evaluated at its pole.
    #[error("amplification function has a pole of order {order} at z = 0")]
    Pole { order: usize },

    /// A root of z^r A(z) sits too close to the unit circle for the profile
    /// to decay.
    #[error("root {re} + {im}i lies within the borderline band of the unit circle")]
    Borderline { re: f64, im: f64 },

    #[error("eigenvalue computation did not converge{}", .eta.map(|e| format!(" at eta = {e}")).unwrap_or_default())]
    RootFinding { eta: Option<f64> },

    #[error("contour integral {value} is {distance} away from an integer; contour too coarse or root near contour")]
    ContourCount { value: f64, distance: f64 },

    #[error("multistep method hypothesis failed: {0}")]
    Hypothesis(String),

    /// The boundary-layer basis matrix is numerically singular.
    #[error("singular basis matrix (condition number {cond:e})")]
    Singular { cond: f64 },

    /// A boundary-layer sequence that should be real has an imaginary part.
    #[error("sequence value at j = {j} has imaginary part {imag:e}")]
    NotReal { j: usize, imag: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("non-finite initial data at x = {x}")]
    NonFiniteInput { x: f64 },

    #[error("blow-up: non-finite value at time level {n}, cell {j}")]
    BlowUp { n: usize, j: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
