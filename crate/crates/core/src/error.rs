use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DklError {
    #[error("invalid parameter: {0}")]
    Domain(String),

    #[error("inadmissible exponents {beta:?}: {reason}")]
    Inadmissible { beta: [f64; 4], reason: &'static str },

    #[error("points coincide where distinct points are required")]
    CoincidentPoints,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("quadrature did not converge: value {value:e}, error estimate {error:e} after {evaluations} evaluations")]
    Quadrature { value: f64, error: f64, evaluations: usize },

    #[error("root not bracketed: {0}")]
    Bracket(String),

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unknown identifier `{0}`")]
    UnknownId(String),

    #[error("malformed constants file, line {line}: {reason}")]
    Constants { line: usize, reason: String },
}

pub type DklResult<T> = Result<T, DklError>;

impl DklError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        DklError::Domain(msg.into())
    }

    /// True for failures that come from numerics rather than from bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, DklError::Quadrature { .. } | DklError::Bracket(_) | DklError::Divergent(_))
    }
}
