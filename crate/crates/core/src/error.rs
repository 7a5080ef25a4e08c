use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension {0}: a Fock space needs at least 2 levels")]
    InvalidDimension(usize),

    #[error("invalid nonlinearity order {0}: M must be at least 2")]
    InvalidOrder(u32),

    #[error("truncation: tail mass {tail:.3e} exceeds threshold {threshold:.1e} at dimension {dim}")]
    Truncation { tail: f64, threshold: f64, dim: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("finite-difference step {eps:.3e} is dominated by roundoff (infidelity {infidelity:.3e}); try a larger step or dimension")]
    StepSize { eps: f64, infidelity: f64 },

    #[error("degenerate sensitivity: derivative {derivative:.3e} is indistinguishable from zero (noise floor {floor:.3e})")]
    DegenerateSensitivity { derivative: f64, floor: f64 },

    #[error("invalid dissipation rate {0}: gamma must be positive")]
    InvalidDissipation(f64),

    #[error("unsupported branch: {0}")]
    UnsupportedBranch(String),

    #[error("inconclusive squeezing sweep: {0}")]
    InconclusiveSweep(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Numerical failures (as opposed to bad input) map to a distinct CLI exit code.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Truncation { .. }
                | Error::StepSize { .. }
                | Error::DegenerateSensitivity { .. }
                | Error::InconclusiveSweep(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
