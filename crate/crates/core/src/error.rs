use thiserror::Error;

/// Errors raised by the library.
///
/// Variants map onto the CLI exit codes: validation-type errors exit with 1,
/// numerical failures (resolution, orientability, convergence) exit with 2.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("vector norm {norm:e} is too small to normalise")]
    Normalization { norm: f64 },

    #[error("{0} is outside the domain of the modulus (t must be nonnegative)")]
    Domain(f64),

    #[error("retraction step reaches the cut point (|n + w| = {norm:e})")]
    StepTooLarge { norm: f64 },

    #[error("modulus is inadmissible: {}", .0.join("; "))]
    InadmissibleModulus(Vec<String>),

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("unknown field kind `{0}`")]
    UnknownKind(String),

    #[error("unknown target `{0}`")]
    UnknownTarget(String),

    #[error("insufficient resolution: {} unresolved edge(s), first {:?}", .edges.len(), .edges.first())]
    InsufficientResolution { edges: Vec<(usize, usize)> },

    #[error("non-orientable region: holonomy obstruction at {0}")]
    NonOrientable(String),

    #[error("under-resolved cell {cell}: rounding residual {residual:.3}")]
    UnderResolvedCell { cell: usize, residual: f64 },

    #[error("solver stopped {status} after {iterations} iterations (gradient norm {grad_norm:e})")]
    NotConverged { status: &'static str, iterations: usize, grad_norm: f64 },

    #[error("radius {radius} below the admissible minimum {min}")]
    SubGridRadius { radius: f64, min: f64 },

    #[error("configuration error(s): {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// `true` for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepTooLarge { .. }
                | Error::InsufficientResolution { .. }
                | Error::NonOrientable(_)
                | Error::UnderResolvedCell { .. }
                | Error::NotConverged { .. }
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Invalid(_) => "invalid",
            Error::Normalization { .. } => "normalization",
            Error::Domain(_) => "domain",
            Error::StepTooLarge { .. } => "step-too-large",
            Error::InadmissibleModulus(_) => "inadmissible-modulus",
            Error::UnsupportedDomain(_) => "unsupported-domain",
            Error::UnknownKind(_) => "unknown-kind",
            Error::UnknownTarget(_) => "unknown-target",
            Error::InsufficientResolution { .. } => "insufficient-resolution",
            Error::NonOrientable(_) => "non-orientable",
            Error::UnderResolvedCell { .. } => "under-resolved-cell",
            Error::NotConverged { .. } => "not-converged",
            Error::SubGridRadius { .. } => "sub-grid-radius",
            Error::Config(_) => "config",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
