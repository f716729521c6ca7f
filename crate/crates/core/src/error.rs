use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // -- linear algebra --
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (max asymmetry {max_asym:e})")]
    NotSymmetric { max_asym: f64 },
    #[error("matrix is not positive semi-definite (eigenvalue {min_eig:e}, largest {max_eig:e})")]
    NotPsd { min_eig: f64, max_eig: f64 },
    #[error("matrix is singular (eigenvalue {min_eig:e}, largest {max_eig:e})")]
    Singular { min_eig: f64, max_eig: f64 },
    #[error("zero or negative variance at index {index}")]
    ZeroVariance { index: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    // -- estimation --
    #[error("non-finite value in input")]
    NonFiniteInput,
    #[error("too few rows: need at least 2, got {0}")]
    TooFewRows(usize),
    #[error("treatment arm {0} has no records")]
    EmptyArm(u8),
    #[error("treatment arm {0} has no record without a terminal event")]
    NoSurvivors(u8),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    // -- cone projection --
    #[error("half-space normal {0} has zero norm")]
    ZeroNormal(usize),
    #[error(
        "Dykstra projection did not converge in {cycles} cycles (displacement {displacement:e})"
    )]
    NoConvergence { cycles: usize, displacement: f64 },
    #[error("correlation {0} too close to +/-1")]
    DegenerateCorrelation(f64),

    // -- testing --
    #[error("null sample is empty")]
    EmptySample,
    #[error("invalid hypothesis specification: {0}")]
    InvalidHypothesis(String),
    #[error("Monte-Carlo draws must be at least {min}, got {got}")]
    TooFewDraws { min: usize, got: usize },
    #[error("subset is empty")]
    EmptySubset,
    #[error("too many hypotheses for closed testing: {0} (max 20)")]
    TooManyHypotheses(usize),
    #[error("alternative does not hold (z_max = {0})")]
    NullAlternative(f64),
    #[error("experiment has no replications")]
    EmptyExperiment,

    // -- input --
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of the numerical machinery, as opposed to malformed
    /// input. The CLI maps the former to exit code 3 and the latter to 2.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPsd { .. }
                | Error::Singular { .. }
                | Error::ZeroVariance { .. }
                | Error::NoConvergence { .. }
                | Error::DegenerateCorrelation(_)
                | Error::ZeroNormal(_)
                | Error::EmptyArm(_)
                | Error::NoSurvivors(_)
                | Error::NullAlternative(_)
                | Error::EmptySample
        )
    }

    /// Module the error belongs to, for user-facing messages.
    pub fn module(&self) -> &'static str {
        match self {
            Error::NotSquare { .. }
            | Error::NotSymmetric { .. }
            | Error::NotPsd { .. }
            | Error::Singular { .. }
            | Error::ZeroVariance { .. } => "linalg",
            Error::TooFewRows(_) | Error::EmptyArm(_) | Error::NoSurvivors(_) => "estimands",
            Error::ZeroNormal(_) | Error::NoConvergence { .. } => "cone",
            Error::DegenerateCorrelation(_)
            | Error::EmptySample
            | Error::InvalidHypothesis(_)
            | Error::TooFewDraws { .. } => "tests",
            Error::EmptySubset | Error::TooManyHypotheses(_) => "multtest",
            Error::NullAlternative(_) => "bahadur",
            Error::EmptyExperiment | Error::InvalidConfig(_) => "config",
            Error::DimensionMismatch { .. } | Error::NonFiniteInput | Error::Parse(_) => "input",
        }
    }
}
