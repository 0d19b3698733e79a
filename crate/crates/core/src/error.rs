use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows} entries for dimension {dim})")]
    NotSquare { rows: usize, dim: usize },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("negative jump rate {0}")]
    NegativeRate(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("singular linear system")]
    Singular,

    #[error("steady state is not unique: kernel dimension {0}")]
    DegenerateSteadyState(usize),

    #[error("step size underflow at t = {t}: problem too stiff for the explicit integrator")]
    Stiff { t: f64 },

    #[error("ambiguous neutral mode (trace overlap {overlap:.3}) for eigenvalue {eigenvalue}")]
    AmbiguousNeutralMode { overlap: f64, eigenvalue: String },

    #[error("empty averaging window")]
    EmptyWindow,

    #[error("too few samples for a spectrum: {0} (need at least 8)")]
    TooFewSamples(usize),

    #[error("trajectory was recorded without full states")]
    StatesNotRecorded,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
