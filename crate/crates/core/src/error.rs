use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vector length {0} is not a perfect square")]
    NonSquareDim(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("jump operator {index} has negative rate {rate}")]
    NegativeRate { index: usize, rate: f64 },

    #[error("Liouvillian kernel has dimension {0}, expected exactly 1")]
    DegenerateKernel(usize),

    #[error(
        "recovery offset {offset} does not exceed the largest positive eigenvalue of the \
         Hermitian part times t (required > {required})"
    )]
    RecoveryOffsetTooSmall { offset: f64, required: f64 },

    #[error("invalid quadrature grid: {0}")]
    InvalidGrid(String),

    #[error("cannot prepare a zero-norm state")]
    PreparationFailure,

    #[error("time grid is not uniformly spaced")]
    NonUniformGrid,

    #[error("series time grids differ")]
    GridMismatch,

    #[error("state-preparation target is the zero vector")]
    ZeroVector,

    #[error("state-preparation target is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("{requested} qubits exceeds the simulator limit of {limit}")]
    TooManyQubits { requested: usize, limit: usize },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("not a density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid noise model: {0}")]
    InvalidNoise(String),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("fit needs at least 3 rows above the floating-point floor, found {0}")]
    DegenerateFit(usize),

    #[error("too few time points: need {needed}, found {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
