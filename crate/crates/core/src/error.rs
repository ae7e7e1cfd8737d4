use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {0} is out of range")]
    QubitCount(u32),

    #[error("invalid bit string: {0}")]
    BitString(String),

    #[error("invalid control string: {0}")]
    ControlString(String),

    #[error("control strings are not a single-position 0/1 bi-partition: {0} / {1}")]
    NotABipartition(String, String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("vector length {0} is not a power of two >= 2")]
    NotPowerOfTwo(usize),

    #[error("degenerate input: all entries are zero")]
    DegenerateInput,

    #[error("encoding precision L = {0} is out of range (2..=32)")]
    Precision(u32),

    #[error("nothing to decompose: binary vector is zero")]
    NothingToDecompose,

    #[error("decomposition did not terminate after {0} rounds")]
    NoProgress(usize),

    #[error("malformed cost matrix: {0}")]
    CostMatrix(String),

    #[error("invalid tour: {0}")]
    Tour(String),

    #[error("qubit {qubit} out of range for a {width}-qubit register")]
    QubitOutOfRange { qubit: usize, width: usize },

    #[error("target register not disentangled (mass on TARGET=1 is {0:e})")]
    TargetEntangled(f64),

    #[error("success probability {0} leaves nothing to amplify")]
    Amplification(f64),

    #[error("invalid input spec: {0}")]
    InputSpec(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
