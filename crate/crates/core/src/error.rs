use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid QUBO: {0}")]
    InvalidQubo(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("normalized cost undefined: random-guess cost equals global optimum ({0})")]
    DegenerateNormalization(f64),

    #[error("invalid weight range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("qubit {qubit} out of range for {n_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },

    #[error("parameter slot {slot} missing (theta has {len} entries)")]
    MissingParameter { slot: usize, len: usize },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("postselection of qubit {qubit} on {value} has zero probability")]
    ZeroProbabilityBranch { qubit: usize, value: u8 },

    #[error("postselection probability {prob:.3e} below floor {floor:.3e}")]
    PostselectionFailure { prob: f64, floor: f64 },

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("problem size {n} exceeds exhaustive-search cap {cap}")]
    SizeCapExceeded { n: usize, cap: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
