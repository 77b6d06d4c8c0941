use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitOutOfRange { index: usize, num_qubits: usize },

    #[error("gate addresses the same qubit twice ({0})")]
    RepeatedQubit(usize),

    #[error("dense gate is not unitary (deviation {0:.3e})")]
    NonUnitary(f64),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("label out of range: {0}")]
    OutOfRange(String),

    #[error("invalid encoding: {0}")]
    Encoding(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("refusing to enumerate 2^{0} basis states (limit is 2^24)")]
    TooManyQubits(usize),

    #[error("non-adjacent pair ({0}, {1}); fermionic two-site gates need consecutive Jordan-Wigner sites")]
    NonAdjacent(usize, usize),

    #[error("orbital rows are not orthonormal (deviation {0:.3e})")]
    NotOrthonormal(f64),

    #[error("zero pattern violated at row {row}, column {col} (|entry| = {magnitude:.3e})")]
    PatternViolation { row: usize, col: usize, magnitude: f64 },

    #[error("degenerate driver spectrum: energy range W_t is zero")]
    FlatBand,

    #[error("unknown {kind} `{name}` (known: {known})")]
    UnknownStrategy { kind: &'static str, name: String, known: String },

    #[error("method `{method}` is incompatible with this instance: {reason}")]
    Incompatible { method: String, reason: String },

    #[error("non-finite energy encountered during {0}")]
    NonFinite(&'static str),

    #[error("numerical pathology: {0}")]
    Pathology(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("gate-count certification failed for {component}: expected ({exp_single}, {exp_two}), synthesized ({got_single}, {got_two})")]
    Certification {
        component: String,
        exp_single: i64,
        exp_two: i64,
        got_single: i64,
        got_two: i64,
    },

    #[error("instance file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
