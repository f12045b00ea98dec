use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("register layout conflict: {0}")]
    LayoutConflict(String),

    #[error("unknown register `{0}`")]
    UnknownRegister(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("forced measurement outcome has probability {probability:.3e}")]
    ZeroProbabilityOutcome { probability: f64 },

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("capacity violation on channel {channel}: {detail}")]
    Capacity { channel: String, detail: String },

    #[error("locality violation at {node}: {detail}")]
    Locality { node: String, detail: String },

    #[error("invalid program: {0}")]
    Program(String),

    #[error("trace is missing data: {0}")]
    TraceIncomplete(String),

    #[error("audit not applicable: trace shows prior entanglement, I(R1E1:R2E2) = {independence:.6}")]
    PriorEntanglement { independence: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}
