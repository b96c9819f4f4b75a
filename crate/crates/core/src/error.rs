use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong below the CLI layer.
///
/// `Capacity` is deliberately distinct from `Config`: the former means a
/// register would exceed the supported qubit count at runtime, the latter
/// means the requested run was malformed before any simulation started.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {n} outside supported range 1..={max}")]
    QubitCount { n: usize, max: usize },

    #[error("register capacity exceeded: need {requested} qubits, capacity is {max}")]
    Capacity { requested: usize, max: usize },

    #[error("target qubit {qubit} out of range for a {n}-qubit register")]
    TargetOutOfRange { qubit: usize, n: usize },

    #[error("duplicate target qubits in {targets:?}")]
    DuplicateTargets { targets: Vec<usize> },

    #[error("operator acts on {got} qubits, expected 1..={max}")]
    OperatorArity { got: usize, max: usize },

    #[error("operator is not unitary (deviation {defect:.3e} exceeds {tolerance:.1e})")]
    NotUnitary { defect: f64, tolerance: f64 },

    #[error("bad basis bitstring {bits:?}: {reason}")]
    BadBitstring { bits: String, reason: String },

    #[error("state dimension mismatch: {left} vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },

    #[error("cannot discard the last remaining qubit")]
    LastQubit,

    #[error("post-selected branch has zero probability")]
    ImpossibleBranch,

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Convenience constructor for configuration problems; the message should
    /// name the offending key so CLI users can find it.
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
