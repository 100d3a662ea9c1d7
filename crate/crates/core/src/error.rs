use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("qubit index {index} out of range for {n} qubits")]
    QubitOutOfRange { index: usize, n: usize },

    #[error("duplicate qubit {0} within a term")]
    DuplicateQubit(usize),

    #[error("invalid Pauli string {0:?}: expected one or two characters from {{X, Y, Z}}")]
    BadPauli(String),

    #[error("terms act on differing qubit pairs")]
    MixedPairs,

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("device graph is disconnected; components: {0:?}")]
    Disconnected(Vec<Vec<usize>>),

    #[error("device has {device} qubits but the circuit needs {circuit}")]
    DeviceTooSmall { device: usize, circuit: usize },

    #[error("unknown topology preset {0:?}")]
    UnknownPreset(String),

    #[error("unknown gate set {0:?}")]
    UnknownGateSet(String),

    #[error("qubits {0} and {1} cannot be connected on this device")]
    Unreachable(usize, usize),

    #[error("{qubits} qubits exceeds the dense simulation cap of {cap}")]
    AboveCap { qubits: usize, cap: usize },

    #[error("synthesis residual {0:.3e} above tolerance")]
    SynthesisResidual(f64),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than a broken invariant.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Internal(_) | Error::SynthesisResidual(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
