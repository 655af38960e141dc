use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("matrix of dimension {dim} does not hold {n_qubits} qubits")]
    QubitCountMismatch { dim: usize, n_qubits: usize },

    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("qubit index {0} listed twice")]
    DuplicateQubit(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("entry count {len} does not match dimension {dim} (need dim^2)")]
    BadEntryCount { dim: usize, len: usize },

    #[error("matrix is not Hermitian (max |m - m^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("trace {trace} differs from one")]
    NotNormalized { trace: f64 },

    #[error("minimum eigenvalue {min:e} is negative beyond tolerance")]
    NotPositive { min: f64 },

    #[error("eigenvalue iteration failed to converge")]
    NoConvergence,

    #[error("eigenvalue has imaginary part {imag:e} beyond tolerance")]
    ComplexSpectrum { imag: f64 },

    #[error("{name} = {value} outside [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("explicit target requested without a state")]
    MissingExplicitState,

    #[error("fidelity needs a pure target (largest eigenvalue {largest})")]
    MixedTarget { largest: f64 },

    #[error("measurement outcome probability {probability:e} is below tolerance")]
    DegenerateOutcome { probability: f64 },

    #[error("Bell index {0} outside 1..=4")]
    BadBellIndex(u8),

    #[error("threshold undefined for zero input concurrence")]
    ThresholdUndefined,

    #[error("invalid configuration: {0}")]
    Config(String),
}
