use alloc::string::String;

/// Errors produced by the simulation and analysis pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid qubit count {0}")]
    InvalidQubitCount(u32),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("Dicke excitation number {n} out of range for {qubits} qubits")]
    ExcitationOutOfRange { n: u32, qubits: u32 },
    #[error("cannot parse probe `{0}` (expected dicke-<n>, dicke-half, x-polarized or ghz)")]
    ProbeParse(String),
    #[error("states do not share a basis layout")]
    LayoutMismatch,
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("maximum number of integration steps exceeded at t = {t}")]
    MaxSteps { t: f64 },
    #[error("invariant violated at t = {t}: {what}")]
    InvariantViolation { t: f64, what: String },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("degenerate fit data: {0}")]
    DegenerateData(String),
    #[error("fit did not converge: {0}")]
    FitNotConverged(String),
    #[error("time-optimized QFI for N = {qubits} sits at the edge of the time grid")]
    BoundaryPeak { qubits: u32 },
    #[error("state is not permutation symmetric (distance {0:e})")]
    NotSymmetric(f64),
    #[error("oracle supports at most 5 qubits, got {0}")]
    OracleTooLarge(u32),
}

pub type Result<T> = core::result::Result<T, Error>;
