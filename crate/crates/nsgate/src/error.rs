//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("cutoff mismatch: {0} vs {1}")]
    CutoffMismatch(usize, usize),
    #[error("mode count mismatch: {0} vs {1}")]
    ModeCountMismatch(usize, usize),
    #[error("occupation {occupation} exceeds cutoff {cutoff}")]
    OccupationAboveCutoff { occupation: usize, cutoff: usize },
    #[error("cannot normalize a zero-norm state")]
    ZeroNorm,
    #[error("operation requires a single-mode state, got {0} modes")]
    NotSingleMode(usize),
    #[error("state is not normalized: squared norm {0}")]
    NotNormalized(f64),
    #[error("invalid POVM assignment: {0}")]
    InvalidPovmAssignment(String),
    #[error("density matrix is not Hermitian: max deviation {0:.3e}")]
    NotHermitian(f64),
    #[error("density matrix is not positive semidefinite: min eigenvalue {0:.3e}")]
    NotPositive(f64),
    #[error("density matrix trace {0} outside [0, 1]")]
    TraceOutOfRange(f64),
    #[error("reflectivity {0} outside [0, 1]")]
    InvalidReflectivity(f64),
    #[error("efficiency {0} outside [0, 1]")]
    InvalidEfficiency(f64),
    #[error("cascade size must be >= 1, got {0}")]
    InvalidCascadeSize(u32),
    #[error("beamsplitter must couple two distinct modes")]
    DegenerateBeamsplitter,
    #[error("mode index {0} out of range for {1} modes")]
    ModeOutOfRange(usize, usize),
    #[error("no beamsplitter convention in the searched family matches the anchor amplitudes")]
    CalibrationFailed,
    #[error("state has support beyond photon number 2")]
    SupportBeyondTwo,
    #[error("closed-form amplitudes for this entry are only available at the design reflectivities")]
    OffDesignClosedForm,
    #[error("scheme {0} has no closed-form conditional output")]
    NoClosedForm(String),
    #[error("no apparent successes possible (conditional trace is zero)")]
    NoApparentSuccess,
    #[error("fidelity is undefined at zero success probability")]
    UndefinedFidelity,
    #[error("gate fidelity never crosses the target value on the searched interval")]
    NoCrossing,
    #[error("unknown scheme: {0}")]
    UnknownScheme(String),
}

pub type Result<T> = std::result::Result<T, Error>;
