use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },
    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("mode vector is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },
    #[error("modes are not orthogonal (overlap {overlap:.3e})")]
    NotOrthogonal { overlap: f64 },
    #[error("Born probability {p} outside [0, 1]: correlation matrix is corrupted")]
    CorruptedState { p: f64 },
    #[error("measurement strength must be non-negative, got {0}")]
    NegativeStrength(f64),
    #[error("index {index} out of range for {len} modes")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("too many modes for the Fock oracle: {0} (max 10)")]
    TooManyModes(usize),
    #[error("band gap closes at k = ({kx:.4}, {ky:.4}) for alpha = {alpha}")]
    GapClosed { kx: f64, ky: f64, alpha: f64 },
    #[error("eigenvalue {0} lies within 1e-9 of 1/2: regularization undefined")]
    RegularizationUndefined(f64),
    #[error("regions overlap")]
    OverlappingRegions,
    #[error("region does not fit in the lattice: {0}")]
    RegionTooLarge(String),
    #[error("charge {charge} outside the open interval ({lo}, {hi})")]
    ChargeOutOfRange { charge: usize, lo: usize, hi: usize },
    #[error("integration unstable: density {value} left [-0.1, 1.1] at t = {t}")]
    Unstable { value: f64, t: f64 },
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
