use thiserror::Error;

/// Failure classes shared by every module of the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("singular input: {0}")]
    SingularInput(String),
    #[error("no stabilizing solution: {0}")]
    NoStabilizingSolution(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("H2 norm is infinite: closed loop has nonzero feedthrough")]
    InfiniteH2Norm,
    #[error("certificate construction failed: {0}")]
    CertificateConstruction(String),
    #[error("lift failed: {0}")]
    LiftFailure(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("synthesis failed: {0}")]
    SynthesisFailure(String),
    #[error("assumption violated: {0}")]
    AssumptionViolation(String),
    #[error("controller is not a bridge: {0}")]
    NotABridge(String),
    #[error("bridge controller infeasible: {0}")]
    BridgeInfeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Coarse classification used for process exit codes.
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidInput(_) => ErrorClass::Input,
            Error::PreconditionViolation(_)
            | Error::SingularInput(_)
            | Error::InfiniteH2Norm
            | Error::InvariantViolation(_)
            | Error::AssumptionViolation(_)
            | Error::NotABridge(_)
            | Error::BridgeInfeasible(_) => ErrorClass::Precondition,
            Error::NoStabilizingSolution(_)
            | Error::NumericalFailure(_)
            | Error::CertificateConstruction(_)
            | Error::LiftFailure(_)
            | Error::SynthesisFailure(_) => ErrorClass::Numerical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Precondition,
    Numerical,
}
