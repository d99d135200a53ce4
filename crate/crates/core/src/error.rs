use std::fmt;

/// Errors produced by the numerical modules.
///
/// Each variant maps onto one CLI exit-code class (see [`Error::exit_code`]).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("verification failure: {0}")]
    VerificationFailure(String),

    #[error("invalid state: {0}")]
    StateInvalid(String),

    #[error("step rejected at t = {time}: {reason}")]
    StepRejected { time: f64, reason: String },

    #[error("run aborted at t = {time}: {reason}")]
    Aborted { time: f64, reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Convergence,
    Verification,
    Runtime,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidInput(_) => ErrorClass::Input,
            Error::NoConvergence(_) => ErrorClass::Convergence,
            Error::VerificationFailure(_) => ErrorClass::Verification,
            Error::StateInvalid(_) | Error::StepRejected { .. } | Error::Aborted { .. } | Error::Io(_) => {
                ErrorClass::Runtime
            }
        }
    }

    /// Process exit code: input=2, convergence=3, verification-failure=4, runtime=5.
    pub fn exit_code(&self) -> i32 {
        self.class().exit_code()
    }
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Input => 2,
            ErrorClass::Convergence => 3,
            ErrorClass::Verification => 4,
            ErrorClass::Runtime => 5,
        }
    }
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ErrorClass::Input => "input",
            ErrorClass::Convergence => "convergence",
            ErrorClass::Verification => "verification-failure",
            ErrorClass::Runtime => "runtime",
        };
        f.write_str(s)
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
