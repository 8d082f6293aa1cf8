//! Error type shared by all solver components.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// A caller violated an operation's contract (dimension mismatch,
    /// invalid parameter, malformed matrix structure).
    Contract(String),
    /// An iterative linear solve did not reach the requested tolerance.
    SolverFailure {
        context: String,
        best_residual: f64,
        iterations: usize,
    },
    /// Residual-time restarting could not find any step length on the
    /// backtracking grid that meets the tolerance.
    RestartStagnation { best_residual: f64 },
    /// Adaptive substepping shrank the substep below the representable floor.
    StepUnderflow { tau: f64 },
    /// Two independent reference computations disagree; the reference
    /// solution cannot be trusted.
    ReferenceMismatch { disagreement: f64 },
    Io(std::io::Error),
    Parse(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Contract(msg) => write!(f, "contract violation: {msg}"),
            Error::SolverFailure {
                context,
                best_residual,
                iterations,
            } => write!(
                f,
                "linear solver failed in {context}: best residual {best_residual:.3e} after {iterations} iterations"
            ),
            Error::RestartStagnation { best_residual } => write!(
                f,
                "restarted evaluation stagnated: smallest achieved residual {best_residual:.3e}"
            ),
            Error::StepUnderflow { tau } => {
                write!(f, "substep size underflow: tau = {tau:.3e}")
            }
            Error::ReferenceMismatch { disagreement } => write!(
                f,
                "reference cross-check disagreement {disagreement:.3e} exceeds trust threshold"
            ),
            Error::Io(e) => write!(f, "i/o error: {e}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
