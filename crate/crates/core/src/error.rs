use crate::solvers::ConvergenceTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected length {expected}, got {got}")]
    Shape {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("value outside domain: {0}")]
    Domain(String),

    /// The stepsize triple fails the relaxed condition and no override was given.
    #[error("stepsize check refused: {binding} violated (margin {margin:e})")]
    StepsizeRefused { binding: &'static str, margin: f64 },

    #[error("usage error: {0}")]
    Usage(String),

    /// A non-finite or exploding iterate. Carries every trace row recorded
    /// before the blow-up.
    #[error("iteration diverged at step {iteration}: {reason}")]
    Diverged {
        iteration: usize,
        reason: String,
        trace: Box<ConvergenceTrace>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape {
            context,
            expected,
            got,
        })
    }
}
