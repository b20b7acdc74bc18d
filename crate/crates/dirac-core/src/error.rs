use thiserror::Error;

/// Failure modes surfaced by the workbench.
///
/// Numerical routines never panic on bad input or non-convergence; they
/// return one of these variants so callers (and the CLI exit-code mapping)
/// can distinguish schema problems from solver problems from genuine
/// mathematical obstructions.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("linear solver failed: {0}")]
    LinearSolver(String),

    /// The right-hand side has a component in the cokernel of the operator
    /// larger than the declared tolerance; the minimal-norm solve reports the
    /// size of that component instead of returning a bogus solution.
    #[error("equation not solvable: relative obstruction {obstruction:.3e} exceeds tolerance {tolerance:.1e}")]
    NotSolvable { obstruction: f64, tolerance: f64 },

    /// A weight construction could not certify a positive margin; the
    /// payload pinpoints the violating site and the dominant negative term.
    #[error("weight construction failed: {0}")]
    Construction(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
