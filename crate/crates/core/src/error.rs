use thiserror::Error;

/// Failure modes of grid construction, operator assembly, stepping and runs.
///
/// `QuenchOverflow` is a signal, not a defect: the source term refuses to
/// evaluate at or above unity so that quenching is always detected by the
/// driver instead of silently saturating the arithmetic.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Degeneracy coefficient hit zero (or below) away from the boundary.
    #[error("sigma must stay positive at interior nodes: sigma[{index}] = {value}")]
    DegenerateInterior { index: usize, value: f64 },

    /// Degeneracy profile evaluated on or outside the boundary, where it vanishes.
    #[error("sigma profile evaluated at |x| >= 1 (x = {0})")]
    BoundaryDegeneracy(f64),

    /// A solution component reached unity inside a source evaluation.
    #[error("source evaluation at or above unity: v[{index}] = {value}")]
    QuenchOverflow { index: usize, value: f64 },

    #[error("time step {tau} exceeds the stability ceiling {ceiling}")]
    CflViolation { tau: f64, ceiling: f64 },

    /// Loss of the algebraic structure the scheme relies on
    /// (zero pivot in a tridiagonal solve, nonpositive product under a root).
    #[error("structure error: {0}")]
    Structure(String),

    #[error("range error: {0}")]
    Range(String),

    /// The nonlinear stability probe needs the base run to survive to its
    /// probe horizon; quenching inside the window invalidates the measurement.
    #[error("probe window error: {0}")]
    ProbeWindow(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
