use std::fmt;

/// Errors surfaced by the solver library.
#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    /// A sampled function returned NaN/inf at a quadrature point.
    NonFiniteSample { x: f64 },
    /// Trace requested at a domain boundary without ghost-value context.
    MissingGhost { interface: usize },
    /// Inconsistent or out-of-range configuration.
    InvalidConfig(String),
    /// Degenerate porous-media point (rho <= 0 with m < 0) reached on a path
    /// that has no reformulated solve.
    DegeneratePoint { element: usize },
    /// A per-element implicit block could not be solved.
    NumericalBreakdown { element: usize },
    /// Operation not defined for this collision model.
    UnsupportedModel(&'static str),
    /// Time integration order outside {1, 2, 3}.
    UnsupportedOrder(usize),
    /// Harness-level I/O failure.
    Io(String),
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::NonFiniteSample { x } => {
                write!(f, "non-finite function sample at x = {x}")
            }
            SolverError::MissingGhost { interface } => {
                write!(f, "boundary interface {interface} has no ghost-value context")
            }
            SolverError::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            SolverError::DegeneratePoint { element } => {
                write!(f, "degenerate porous point (rho <= 0) in element {element}")
            }
            SolverError::NumericalBreakdown { element } => {
                write!(f, "singular implicit stage block in element {element}")
            }
            SolverError::UnsupportedModel(what) => {
                write!(f, "operation not defined for this collision model: {what}")
            }
            SolverError::UnsupportedOrder(order) => {
                write!(f, "unsupported time integration order {order} (expected 1, 2 or 3)")
            }
            SolverError::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for SolverError {}

impl From<std::io::Error> for SolverError {
    fn from(e: std::io::Error) -> Self {
        SolverError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SolverError>;
