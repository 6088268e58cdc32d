use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("unknown Pauli axis `{0}`")]
    UnknownAxis(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operator is not tagged as a joint qubit-resonator operator")]
    NotJoint,

    #[error("density matrix invariant violated: {0}")]
    InvalidState(String),

    #[error("Liouvillian kernel is {dim}-dimensional; steady state is ambiguous")]
    AmbiguousSteadyState { dim: usize },

    #[error("zero polarization rate: {0}")]
    ZeroRate(String),

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error("trajectory hygiene breach at t = {time:e} s: {what}")]
    InvariantBreach { time: f64, what: String },

    #[error("fit failure: {0}")]
    Fit(String),

    #[error("solver failure at grid point ({x}, {y}): {source}")]
    GridPoint {
        x: f64,
        y: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("every grid point failed; first failure: {0}")]
    AllPointsFailed(Box<Error>),
}

pub type Result<T> = std::result::Result<T, Error>;
