use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("interface crosses the boundary of element {element} more than twice; refine the mesh")]
    MultiIntersection { element: usize },

    #[error("could not bracket an intersection of the interface with grid line {line} near parameter {xi}")]
    TangencyUnresolved { line: String, xi: f64 },

    #[error("unresolved interface topology: {0}")]
    UnresolvedTopology(String),

    #[error("point ({x}, {y}) lies on the interface")]
    OnInterface { x: f64, y: f64 },

    #[error("cut of element {element} on side {side} is a degenerate sliver (fraction {fraction:e})")]
    DegenerateSliver { element: usize, side: u8, fraction: f64 },

    #[error("side {side} is inactive at ({x}, {y})")]
    InactiveEvaluation { side: u8, x: f64, y: f64 },

    #[error("exact solution required but the problem has none")]
    MissingExact,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("iterative solver did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("matrix is singular or numerically singular: {0}")]
    SingularMatrix(String),

    #[error("zero diagonal entry in row {row}")]
    ZeroDiagonal { row: usize },

    #[error("eigenvalue iteration failed: {0}")]
    EigenStagnation(String),

    #[error("unknown case `{0}`")]
    UnknownCase(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}
