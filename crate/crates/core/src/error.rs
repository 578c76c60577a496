use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate geometry: kept region does not intersect the box with positive area")]
    DegenerateGeometry,

    #[error("mesh topology error: {0}")]
    Topology(String),

    #[error("stabilized cells {first} and {second} share face {face}")]
    AdjacentSmallCells { first: usize, second: usize, face: usize },

    #[error("stabilized cell {cell} has {count} inflow faces, exactly one is required")]
    InflowFaceCount { cell: usize, count: usize },

    #[error("stabilized cell {cell}: inflow face {face} lies on the physical boundary")]
    InflowOnBoundary { cell: usize, face: usize },

    #[error("stabilized cell {cell}: faces {first} and {second} are both boundary faces")]
    BoundaryPair { cell: usize, first: usize, second: usize },

    #[error("unsupported operation: {0}")]
    Unsupported(&'static str),

    #[error("unknown cell id {0}")]
    UnknownCell(usize),

    #[error("face {0} is not a boundary face")]
    NotBoundary(usize),

    #[error("mass matrix of cell {cell} is not numerically positive definite")]
    SingularMass { cell: usize },

    #[error("shape mismatch: {0}")]
    Mismatch(String),

    #[error("time integration failed at step {step}: non-finite state")]
    IntegrationFailure { step: usize },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
