use thiserror::Error;

use crate::graph::Vertex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing coordinates for vertex {0}")]
    MissingCoordinates(Vertex),

    #[error("graph is empty")]
    EmptyGraph,

    #[error("order is not a permutation: {0}")]
    NotAPermutation(String),

    #[error("vertex {vertex} out of range (graph has {num_vertices} vertices)")]
    VertexOutOfRange { vertex: u64, num_vertices: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("target set is empty")]
    EmptyTargets,

    #[error("k must be at least 1")]
    InvalidK,

    #[error("total population is zero")]
    ZeroPopulation,

    #[error("the root node has no boundary")]
    RootBoundary,

    #[error("malformed binary file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
