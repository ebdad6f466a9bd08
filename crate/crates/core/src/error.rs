use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("transfer function is singular at s = {re} + {im}j (sI - A not invertible)")]
    SingularAtS { re: f64, im: f64 },

    #[error("edge weight must be strictly positive, got {weight} on edge {from} -> {to}")]
    NonPositiveWeight { from: usize, to: usize, weight: f64 },

    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),

    #[error("vertex {vertex} out of range for a graph with {count} vertices")]
    VertexOutOfRange { vertex: usize, count: usize },

    #[error("vertex set does not separate the source: {0}")]
    NotSeparating(String),

    #[error("graph has {count} vertices, exceeds enumeration cap {cap}")]
    TooLarge { count: usize, cap: usize },

    #[error("vertex {target} is not reachable from {source_vertex}")]
    Unreachable { source_vertex: usize, target: usize },

    #[error("vertex {0} has no incoming edges")]
    NoIncomingEdges(usize),

    #[error("local loop at vertex {0} is not Hurwitz")]
    UnstableLoop(usize),

    #[error("state matrix is not Hurwitz")]
    NotHurwitz,

    #[error("subsystem is not SISO (m = {0})")]
    NotSiso(usize),

    #[error("subsystem does not match the planar template")]
    NotPlanarTemplate,

    #[error("induced subgraph on the region is not strongly connected")]
    NotStronglyConnected,

    #[error("dt = {dt} exceeds accuracy limit {limit}")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("identity does not apply at the source vertex {0}")]
    SourceVertex(usize),

    #[error("network models require a strictly proper subsystem (D = 0)")]
    Feedthrough,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
