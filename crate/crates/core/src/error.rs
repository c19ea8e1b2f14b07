use thiserror::Error;

/// Errors produced by mesh construction, bundle setup, and the solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("non-manifold edge ({0}, {1}) is shared by {2} faces")]
    NonManifoldEdge(usize, usize, usize),

    #[error("inconsistent face orientation across edge ({0}, {1})")]
    InconsistentOrientation(usize, usize),

    #[error("edge ({0}, {1}) lies on a boundary but a closed surface is required")]
    Boundary(usize, usize),

    #[error("face {0} violates the strict triangle inequality")]
    DegenerateFace(usize),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Euler number {0} is odd; only bundles with even Euler number are supported")]
    OddEulerNumber(i64),

    #[error("inconsistent data: {0}")]
    Inconsistent(String),

    #[error("face {0} carries a nonzero index; its gradient is undefined")]
    SingularFace(usize),

    #[error("region error: {0}")]
    Region(String),
}

pub type Result<T> = std::result::Result<T, Error>;
