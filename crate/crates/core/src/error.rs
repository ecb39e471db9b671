use alloc::string::String;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("tensor shape {shape:?} does not match {len} data values")]
    ShapeData { shape: alloc::vec::Vec<usize>, len: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("shape mismatch at node `{node}`: {detail}")]
    Shape { node: String, detail: String },

    #[error("overflow at node `{node}`: non-finite intermediate")]
    Overflow { node: String },

    #[error("missing binding for leaf `{0}`")]
    MissingBinding(String),

    #[error("duplicate parameter `{0}`")]
    DuplicateParam(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("empty point cloud")]
    EmptyCloud,

    #[error("empty set: {0}")]
    EmptySet(&'static str),

    #[error("matrix is not symmetric (|a_ij - a_ji| = {0:e})")]
    NotSymmetric(f64),

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("non-finite loss during training step (cloud `{cloud}`)")]
    NonFiniteLoss { cloud: String },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}

pub type Result<T> = core::result::Result<T, Error>;
