use std::path::PathBuf;

/// Errors raised by the discretization, factorization and solve pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error in {function}: argument {arg} is outside the supported range")]
    Domain { function: &'static str, arg: f64 },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("coincident nodes {a} and {b} in stencil centered at node {center}")]
    CoincidentNodes { center: usize, a: usize, b: usize },

    #[error("matrix is not symmetric: entry ({row}, {col}) differs from its transpose")]
    NotSymmetric { row: usize, col: usize },

    #[error("{method} factorization broke down at pivot {pivot}")]
    Factorization { method: &'static str, pivot: usize },

    #[error("degenerate interior row at node {node}: regularization parameter is zero")]
    DegenerateInteriorRow { node: usize },

    #[error("node {node} is not a boundary node")]
    NotBoundary { node: usize },

    #[error("operator {0} needs a normal/tangent pair")]
    MissingDirection(&'static str),

    #[error("weight row for stencil {stencil} failed: {source}")]
    Row {
        stencil: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("sparse solve failed at row {row}: {reason}")]
    SparseSolve { row: usize, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} line {line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("report serialization failed: {0}")]
    Report(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
