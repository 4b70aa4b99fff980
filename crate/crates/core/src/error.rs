use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spectral data: {0}")]
    InvalidSpectral(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("map is not block-triangular: component {component} depends on block {block}")]
    NotTriangular { component: usize, block: usize },

    #[error("matrix is not orthogonal (defect {0:.3e})")]
    NotOrthogonal(f64),

    #[error("invalid expression: {0}")]
    InvalidExpr(String),

    #[error("missing certificate: {0}")]
    MissingCertificate(String),

    #[error("not in uniform subgroup: residual {residual:.3e}")]
    NotInUniformSubgroup { residual: f64 },

    #[error("element is not in kernel K_{level}: block {block} is nonzero")]
    NotInKernel { level: usize, block: usize },

    #[error("infinite index suspected: {0}")]
    InfiniteIndexSuspected(String),

    #[error("no convergence after {iters} iterations (residual {residual:.3e})")]
    NoConvergence { iters: usize, residual: f64 },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
