use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("point ({x1}, {x2}) lies on the boundary")]
    OnBoundary { x1: f64, x2: f64 },

    #[error("quadrature budget exceeded in {context}")]
    QuadratureBudget { context: String },

    #[error("panel pair ({i}, {j}): {source}")]
    PanelPair {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
