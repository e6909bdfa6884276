use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite value at path {i}, observation {j}")]
    NonFinite { i: usize, j: usize },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("unsupported derivative order {order} (maximum {max})")]
    UnsupportedOrder { order: usize, max: usize },

    #[error("missing drift derivative of order {0}")]
    MissingDerivative(usize),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
