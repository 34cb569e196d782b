use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("rate undefined: previous distance to target is zero")]
    UndefinedRate,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("Pólya-Gamma sampler exceeded {0} proposals")]
    PgOverflow(usize),

    #[error("non-finite log-likelihood after {block} update at iteration {iteration}")]
    NonFinite { block: &'static str, iteration: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("schema: {0}")]
    Schema(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
