use thiserror::Error;

/// Errors raised anywhere in the analytics pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// Malformed input that cannot be attributed to a single rejectable row.
    #[error("line {line}: {reason}")]
    Parse { line: u64, reason: String },

    #[error("duplicate observation for bank {bank_id} at {period}")]
    DuplicateKey { bank_id: String, period: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("design matrix is rank deficient; collinear columns: {}", .columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("perfect or quasi-perfect separation detected after {iterations} iterations")]
    Separation { iterations: usize },

    #[error("degenerate response: {0}")]
    Degenerate(String),

    #[error("logit did not converge after {iterations} iterations (max |score| = {max_score:e})")]
    NonConvergence {
        iterations: usize,
        max_score: f64,
        coefficients: Vec<f64>,
    },

    #[error("{0}")]
    Undefined(String),
}

pub type Result<T> = std::result::Result<T, Error>;
