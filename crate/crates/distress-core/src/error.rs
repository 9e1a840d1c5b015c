use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped by where the failure belongs in a batch run:
/// configuration problems, bad input data, and numerical failures. The CLI
/// maps these onto distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// Manifest or configuration is invalid (bad keys, bad values, missing
    /// sections).
    #[error("manifest: {0}")]
    Manifest(String),

    /// Input data violates a contract (missing file, duplicate keys, bad
    /// labels, schema mismatch).
    #[error("data: {0}")]
    Data(String),

    /// A numerical procedure failed (non-convergence, divergence, degenerate
    /// inputs).
    #[error("numeric: {0}")]
    Numeric(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Data(format!("csv: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
