use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IrfError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}: file has no data rows")]
    EmptyFile(PathBuf),
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("line {line}, column {column:?}: {value:?} is not a number")]
    NonNumericCell {
        line: usize,
        column: String,
        value: String,
    },
    #[error("line {line}: classification label {value} is not 0 or 1")]
    InvalidLabel { line: usize, value: f64 },
    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("malformed model file: {0}")]
    MalformedModel(String),
    #[error("unsupported model version {found} (this build reads version {expected})")]
    VersionMismatch { found: u64, expected: u64 },
    #[error("data has {got} of the model's {expected} feature columns")]
    FeatureMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Core(#[from] irf_core::Error),
}

pub type Result<T> = std::result::Result<T, IrfError>;

impl IrfError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IrfError::Io {
            path: path.into(),
            source,
        }
    }
}
