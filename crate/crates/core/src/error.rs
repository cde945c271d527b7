use alloc::string::String;
use core::fmt;

/// Errors raised by the tree engine.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An impurity or mean was requested over no labels.
    EmptySet,
    /// A split leaves one pooled side empty.
    DegenerateSplit,
    /// A raw changing rate has a zero denominator.
    UndefinedRate,
    /// The environment has no rows on the left side of the split.
    EmptyLeft,
    /// A feature vector or matrix has the wrong number of columns.
    DimensionMismatch { expected: usize, got: usize },
    /// Two vectors that must be paired have different lengths.
    LengthMismatch { left: usize, right: usize },
    /// The dataset has no feature columns.
    EmptyFeatureSet,
    /// The dataset has no rows.
    EmptyDataset,
    /// A classification label other than 0 or 1.
    InvalidLabel { row: usize, value: f64 },
    /// A NaN or infinite value; `col` is `None` for the label column.
    NonFinite { row: usize, col: Option<usize> },
    /// Environment ids are not dense: `missing` in `[0, E)` never occurs.
    MissingEnvironment { missing: usize },
    /// A hyperparameter search was given no validation rows.
    EmptyValidation,
    /// A configuration value is out of range.
    InvalidConfig(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptySet => f.write_str("empty label set"),
            Error::DegenerateSplit => f.write_str("split leaves one side empty"),
            Error::UndefinedRate => f.write_str("changing rate has a zero denominator"),
            Error::EmptyLeft => f.write_str("environment has no rows left of the split"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "expected {expected} features, got {got}")
            }
            Error::LengthMismatch { left, right } => {
                write!(f, "length mismatch: {left} vs {right}")
            }
            Error::EmptyFeatureSet => f.write_str("dataset has no feature columns"),
            Error::EmptyDataset => f.write_str("dataset has no rows"),
            Error::InvalidLabel { row, value } => {
                write!(f, "row {row}: classification label {value} is not 0 or 1")
            }
            Error::NonFinite { row, col: Some(col) } => {
                write!(f, "row {row}, column {col}: value is not finite")
            }
            Error::NonFinite { row, col: None } => write!(f, "row {row}: label is not finite"),
            Error::MissingEnvironment { missing } => {
                write!(f, "environment id {missing} has no rows")
            }
            Error::EmptyValidation => f.write_str("validation set is empty"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
