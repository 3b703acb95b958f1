use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, IceError>;

#[derive(Debug, Error)]
pub enum IceError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),
    #[error("non-binary label: column `{column}` has {count} distinct values")]
    NonBinaryLabel { column: String, count: usize },
    #[error("ragged rows: line {line} has {found} fields, header has {expected}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("empty table")]
    EmptyTable,
    #[error("missing cell at line {line}, column `{column}`")]
    MissingCell { line: usize, column: String },
    #[error("column `{column}` declared numeric but `{value}` does not parse")]
    NotNumeric { column: String, value: String },
    #[error("no features remain after dropping nominal columns")]
    NoFeatures,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid dataset: {0}")]
    InvalidData(String),
    #[error("single-class input: {0}")]
    SingleClass(String),
    #[error("model format: {0}")]
    ModelFormat(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl IceError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IceError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the input data rather than the program.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, IceError::Invariant(_) | IceError::InvalidParameter(_))
    }
}
