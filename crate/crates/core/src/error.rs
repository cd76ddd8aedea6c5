use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema parse error: {0}")]
    SchemaParse(String),

    #[error("duplicate attribute name `{0}`")]
    DuplicateAttribute(String),

    #[error("duplicate instance id `{0}`")]
    DuplicateInstance(String),

    #[error("row {row}: missing instance id")]
    MissingId { row: usize },

    #[error("row {row}: column `{column}` is not declared in the schema")]
    UnknownColumn { row: usize, column: String },

    #[error("instance `{instance}`, attribute `{attribute}`: value does not match declared kind {expected}")]
    KindMismatch {
        instance: String,
        attribute: String,
        expected: String,
    },

    #[error("records: {0}")]
    Csv(#[from] csv::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("value {value} is outside the normalized domain [0, 1]")]
    NotNormalized { value: f64 },

    #[error("category `{token}` of attribute `{attribute}` is not in the frequency index")]
    StaleIndex { attribute: String, token: String },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("unknown instance `{0}`")]
    UnknownInstance(String),

    #[error("a label needs two distinct instances, got `{0}` twice")]
    SelfPair(String),

    #[error("similarity score {0} is outside [0, 1]")]
    ScoreOutOfRange(f64),

    #[error("label log line {line}: {detail}")]
    MalformedLog { line: usize, detail: String },

    #[error("model states cover different attribute sets")]
    AttributeSetMismatch,

    #[error("precondition failed: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
