//! Error type shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while parsing, clustering or evaluating.
#[derive(Debug, Error)]
pub enum Error {
    /// A KEEL header is unusable (no `@data` line, no attributes, ...).
    #[error("malformed header: {0}")]
    MalformedHeader(String),

    /// A data row has the wrong number of fields. Lines are 1-based.
    #[error("line {line}: expected {expected} fields, found {found}")]
    ArityMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },

    /// A feature field failed to parse as a finite number. Lines are 1-based.
    #[error("line {line}: feature value {token:?} is not a finite number")]
    NonNumericFeature { line: usize, token: String },

    /// The requested label column does not exist in the CSV header.
    #[error("label column {0:?} not found in header")]
    UnknownLabelColumn(String),

    /// A feature matrix contains a NaN or infinite entry.
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    /// An operation that needs data received none.
    #[error("input contains no rows")]
    EmptyInput,

    /// Two matrices (or a matrix and a model) disagree on dimensionality.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    /// Rows and labels (or predictions and truth) have different lengths.
    #[error("length mismatch: {left} rows vs {right} labels")]
    LengthMismatch { left: usize, right: usize },

    /// The requested class label does not occur in the dataset.
    #[error("label {0:?} does not occur in the dataset")]
    UnknownLabel(String),

    /// The zero-shot protocol needs exactly two classes.
    #[error("expected exactly 2 classes, found {found}")]
    NotBinary { found: usize },

    /// More clusters were requested than there are points to fill them.
    #[error("k = {k} exceeds the number of points ({n})")]
    KTooLarge { k: usize, n: usize },

    /// A cluster ended up with no members where that is not allowed.
    #[error("cluster {cluster} has no members")]
    EmptyCluster { cluster: usize },

    /// The test set has no rows of the train class, so recall_train is undefined.
    #[error("no train-class rows in the test set; recall_train is undefined")]
    NoTrainClassSamples,

    /// The test set has no rows of the target class, so recall_target is undefined.
    #[error("no target-class rows in the test set; recall_target is undefined")]
    NoTargetClassSamples,

    /// Intersection search over an empty sweep curve.
    #[error("sweep curve is empty")]
    EmptyCurve,

    /// A synthetic-data spec string or parameter set is invalid.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// An algorithm configuration value is out of range.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A persisted model file has the wrong format or version.
    #[error("bad model file: {0}")]
    ModelFormat(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable short name for one-line diagnostics (CLI output, logs).
    pub fn name(&self) -> &'static str {
        match self {
            Error::MalformedHeader(_) => "MalformedHeader",
            Error::ArityMismatch { .. } => "ArityMismatch",
            Error::NonNumericFeature { .. } => "NonNumericFeature",
            Error::UnknownLabelColumn(_) => "UnknownLabelColumn",
            Error::NonFinite { .. } => "NonFinite",
            Error::EmptyInput => "EmptyInput",
            Error::DimMismatch { .. } => "DimMismatch",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::UnknownLabel(_) => "UnknownLabel",
            Error::NotBinary { .. } => "NotBinary",
            Error::KTooLarge { .. } => "KTooLarge",
            Error::EmptyCluster { .. } => "EmptyCluster",
            Error::NoTrainClassSamples => "NoTrainClassSamples",
            Error::NoTargetClassSamples => "NoTargetClassSamples",
            Error::EmptyCurve => "EmptyCurve",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::ModelFormat(_) => "ModelFormat",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
