//! Fit/transform/inverse preprocessing for mixed tabular data.
//!
//! A [`FittedPipeline`] is built from a dataset and a list of
//! [`ColumnSchema`]s. Fitting counts label frequencies per categorical column
//! (masking categories rarer than `min_frequency` behind a catch-all label),
//! assigns indices in first-occurrence order, and builds one monotone
//! quantile-to-normal map per output dimension. Transforming emits one row per
//! input row: numeric values pass through the quantile map directly; each
//! categorical value is encoded under its column's scheme and every bit `b`
//! contributes `ln(max(b, clamp_floor))` — 0 for a set bit, `ln(1e-30)` for a
//! clear one — before its own quantile map. The whole transform is invertible
//! back to labels and (within interpolation accuracy) to numeric values.
//!
//! Everything is deterministic: fitting the same data twice yields
//! byte-identical serialized pipelines, and transforms are pure per-row.

mod fitted;
mod matrix;
mod quantile;
mod schema;
mod survey;
mod table;

pub use fitted::{FitOptions, FittedPipeline, InverseResult, LayoutEntry, SentinelCounts};
pub use matrix::{Matrix, MATRIX_MAGIC, MATRIX_VERSION};
pub use quantile::QuantileMap;
pub use schema::{ColumnKind, ColumnSchema, SchemaFile};
pub use survey::{
    cardinality_survey, coverage_ratio, ColumnCardinality, ColumnCoverage, CoverageReport,
    SurveyReport,
};
pub use table::DataTable;

use thiserror::Error;

/// Catch-all label for categories masked by the minimum-frequency rule.
pub const MASKED_LABEL: &str = "__masked__";
/// Label emitted by inversion when a binary pattern decodes out of index.
pub const OUT_OF_INDEX_LABEL: &str = "__out_of_index__";
/// Label emitted by inversion when a one-hot pattern has no unique set bit.
pub const MALFORMED_LABEL: &str = "__malformed__";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("schema names column {0:?} which is not in the dataset header")]
    UnknownColumn(String),
    #[error("column {0:?} appears more than once in the schema")]
    DuplicateSchemaColumn(String),
    #[error("min_frequency {value} for column {column:?} is outside [0, 1)")]
    InvalidMinFrequency { column: String, value: f64 },
    #[error("numerical column {0:?} has no non-missing values")]
    AllMissing(String),
    #[error("cannot parse {value:?} in numerical column {column:?}")]
    InvalidNumber { column: String, value: String },
    #[error("label {label:?} in column {column:?} was not seen during fitting and the column has no masked category")]
    UnknownLabel { column: String, label: String },
    #[error("column {column:?} uses the reserved label {label:?} while masking is active")]
    ReservedLabel { column: String, label: String },
    #[error("matrix has {actual} columns but the pipeline produces {expected}")]
    WidthMismatch { expected: usize, actual: usize },
    #[error("row has {actual} fields but the header has {expected}")]
    RaggedRow { expected: usize, actual: usize },
    #[error("unsupported pipeline format version {0}")]
    UnsupportedVersion(u32),
    #[error("invalid pipeline document: {0}")]
    InvalidDocument(String),
    #[error("invalid matrix file: {0}")]
    InvalidMatrix(String),
    #[error(transparent)]
    Encoding(#[from] crate::encoding::EncodingError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
