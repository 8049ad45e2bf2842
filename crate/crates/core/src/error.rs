use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("column `{column}` missing from schema")]
    ColumnNotInSchema { column: String },

    #[error("column `{column}` declared in schema but absent from input")]
    SchemaColumnMissing { column: String },

    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),

    #[error("row {row}: cannot parse `{value}` in column `{column}`")]
    BadCell { column: String, row: usize, value: String },

    #[error("row {row}: non-binary value {value} in column `{column}`")]
    NonBinary { column: String, row: usize, value: f64 },

    #[error("row {row}: exposure column `{column}` is missing; the exposure must be fully observed")]
    ExposureMissing { column: String, row: usize },

    #[error("row {row}: categorical value {value} in `{column}` outside 1..={levels}")]
    CategoricalOutOfRange { column: String, row: usize, value: f64, levels: u32 },

    #[error("row {row}: post-exposure `{column}` observed for non-tester (exposure = 0)")]
    PostExposureForNonTester { column: String, row: usize },

    #[error("dataset must have exactly one {role} column, found {count}")]
    RoleCardinality { role: &'static str, count: usize },

    #[error("column length mismatch: `{column}` has {len} values, expected {expected}")]
    LengthMismatch { column: String, len: usize, expected: usize },

    #[error("column `{column}` has no observed values; cannot initialize imputation")]
    NoObservedValues { column: String },

    #[error("too few complete rows to fit `{response}`: have {rows}, need at least {needed}")]
    TooFewRows { response: String, rows: usize, needed: usize },

    #[error("model for `{response}` failed: {reason}")]
    FitFailed { response: String, reason: String },

    #[error("response `{response}` appears among its own predictors")]
    ResponseIsPredictor { response: String },

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("cutpoints must be strictly increasing")]
    BadCutpoints,

    #[error("marginal odds ratio undefined at boundary (p0 = {p0}, p1 = {p1}) and sample size unavailable for continuity correction")]
    MorBoundary { p0: f64, p1: f64 },

    #[error("marginal odds ratio requires positive inputs, got {0}")]
    NonPositiveMor(f64),

    #[error("pooling needs at least 2 imputations, got {0}")]
    TooFewImputations(usize),

    #[error("pooling input lengths differ: {estimates} estimates vs {variances} variances")]
    PoolLengthMismatch { estimates: usize, variances: usize },

    #[error("membership subgroup `{cell}` is empty (counts: 00={c00}, 01={c01}, 10={c10}, 11={c11})")]
    EmptyMembershipCell { cell: &'static str, c00: u64, c01: u64, c10: u64, c11: u64 },

    #[error("{count} fitted propensities outside ({lo}, {hi}); first offending rows: {rows:?}")]
    PropensityOutOfRange { count: usize, lo: f64, hi: f64, rows: Vec<usize> },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
