use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    Dimension {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate batch: batch norm in train mode needs at least 2 rows, got {0}")]
    DegenerateBatch(usize),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("label error: {0}")]
    Label(String),

    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),

    #[error("cannot stratify: {0}")]
    Stratification(String),

    #[error("insufficient minority samples: need at least {required}, found {found}")]
    InsufficientMinority { required: usize, found: usize },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("value outside domain: {0}")]
    Domain(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
