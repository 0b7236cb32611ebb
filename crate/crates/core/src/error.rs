use thiserror::Error;

use crate::lagrangian::expr::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported seminorm order {order} (family max order is {max})")]
    UnsupportedOrder { order: usize, max: usize },

    #[error("quadrature configuration: {0}")]
    Quadrature(String),

    #[error("variation support violates the {margin}-step endpoint margin: {detail}")]
    SupportViolation { margin: usize, detail: String },

    #[error("non-finite Lagrangian value {value} at {context}")]
    NonFiniteEvaluation {
        value: f64,
        context: String,
        /// The (u, e) pair that produced the value, as nodal arrays.
        point: Box<(Vec<f64>, Vec<f64>)>,
    },

    #[error("unsupported Lagrangian form: {0}")]
    UnsupportedForm(String),

    #[error("integration diverged at step {step}: {detail}")]
    Divergence { step: usize, detail: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("format error at line {line}: {detail}")]
    Format { line: usize, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
