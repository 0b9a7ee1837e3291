use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected:?}, got {got:?}")]
    Shape {
        context: &'static str,
        expected: Vec<usize>,
        got: Vec<usize>,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite function value at coordinate {coordinate}")]
    NonFinite { coordinate: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("series too short: need at least {required} steps, got {got}")]
    InsufficientLength { required: usize, got: usize },

    #[error("{which} split is empty")]
    EmptySplit { which: &'static str },

    #[error("no active {view} groups; advance the pace before sampling")]
    EmptyInclusion { view: &'static str },

    #[error("horizon {horizon} outside 1..={t_out}")]
    Horizon { horizon: usize, t_out: usize },

    #[error("every target was excluded by the MAPE zero guard")]
    AllTargetsGuarded,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn shape(context: &'static str, expected: &[usize], got: &[usize]) -> Self {
        Error::Shape {
            context,
            expected: expected.to_vec(),
            got: got.to_vec(),
        }
    }
}
