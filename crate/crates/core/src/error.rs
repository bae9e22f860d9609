use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("accuracy error: {what} (achieved {achieved:.3e}, required {required:.3e})")]
    Accuracy { what: String, achieved: f64, required: f64 },

    #[error("admissibility error: {constant} diverges ({detail})")]
    Admissibility { constant: &'static str, detail: String },

    #[error("divergence: {0}")]
    Divergence(String),

    #[error("resolution error: {detail} (p_max = {limit})")]
    Resolution { limit: f64, detail: String },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("degenerate parametrization `{name}`: {detail}")]
    DegenerateParametrization { name: String, detail: String },

    #[error("basis mismatch: expected size {expected}, found {found}")]
    BasisMismatch { expected: usize, found: usize },

    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
