use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix {name} is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { name: String, deviation: f64 },

    #[error("vector is not normalized (norm {0})")]
    NotNormalized(f64),

    /// A numerical invariant drifted past its tolerance. This signals a bug
    /// or a pathological model, never a recoverable input condition.
    #[error("tolerance breach: {0}")]
    ToleranceBreach(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("model file error at {field}: {message}")]
    Model { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn model(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Model {
            field: field.into(),
            message: message.into(),
        }
    }
}
