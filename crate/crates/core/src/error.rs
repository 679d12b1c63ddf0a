use thiserror::Error;

/// Errors raised by the library.
///
/// The variants line up with the CLI exit codes: validation (2),
/// resolution (3) and not-evaluable (4); everything else is a plain failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("resolution too coarse: {message}")]
    Resolution {
        message: String,
        /// Spacing (or Whitney level side) that would satisfy the request, when known.
        suggested_spacing: Option<f64>,
    },

    #[error("not evaluable: {0}")]
    NotEvaluable(String),

    #[error("empty cube family: {0}")]
    EmptyFamily(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("endpoints lie in different grid components: {0}")]
    DifferentComponents(String),

    #[error("malformed grid file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn resolution(message: impl Into<String>, suggested_spacing: Option<f64>) -> Self {
        Error::Resolution {
            message: message.into(),
            suggested_spacing,
        }
    }

    /// Short machine-readable tag, used for the JSON error document of the CLI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation { .. } => "validation",
            Error::Resolution { .. } => "resolution",
            Error::NotEvaluable(_) => "not-evaluable",
            Error::EmptyFamily(_) => "empty-family",
            Error::Quadrature(_) => "quadrature",
            Error::DifferentComponents(_) => "different-components",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
