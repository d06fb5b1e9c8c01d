use serde_json::json;
use transprod::Error;

/// An input or environment failure; exit code 1.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(code: &'static str, message: impl Into<String>) -> CliError {
        CliError { code, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> CliError {
        CliError::new("usage", message)
    }

    pub fn io(message: impl Into<String>) -> CliError {
        CliError::new("io", message)
    }

    pub fn json(e: serde_json::Error) -> CliError {
        CliError::new("json", e.to_string())
    }

    pub fn csv(e: csv::Error) -> CliError {
        CliError::new("csv", e.to_string())
    }

    /// One JSON object per line on standard error.
    pub fn to_line(&self) -> String {
        json!({"error": self.code, "message": self.message}).to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        let code = match &e {
            Error::KindMismatch(..) => "kind-mismatch",
            Error::Singular { .. } => "singular",
            Error::OutOfDomain(_) => "out-of-domain",
            Error::NonFinite => "non-finite",
            Error::InvalidSet(_) => "invalid-set",
            Error::NotLimit => "not-limit",
            Error::NoSuccessor => "no-successor",
            Error::OutOfInterval { .. } => "out-of-interval",
            Error::Precision => "precision",
            Error::LimitMismatch(_) => "limit-mismatch",
            Error::NotInvertibleJump => "not-invertible-jump",
            Error::NotIdempotent(_) => "not-idempotent",
            Error::NotProjection(_) => "not-projection",
            Error::PrimitiveMismatch { .. } => "primitive-mismatch",
            Error::OffSurface(_) => "off-surface",
            Error::UnknownCatalog(_) => "unknown-catalog",
            Error::InvalidInput(_) => "invalid-input",
        };
        CliError::new(code, e.to_string())
    }
}
