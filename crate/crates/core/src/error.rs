use std::path::PathBuf;

/// Errors raised across the harmonization toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("decode error at {field}: {message}")]
    Decode { field: String, message: String },

    #[error("rect {rect} out of bounds for {width}x{height} image")]
    Bounds { rect: String, width: usize, height: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cube parse error on line {line}: {message}")]
    CubeParse { line: usize, message: String },

    #[error("generation error: {0}")]
    Generation(String),

    #[error("non-finite value in {tensor}")]
    Numeric { tensor: String },

    #[error("color map fit failed: {0}")]
    Fit(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn decode(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Decode {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Decode { .. }
                | Error::Bounds { .. }
                | Error::DimensionMismatch(_)
                | Error::InvalidArgument(_)
                | Error::CubeParse { .. }
                | Error::Config(_)
                | Error::Checkpoint(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
