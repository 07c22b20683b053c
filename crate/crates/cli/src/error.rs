use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in {path}: {message}")]
    Config { path: String, message: String },
    #[error("invalid value for `{key}`: {message}")]
    Value { key: String, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Library(#[from] magnetic_hardy::Error),
}

impl CliError {
    pub fn value(key: &str, message: impl Into<String>) -> Self {
        Self::Value { key: key.to_string(), message: message.into() }
    }
}
