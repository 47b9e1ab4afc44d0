use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("{module} failed at λ = {lambda}, δ = {delta}: {source}")]
    Cell {
        module: String,
        lambda: f64,
        delta: f64,
        #[source]
        source: shellcap_core::Error,
    },
    #[error(transparent)]
    Core(#[from] shellcap_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    fn core(&self) -> Option<&shellcap_core::Error> {
        match self {
            CliError::Cell { source, .. } | CliError::Core(source) => Some(source),
            _ => None,
        }
    }

    /// 2 for configuration errors, 3 for guard violations, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            _ if matches!(self.core(), Some(shellcap_core::Error::GuardExceeded { .. })) => 3,
            _ if matches!(
                self.core(),
                Some(shellcap_core::Error::InvalidArgument(_) | shellcap_core::Error::InvalidExponent(_))
            ) =>
            {
                2
            }
            _ => 1,
        }
    }
}
