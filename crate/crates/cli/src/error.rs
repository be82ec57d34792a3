use covkit::model_file::ModelFileError;
use covkit::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const GENERIC: i32 = 1;
    pub const PARSE: i32 = 2;
    pub const STABILITY: i32 = 3;
    pub const FEEDTHROUGH: i32 = 4;
    pub const CONSISTENCY: i32 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] ModelFileError),
    #[error(transparent)]
    Numeric(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

fn numeric_code(e: &Error) -> i32 {
    match e {
        Error::Unstable { .. } | Error::Unsolvable { .. } => exit::STABILITY,
        Error::Feedthrough { .. } => exit::FEEDTHROUGH,
        Error::Inconsistent(_) | Error::SingularFrequency { .. } => exit::CONSISTENCY,
        Error::InvalidInput(_) | Error::Shape(_) | Error::NonFinite(_) | Error::IllPosed { .. } => {
            exit::PARSE
        }
        Error::NumericRange(_) | Error::Singular(_) | Error::Convergence(_) => exit::GENERIC,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Model(ModelFileError::Io { .. }) => exit::GENERIC,
            Self::Model(ModelFileError::Model { source, .. }) => match numeric_code(source) {
                exit::GENERIC => exit::GENERIC,
                _ => exit::PARSE,
            },
            Self::Model(_) => exit::PARSE,
            Self::Numeric(e) => numeric_code(e),
            Self::Usage(_) => exit::PARSE,
            Self::Io { .. } | Self::Csv(_) => exit::GENERIC,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
