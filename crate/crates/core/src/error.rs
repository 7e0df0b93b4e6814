use thiserror::Error;

/// Error type shared across the workspace.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad arguments, mismatched shapes, out-of-range settings.
    #[error("configuration error: {0}")]
    Config(String),

    /// A correlation was requested on a constant (zero-variance) input.
    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    /// Non-finite values during optimisation.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A feature combination that the dataset definition excludes.
    #[error("excluded combination: {0}")]
    ExcludedCombination(String),

    /// A stimulus whose activation row is constant, which correlation distance cannot handle.
    #[error("constant activation row for stimulus {stimulus}")]
    ConstantRow { stimulus: String },

    /// Linear CKA with an all-zero centred matrix.
    #[error("undefined CKA: {0}")]
    UndefinedCka(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
