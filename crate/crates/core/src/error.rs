use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("field support: {0}")]
    Support(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("inadmissible exponent pair (p={p}, gamma={gamma}): {reason}")]
    Inadmissible { p: f64, gamma: f64, reason: String },
    #[error("Neumann series diverged at tau={tau} (ratios >= 1 from j={j}); raise tau above ~{hint:.3}")]
    NonConvergence { tau: f64, j: usize, hint: f64 },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("format: {0}")]
    Format(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable upper-case code printed by the command line front end.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "INVALID_GRID",
            Error::GridMismatch(_) => "GRID_MISMATCH",
            Error::Support(_) => "SUPPORT",
            Error::InvalidParameter(_) => "INVALID_PARAMETER",
            Error::Inadmissible { .. } => "INADMISSIBLE_EXPONENTS",
            Error::NonConvergence { .. } => "NON_CONVERGENCE",
            Error::Singular(_) => "SINGULAR_SYSTEM",
            Error::Format(_) => "BAD_FORMAT",
            Error::Config(_) => "BAD_CONFIG",
            Error::Io(_) => "IO",
            Error::Json(_) => "JSON",
            Error::Csv(_) => "CSV",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
