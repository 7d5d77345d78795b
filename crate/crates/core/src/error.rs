use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("exponent m = {m} outside the supported range ({lo}, {hi}) for d = {d}")]
    UnsupportedExponent { d: usize, m: f64, lo: f64, hi: f64 },

    #[error("second moment of the Barenblatt profile diverges: m = {m} <= {threshold}")]
    DivergentSecondMoment { m: f64, threshold: f64 },

    #[error("alpha = {alpha} outside the range covered for d = {d}")]
    UnsupportedAlpha { alpha: f64, d: usize },

    #[error("dimension must be >= 1")]
    InvalidDimension,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no discrete eigenvalue below the sector bottom {bottom} (computed {value})")]
    NoDiscreteEigenvalue { value: f64, bottom: f64 },

    #[error("initial datum has a non-finite moment")]
    NonFiniteMoment,

    #[error("negative density {value} in cell {cell}")]
    NegativeDensity { cell: usize, value: f64 },

    #[error("Newton iteration failed after {halvings} time-step halvings (dt = {dt})")]
    NewtonDivergence { dt: f64, halvings: u32 },

    #[error("positivity lost in cell {cell}")]
    PositivityLoss { cell: usize },

    #[error("entropy decayed by only {efolds:.3} e-folds in the fit window (need {required})")]
    InsufficientDecay { efolds: f64, required: f64 },

    #[error("scan range [{lo}, {hi}] does not bracket sigma* = {target}")]
    BracketMiss { lo: f64, hi: f64, target: f64 },

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
