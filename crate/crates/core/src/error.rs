use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid under-resolved: spacing {spacing} exceeds {limit} (sigma/4)")]
    UnderResolved { spacing: f64, limit: f64 },

    #[error("grid extent {extent} is below the minimum {minimum} (5*sigma + k_c)")]
    ExtentTooSmall { extent: f64, minimum: f64 },

    #[error("amplitudes live on different grids or representations")]
    GridMismatch,

    #[error("expected a {expected} representation amplitude")]
    WrongRepresentation { expected: &'static str },

    #[error("degenerate state: {0}")]
    Degenerate(String),

    #[error("amplitude is not normalized (grid norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("amplitude contains non-finite entries")]
    NonFinite,

    #[error("vacuum amplitude: no photon has been scattered at t = 0")]
    Vacuum,

    #[error("undefined: {0}")]
    Undefined(&'static str),

    #[error("no fringe detected")]
    NoFringe,

    #[error("invalid downsample factor {factor} for {n_points} points")]
    InvalidDownsample { factor: usize, n_points: usize },

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("sample at t = {t} failed: {source}")]
    TraceSample {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("sweep row sigma = {sigma}, delta = {delta} failed: {source}")]
    SweepRow {
        sigma: f64,
        delta: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("format: {0}")]
    Format(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for problems with the user's inputs rather than with the numerics.
    pub fn is_config(&self) -> bool {
        match self {
            Error::InvalidParameter { .. }
            | Error::UnderResolved { .. }
            | Error::ExtentTooSmall { .. }
            | Error::InvalidDownsample { .. }
            | Error::Config(_)
            | Error::Format(_)
            | Error::Io(_) => true,
            Error::TraceSample { source, .. } | Error::SweepRow { source, .. } => {
                source.is_config()
            }
            _ => false,
        }
    }

    /// Short machine-readable kind, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::UnderResolved { .. } => "under_resolved",
            Error::ExtentTooSmall { .. } => "extent_too_small",
            Error::GridMismatch => "grid_mismatch",
            Error::WrongRepresentation { .. } => "wrong_representation",
            Error::Degenerate(_) => "degenerate",
            Error::NotNormalized { .. } => "not_normalized",
            Error::NonFinite => "non_finite",
            Error::Vacuum => "vacuum",
            Error::Undefined(_) => "undefined",
            Error::NoFringe => "no_fringe",
            Error::InvalidDownsample { .. } => "invalid_downsample",
            Error::Decomposition(_) => "decomposition",
            Error::TraceSample { .. } => "trace_sample",
            Error::SweepRow { .. } => "sweep_row",
            Error::Config(_) => "config",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }
}
