use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "acceleration factor {delta} is outside the {expected} regime \
         (regime boundary 1/(1+beta) = {boundary:.6})"
    )]
    WrongRegime {
        delta: f64,
        boundary: f64,
        expected: &'static str,
    },

    #[error("folded spectrum is near-singular (min/max = {ratio:.3e}); use the small-acceleration construction")]
    NearSingular { ratio: f64 },

    #[error("frame of {symbols} symbols has no interior after trimming {guard} guard periods per side")]
    FrameTooShort { symbols: usize, guard: usize },

    #[error("no interior samples to estimate a CCDF from")]
    EmptyInterior,

    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    /// Whether the error is a problem with the requested parameters rather
    /// than with the environment.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::WrongRegime { .. }
                | Error::NearSingular { .. }
                | Error::FrameTooShort { .. }
                | Error::Config { .. }
                | Error::Toml(_)
        )
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
