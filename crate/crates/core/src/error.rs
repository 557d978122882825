use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("derivative order {order} exceeds the maximum {max}")]
    OrderTooHigh { order: u32, max: u32 },

    #[error("parameter out of domain: {0}")]
    Domain(String),

    /// The non-degeneracy floor ⟨x⟩^m|u| ≥ floor was violated.
    #[error("degenerate field: min <x>^m|u| = {min_weighted} is below the floor {floor}")]
    Degenerate { min_weighted: f64, floor: f64 },

    #[error("inconsistent data: {0}")]
    InconsistentData(String),

    #[error("incompatible trajectories: {0}")]
    IncompatibleTrajectories(String),

    #[error("under-resolved field: top-mode mass fraction {fraction:.3e} exceeds {limit:.1e}")]
    Resolution { fraction: f64, limit: f64 },

    #[error("boundary diagnostic failed: {0}")]
    Boundary(String),

    #[error("solution blew up at t = {time}: norm {norm:.3e} exceeds {limit:.3e}")]
    BlowUp { time: f64, norm: f64, limit: f64 },

    #[error("config error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Numerical failures (degeneracy, blow-up, under-resolution) as opposed
    /// to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Degenerate { .. } | Error::BlowUp { .. } | Error::Resolution { .. } | Error::Boundary(_)
        )
    }
}
