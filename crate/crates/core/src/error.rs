use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("packets live on different grids or carriers")]
    GridMismatch,

    #[error("grid too narrow: {tail_mass:.3e} of the pulse mass falls outside the window")]
    GridTooNarrow { tail_mass: f64 },

    #[error("delay {delay} is not an integer multiple of dt = {dt}")]
    NonCommensurateDelay { delay: f64, dt: f64 },

    #[error("shift pushes {lost_mass:.3e} of the packet mass off the grid")]
    SupportOverflow { lost_mass: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("packet has zero norm")]
    ZeroNorm,

    #[error("branch {0} carries a polarization label this operation cannot act on")]
    PolarizationBasis(String),

    #[error("z-block input must be h-polarized in the waveguide port, found {0}")]
    NotHPolarized(String),

    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NonUnitary { deviation: f64 },

    #[error("time bins overlap: overlap {overlap:.3e} exceeds 1e-8")]
    BinsOverlap { overlap: f64 },

    #[error("attenuator amplitude |k| = {0} exceeds 1")]
    InvalidAttenuation(f64),

    #[error("protocol output is not linear in its input (residual {residual:.3e})")]
    Nonlinearity { residual: f64 },

    #[error("conditional map has zero mass")]
    ZeroMassMap,

    #[error("state is not normalized (norm {norm})")]
    Unnormalized { norm: f64 },

    #[error("measurement outcome leaves an uncorrectable state; pick a conjugate basis")]
    UncorrectableMeasurement,

    #[error("sweep has {points} points, above the cap of {cap}")]
    CapExceeded { points: usize, cap: usize },

    #[error("unknown metric `{0}`")]
    UnknownMetric(String),

    #[error("axis `{0}` has no values")]
    EmptyAxis(String),

    #[error("axis `{0}` appears more than once")]
    DuplicateAxis(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Errors that stem from the numerical set-up (grid, resolution, support)
    /// rather than from invalid user input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid(_)
                | Error::GridTooNarrow { .. }
                | Error::NonCommensurateDelay { .. }
                | Error::SupportOverflow { .. }
                | Error::BinsOverlap { .. }
                | Error::Nonlinearity { .. }
                | Error::ZeroMassMap
                | Error::ZeroNorm
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
