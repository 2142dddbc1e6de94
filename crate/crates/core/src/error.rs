use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("grid size {0} is not a positive power of two")]
    GridSize(usize),
    #[error("box length {0} must be positive and finite")]
    BoxLength(f64),
    #[error("frequency spacing {spacing} exceeds 1/8 on the y axis")]
    CoarseFrequency { spacing: f64 },
    #[error("frequency {needed} is not resolved (Nyquist {nyquist})")]
    Nyquist { needed: f64, nyquist: f64 },
    #[error("grids do not match")]
    GridMismatch,
    #[error("field is in the wrong representation: expected {expected}")]
    Representation { expected: &'static str },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("trajectory is empty or has no common time support")]
    EmptyTrajectory,
    #[error("time {t} is outside the stored interval [{lo}, {hi}]")]
    TimeOutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("bump supports overlap: {0}")]
    Overlap(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed dump: {0}")]
    Format(String),
}

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Parameter(msg.into()))
}
