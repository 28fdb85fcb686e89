use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no disc through the source reaches detector at ({x}, {y}) for phi = {phi}")]
    NoDisc { x: f64, y: f64, phi: f64 },

    #[error("invalid phantom: {0}")]
    InvalidPhantom(String),

    #[error("axis error: {0}")]
    Axis(String),

    #[error("incomplete data: missing value at p = {p}, phi = {phi}")]
    IncompleteData { p: f64, phi: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("frequency {sigma} outside the checked band (0, {limit}]")]
    OutOfBand { sigma: f64, limit: f64 },

    #[error("no physical incident energy for E_s = {e_s} keV at omega = {omega}")]
    NoPhysicalEnergy { e_s: f64, omega: f64 },

    #[error("singular configuration: {0}")]
    SingularConfiguration(String),

    #[error("scattering region is empty for p = {p}, phi = {phi}")]
    EmptyRegion { p: f64, phi: f64 },

    #[error("normalization failed at p = {p}, phi = {phi}: {reason}")]
    Normalization { p: f64, phi: f64, reason: String },

    #[error("Z = {z} outside fit range [{min}, {max}]")]
    OutOfRange { z: f64, min: f64, max: f64 },

    #[error("sigma_e ratio {ratio} outside fit gamut; nearest admissible Z = {clamped}")]
    OutOfGamut { ratio: f64, clamped: f64 },

    #[error("parse error in {field}: {reason}")]
    Parse { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
