use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A NaN or infinite value was passed where a finite one is required.
    NonFinite(&'static str),
    /// A value fell outside its documented range.
    OutOfRange { what: &'static str, value: f64 },
    /// A configuration failed validation.
    InvalidConfig(&'static str),
    /// Bike placement could not reach the configured minimum count.
    Placement { placed: usize, required: usize },
    /// The point lies at or behind the camera plane.
    BehindCamera,
    /// A zero-size or otherwise degenerate model or primitive.
    Degenerate(&'static str),
    /// Invalid filter kernel specification.
    InvalidKernel(&'static str),
    /// Image with a zero dimension, or buffer length not matching its dimensions.
    InvalidImage(&'static str),
    /// Gradient requested exactly at a non-differentiable IoU configuration.
    SubgradientPoint,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonFinite(what) => write!(f, "{what} must be finite"),
            Error::OutOfRange { what, value } => write!(f, "{what} out of range: {value}"),
            Error::InvalidConfig(msg) => write!(f, "invalid config: {msg}"),
            Error::Placement { placed, required } => write!(
                f,
                "could only place {placed} bikes, at least {required} required"
            ),
            Error::BehindCamera => f.write_str("point is at or behind the camera plane"),
            Error::Degenerate(what) => write!(f, "degenerate {what}"),
            Error::InvalidKernel(msg) => write!(f, "invalid kernel: {msg}"),
            Error::InvalidImage(msg) => write!(f, "invalid image: {msg}"),
            Error::SubgradientPoint => {
                f.write_str("subgradient point: IoU is not differentiable here")
            }
        }
    }
}

impl core::error::Error for Error {}
