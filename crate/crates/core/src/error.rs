use thiserror::Error;

/// Errors produced by the beamforming toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "scatterer {index} at (x = {x:.6e} m, z = {z:.6e} m) falls outside the acquisition window \
         (needs samples up to {needed}, window has {available})"
    )]
    WindowOverflow {
        index: usize,
        x: f64,
        z: f64,
        needed: i64,
        available: usize,
    },

    #[error("guard band too short: {required_padding} more trailing samples required")]
    GuardBand { required_padding: usize },

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("image grids differ")]
    GridMismatch,

    #[error("regions of interest overlap on {0} pixels")]
    RoiOverlap(usize),

    #[error("region of interest covers {pixels} pixels, at least {minimum} required")]
    RoiTooSmall { pixels: usize, minimum: usize },

    #[error("no peak found inside the search window")]
    NoPeak,

    #[error("profile does not fall below half maximum inside the search window")]
    UnresolvedWidth,

    #[error("image is identically zero")]
    DegenerateImage,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
