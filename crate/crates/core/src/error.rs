use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {what}: {reason}")]
    InvalidInput { what: &'static str, reason: String },

    #[error(
        "simulation duration {given_s:.6e} s is too short; at least {required_s:.6e} s is needed to cover the farthest absorber"
    )]
    DurationTooShort { required_s: f64, given_s: f64 },

    #[error("cannot add noise at {snr_db} dB to an all-zero frame (reference power is zero)")]
    ZeroReferencePower { snr_db: f64 },

    #[error("{method} needs at least {required} elements, got {got}")]
    TooFewElements {
        method: &'static str,
        required: usize,
        got: usize,
    },

    #[error("envelope is identically zero; log compression is undefined")]
    AllZeroEnvelope,

    #[error("region {0} has zero standard deviation")]
    ConstantRegion(String),

    #[error("region {region} covers {pixels} grid pixel(s), need at least {required}")]
    RegionTooSmall {
        region: String,
        pixels: usize,
        required: usize,
    },

    #[error("depth {depth_m:.6e} m lies outside the imaging grid [{min_m:.6e}, {max_m:.6e}] m")]
    DepthOutsideGrid { depth_m: f64, min_m: f64, max_m: f64 },

    #[error("no peak found inside lateral window [{lo_m:.6e}, {hi_m:.6e}] m")]
    NoPeak { lo_m: f64, hi_m: f64 },

    #[error("the -3 dB contour leaves the profile before crossing on the {side} side")]
    ContourExitsGrid { side: &'static str },

    #[error("background mean is zero; contrast ratio is undefined")]
    ZeroBackground,

    #[error("mainlobe exclusion of +/-{half_width_m:.6e} m covers the whole profile")]
    ExclusionCoversProfile { half_width_m: f64 },

    #[error("bad magic in RF file: expected PARF0001")]
    BadMagic,

    #[error("truncated RF file: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },

    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("scenario `{scenario}`: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// Short machine-readable class, used by the command line front end.
    pub fn class(&self) -> &'static str {
        match self {
            Error::InvalidInput { .. } => "invalid-input",
            Error::DurationTooShort { .. } | Error::ZeroReferencePower { .. } => "simulation",
            Error::TooFewElements { .. } => "beamform",
            Error::AllZeroEnvelope => "pipeline",
            Error::ConstantRegion(_)
            | Error::RegionTooSmall { .. }
            | Error::DepthOutsideGrid { .. }
            | Error::NoPeak { .. }
            | Error::ContourExitsGrid { .. }
            | Error::ZeroBackground
            | Error::ExclusionCoversProfile { .. } => "metrics",
            Error::BadMagic | Error::Truncated { .. } => "format",
            Error::Config { .. } => "config",
            Error::Scenario { source, .. } => source.class(),
            Error::Io { .. } => "io",
        }
    }
}
