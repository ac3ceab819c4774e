//! Linear-array photoacoustic image reconstruction with delay-and-sum (DAS),
//! delay-multiply-and-sum (DMAS) and double-stage DMAS (DS-DMAS) beamformers.
//!
//! The crate covers the whole chain:
//!
//! * [`sim`]: an analytic point-source forward model producing RF frames,
//!   plus seeded Gaussian noise;
//! * [`beamform`]: delays, fractional sampling and the three per-pixel
//!   beamformers, each in a naive and a factored form;
//! * [`pipeline`]: column envelope detection and log compression;
//! * [`metrics`]: SNR, FWHM, contrast ratio, sidelobe level and the share of
//!   target energy outside the mainlobe;
//! * [`io`], [`scenario`] and [`bench`]: file formats, scenario runner and
//!   complexity benchmark.
//!
//! The `examples/` directory has one runnable program per capability, e.g.
//! `cargo run --release --example point_grid`.

pub mod beamform;
pub mod bench;
pub mod error;
pub mod frame;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
pub use frame::RfFrame;
pub use geometry::{ArrayGeometry, ImagingGrid, MediumModel};
