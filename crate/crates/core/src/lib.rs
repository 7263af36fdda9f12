//! Illumination-invariant face features.
//!
//! The crate covers the full pipeline:
//!
//! - [`imaging`]: grayscale containers, PGM/PNG I/O, log transform, padding
//!   and Gaussian smoothing.
//! - [`illum`]: SVD-based illumination coefficient and five-level
//!   classification against a calibrated profile.
//! - [`features`]: multiscale log edgemaps, their adaptive fusion, the
//!   sigmoid-constrained face, and the Weber/Gradient baselines.
//! - [`recognition`]: nearest-neighbor matching, the rotating-gallery
//!   average recognition rate, and parameter sweeps.
//! - [`synth`]: Lambertian scenes with known reflectance and illumination.
//! - [`cli`]: the `ajlef` command-line front end.

pub mod cli;
pub mod error;
pub mod features;
pub mod illum;
pub mod imaging;
pub mod recognition;
pub mod synth;

pub use error::{Error, Result};
