//! Geometric core for single-view, model-agnostic camera calibration from
//! dense per-pixel ray fields.
//!
//! The crate is `no_std` (with `alloc`) and contains:
//!
//! - [`camera`]: six camera-model families with projection, unprojection,
//!   injectivity domains and validity checks;
//! - [`fov`]: the tangent-plane (FoV field) representation of rays;
//! - [`calib`]: closed-form recovery of intrinsics from pixel/ray
//!   correspondences, bounded fits, Gauss-Newton refinement, RANSAC and
//!   cross-model conversion;
//! - [`metrics`]: model-agnostic accuracy metrics;
//! - [`synth`]: seeded intrinsics samplers, noise injection and the mapping of
//!   LensFun fisheye calibrations onto EUCM.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod calib;
pub mod camera;
pub mod error;
pub mod fov;
mod linalg;
pub mod metrics;
mod numeric;
pub mod synth;

pub use calib::{calibrate, CalibrationResult, Correspondences};
pub use camera::{min_focal, validate_spec, CameraSpec, Family, ModelId, Pixel, Ray};
pub use error::{Error, Result};
pub use fov::FovField;
