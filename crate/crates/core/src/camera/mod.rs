//! Camera model families, forward projection, unprojection and validity bounds.
//!
//! All six families share the same pixel layout,
//! `u = fx·φ(R, Z)·X + cx`, `v = fy·φ(R, Z)·Y + cy`, and differ only in the
//! radial function `φ` (forward families) or `ψ` (the backward division
//! model). The pixel aspect ratio is `a = fy / fx`.

mod domain;
mod jacobian;
mod model;
mod project;

pub use domain::{min_focal, Domain, Violation};
pub use jacobian::{fd_step, unproject_jacobian_fd, unproject_jacobians, UnprojectJacobian};
pub use model::{Family, ModelId};
pub use project::Projector;

use alloc::vec::Vec;
use core::fmt;

use crate::error::Result;

/// A unit direction in the camera frame (`z` along the optical axis).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Ray {
    pub const OPTICAL_AXIS: Ray = Ray {
        x: 0.0,
        y: 0.0,
        z: 1.0,
    };

    /// Normalizes `(x, y, z)`. Returns `None` for a zero or non-finite vector.
    pub fn normalized(x: f64, y: f64, z: f64) -> Option<Ray> {
        let n = libm::sqrt(x * x + y * y + z * z);
        if !(n > 0.0) || !n.is_finite() {
            return None;
        }
        Some(Ray {
            x: x / n,
            y: y / n,
            z: z / n,
        })
    }

    /// Ray at polar angle `theta` from the optical axis and azimuth `phi`
    /// measured from `+x` towards `+y`.
    pub fn from_polar(theta: f64, phi: f64) -> Ray {
        let s = libm::sin(theta);
        Ray {
            x: s * libm::cos(phi),
            y: s * libm::sin(phi),
            z: libm::cos(theta),
        }
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
    }

    pub fn dot(&self, other: &Ray) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Polar angle, `atan2(R, Z)`.
    pub fn polar_angle(&self) -> f64 {
        libm::atan2(libm::hypot(self.x, self.y), self.z)
    }

    /// Angle between two rays, stable for nearly parallel inputs.
    pub fn angle_to(&self, other: &Ray) -> f64 {
        let cx = self.y * other.z - self.z * other.y;
        let cy = self.z * other.x - self.x * other.z;
        let cz = self.x * other.y - self.y * other.x;
        libm::atan2(libm::sqrt(cx * cx + cy * cy + cz * cz), self.dot(other))
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// Continuous pixel coordinates; the image covers `[0, W] × [0, H]` and pixel
/// `(i, j)` has its center at `(i + 0.5, j + 0.5)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

impl Pixel {
    pub fn new(u: f64, v: f64) -> Pixel {
        Pixel { u, v }
    }

    /// Center of the pixel at column `i`, row `j`.
    pub fn center(i: usize, j: usize) -> Pixel {
        Pixel {
            u: i as f64 + 0.5,
            v: j as f64 + 0.5,
        }
    }

    pub fn distance(&self, other: &Pixel) -> f64 {
        libm::hypot(self.u - other.u, self.v - other.v)
    }
}

/// Intrinsics of one camera: model, focal lengths, principal point,
/// distortion coefficients and image size.
///
/// `dist` holds `k_1..k_N` for Brown-Conrady, Kannala-Brandt and division
/// models, `[ξ]` for UCM and `[α, β]` for EUCM.
#[derive(Clone, Debug, PartialEq)]
pub struct CameraSpec {
    pub model: ModelId,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub dist: Vec<f64>,
    pub width: u32,
    pub height: u32,
}

impl CameraSpec {
    pub fn new(
        model: ModelId,
        [fx, fy, cx, cy]: [f64; 4],
        dist: Vec<f64>,
        width: u32,
        height: u32,
    ) -> Result<CameraSpec> {
        model.check_dist_len(dist.len())?;
        Ok(CameraSpec {
            model,
            fx,
            fy,
            cx,
            cy,
            dist,
            width,
            height,
        })
    }

    /// Square-pixel spec with the principal point at the image center.
    pub fn centered(model: ModelId, f: f64, dist: Vec<f64>, width: u32, height: u32) -> Result<CameraSpec> {
        CameraSpec::new(
            model,
            [f, f, width as f64 / 2.0, height as f64 / 2.0],
            dist,
            width,
            height,
        )
    }

    /// Pixel aspect ratio `fy / fx`.
    pub fn aspect(&self) -> f64 {
        self.fy / self.fx
    }

    pub fn principal_point(&self) -> Pixel {
        Pixel::new(self.cx, self.cy)
    }

    /// Parameter vector `[fx, fy, cx, cy, dist...]`.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(4 + self.dist.len());
        p.extend_from_slice(&[self.fx, self.fy, self.cx, self.cy]);
        p.extend_from_slice(&self.dist);
        p
    }

    /// Inverse of [`CameraSpec::params`].
    pub fn set_params(&mut self, p: &[f64]) {
        debug_assert_eq!(p.len(), 4 + self.dist.len());
        self.fx = p[0];
        self.fy = p[1];
        self.cx = p[2];
        self.cy = p[3];
        self.dist.copy_from_slice(&p[4..]);
    }

    /// Domain limits (maximum projectable angle, maximum invertible
    /// normalized radius) of this spec's model and coefficients.
    pub fn domain(&self) -> Domain {
        Domain::of(self.model, &self.dist)
    }

    /// Helper that caches the domain for repeated projections.
    pub fn projector(&self) -> Projector<'_> {
        Projector::new(self)
    }

    pub fn project(&self, ray: &Ray) -> Result<Pixel> {
        self.projector().project(ray)
    }

    pub fn unproject(&self, px: &Pixel) -> Result<Ray> {
        self.projector().unproject(px)
    }

    /// Normalized image radius `r(θ)` at polar angle `theta` (unit focal,
    /// zero principal point).
    pub fn radial_profile(&self, theta: f64) -> Result<f64> {
        project::radial_profile(self.model, &self.dist, &self.domain(), theta)
    }

    /// Polar angle at which the projected radius reaches the farthest image
    /// corner. Returns `None` when the corner lies outside the injective region.
    pub fn corner_angle(&self) -> Option<f64> {
        let corner = self
            .corners()
            .iter()
            .map(|c| self.normalized_radius(c))
            .fold(0.0, f64::max);
        let dom = self.domain();
        if corner >= dom.radius_max {
            return None;
        }
        let (px, py) = (self.cx + corner * self.fx, self.cy);
        self.unproject(&Pixel::new(px, py)).ok().map(|r| r.polar_angle())
    }

    /// Normalized radius `‖((u - cx)/fx, (v - cy)/fy)‖` of a pixel.
    pub fn normalized_radius(&self, px: &Pixel) -> f64 {
        libm::hypot((px.u - self.cx) / self.fx, (px.v - self.cy) / self.fy)
    }

    pub fn corners(&self) -> [Pixel; 4] {
        let (w, h) = (self.width as f64, self.height as f64);
        [
            Pixel::new(0.0, 0.0),
            Pixel::new(w, 0.0),
            Pixel::new(0.0, h),
            Pixel::new(w, h),
        ]
    }

    /// Bound and injectivity checks; an empty list means the spec is valid.
    pub fn validate(&self) -> Vec<Violation> {
        domain::validate_spec(self)
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }
}

impl fmt::Display for CameraSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}x{} f=({:.6}, {:.6}) c=({:.6}, {:.6}) dist={:?}",
            self.model, self.width, self.height, self.fx, self.fy, self.cx, self.cy, self.dist
        )
    }
}

/// Checks a spec against its parameter bounds and injectivity clamp.
pub fn validate_spec(spec: &CameraSpec) -> Vec<Violation> {
    spec.validate()
}
