//! LensFun fisheye calibrations mapped onto EUCM.
//!
//! LensFun describes a lens by a radial distortion polynomial acting on
//! normalized sensor coordinates (unit = half the shorter sensor side) on top
//! of an ideal projection. A uniform sensor grid is undistorted by Newton's
//! method, the ideal projection is inverted to obtain rays, and EUCM is fitted
//! linearly with the nominal focal length.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::str::FromStr;

use crate::calib::eucm::fit_eucm_with;
use crate::calib::Correspondences;
use crate::camera::{CameraSpec, ModelId, Pixel, Ray};
use crate::error::{Error, Result};

/// Newton tolerance on the undistorted radius.
pub const UNDISTORT_TOL: f64 = 1e-10;
pub const UNDISTORT_MAX_ITERS: usize = 50;
/// Samples along the longer sensor side before striding.
pub const SENSOR_GRID: u32 = 512;

/// LensFun distortion polynomial, mapping an undistorted radius `r` to the
/// distorted one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Distortion {
    None,
    /// `r(1 - k₁ + k₁r²)`
    Poly3 { k1: f64 },
    /// `r(1 + k₁r² + k₂r⁴)`
    Poly5 { k1: f64, k2: f64 },
    /// `r(ar³ + br² + cr + 1 - a - b - c)`
    PtLens { a: f64, b: f64, c: f64 },
}

impl Distortion {
    /// Builds a distortion from its LensFun name and coefficients.
    pub fn new(kind: &str, coeffs: &[f64]) -> Result<Distortion> {
        let count = |n: usize| {
            if coeffs.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidArgument("coefficient count does not match the distortion model"))
            }
        };
        if !coeffs.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite distortion coefficient"));
        }
        match kind {
            "none" => count(0).map(|_| Distortion::None),
            "poly3" => count(1).map(|_| Distortion::Poly3 { k1: coeffs[0] }),
            "poly5" => count(2).map(|_| Distortion::Poly5 {
                k1: coeffs[0],
                k2: coeffs[1],
            }),
            "ptlens" => count(3).map(|_| Distortion::PtLens {
                a: coeffs[0],
                b: coeffs[1],
                c: coeffs[2],
            }),
            _ => Err(Error::InvalidArgument("unsupported LensFun distortion model")),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Distortion::None => "none",
            Distortion::Poly3 { .. } => "poly3",
            Distortion::Poly5 { .. } => "poly5",
            Distortion::PtLens { .. } => "ptlens",
        }
    }

    pub fn coefficients(&self) -> Vec<f64> {
        match *self {
            Distortion::None => Vec::new(),
            Distortion::Poly3 { k1 } => alloc::vec![k1],
            Distortion::Poly5 { k1, k2 } => alloc::vec![k1, k2],
            Distortion::PtLens { a, b, c } => alloc::vec![a, b, c],
        }
    }

    /// Distorted radius and its derivative.
    fn eval(&self, r: f64) -> (f64, f64) {
        let r2 = r * r;
        match *self {
            Distortion::None => (r, 1.0),
            Distortion::Poly3 { k1 } => (r * (1.0 - k1 + k1 * r2), 1.0 - k1 + 3.0 * k1 * r2),
            Distortion::Poly5 { k1, k2 } => (
                r * (1.0 + k1 * r2 + k2 * r2 * r2),
                1.0 + 3.0 * k1 * r2 + 5.0 * k2 * r2 * r2,
            ),
            Distortion::PtLens { a, b, c } => {
                let d = 1.0 - a - b - c;
                (
                    r * (a * r2 * r + b * r2 + c * r + d),
                    4.0 * a * r2 * r + 3.0 * b * r2 + 2.0 * c * r + d,
                )
            }
        }
    }

    /// Undistorted radius for a distorted one, by Newton's method from
    /// `r = r_d`.
    pub fn undistort(&self, rd: f64) -> Result<f64> {
        let mut r = rd;
        for _ in 0..UNDISTORT_MAX_ITERS {
            let (g, dg) = self.eval(r);
            if !(dg > 0.0) {
                return Err(Error::NewtonDivergence);
            }
            let step = (g - rd) / dg;
            r -= step;
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::NewtonDivergence);
            }
            if step.abs() <= UNDISTORT_TOL {
                return Ok(r);
            }
        }
        Err(Error::NewtonDivergence)
    }
}

/// Ideal fisheye projection `x = g(θ)` in focal units.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projection {
    /// `x = θ`
    Equidistant,
    /// `x = 2 sin(θ/2)`
    Equisolid,
    /// `x = sin θ`
    Orthographic,
    /// `x = 2 tan(θ/2)`
    Stereographic,
}

impl Projection {
    pub const ALL: [Projection; 4] = [
        Projection::Equidistant,
        Projection::Equisolid,
        Projection::Orthographic,
        Projection::Stereographic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Projection::Equidistant => "fisheye_equidistant",
            Projection::Equisolid => "fisheye_equisolid",
            Projection::Orthographic => "fisheye_orthographic",
            Projection::Stereographic => "fisheye_stereographic",
        }
    }

    pub fn project(self, theta: f64) -> f64 {
        match self {
            Projection::Equidistant => theta,
            Projection::Equisolid => 2.0 * libm::sin(theta / 2.0),
            Projection::Orthographic => libm::sin(theta),
            Projection::Stereographic => 2.0 * libm::tan(theta / 2.0),
        }
    }

    /// Polar angle of a radius in focal units, if it lies in the image of
    /// the projection.
    pub fn unproject(self, x: f64) -> Option<f64> {
        let theta = match self {
            Projection::Equidistant => x,
            Projection::Equisolid if x <= 2.0 => 2.0 * libm::asin(x / 2.0),
            Projection::Orthographic if x <= 1.0 => libm::asin(x),
            Projection::Stereographic => 2.0 * libm::atan(x / 2.0),
            _ => return None,
        };
        (theta >= 0.0 && theta < PI).then_some(theta)
    }
}

impl FromStr for Projection {
    type Err = Error;

    /// Accepts the LensFun `<type>` names; plain `fisheye` is equidistant.
    fn from_str(s: &str) -> Result<Projection> {
        match s {
            "fisheye" | "fisheye_equidistant" | "equidistant" => Ok(Projection::Equidistant),
            "fisheye_equisolid" | "equisolid" => Ok(Projection::Equisolid),
            "fisheye_orthographic" | "orthographic" => Ok(Projection::Orthographic),
            "fisheye_stereographic" | "stereographic" => Ok(Projection::Stereographic),
            _ => Err(Error::InvalidArgument("unsupported lens projection")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LensfunEntry {
    pub distortion: Distortion,
    pub projection: Projection,
    pub focal_mm: f64,
    pub sensor_width_mm: f64,
    pub sensor_height_mm: f64,
}

impl LensfunEntry {
    /// Sensor of a camera with the given crop factor (36×24 mm full frame).
    pub fn sensor_from_crop(crop: f64) -> (f64, f64) {
        (36.0 / crop, 24.0 / crop)
    }

    fn check(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !(positive(self.focal_mm) && positive(self.sensor_width_mm) && positive(self.sensor_height_mm)) {
            return Err(Error::InvalidArgument("focal and sensor size must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LensfunFit {
    pub alpha: f64,
    pub beta: f64,
    /// Focal length of the EUCM, mm.
    pub focal_mm: f64,
    /// Mean angle (degrees) between the LensFun rays and the EUCM
    /// unprojections of the grid points.
    pub residual_deg: f64,
    /// Grid points used by the fit.
    pub used: usize,
    /// Grid points dropped because undistortion or the ideal projection
    /// failed.
    pub dropped: usize,
}

/// Maps a LensFun fisheye entry to EUCM `(α, β)`.
///
/// The sensor is sampled on a virtual image whose longer side has
/// [`SENSOR_GRID`] pixels, taking every `grid_stride`-th pixel center. EUCM
/// is fitted with the nominal focal length fixed, so only `(α, β)` are
/// estimated.
pub fn lensfun_to_eucm(entry: &LensfunEntry, grid_stride: u32) -> Result<LensfunFit> {
    entry.check()?;
    if grid_stride == 0 {
        return Err(Error::InvalidArgument("stride must be positive"));
    }
    let (sw, sh) = (entry.sensor_width_mm, entry.sensor_height_mm);
    let pitch = sw.max(sh) / SENSOR_GRID as f64;
    let w = libm::round(sw / pitch).max(1.0) as u32;
    let h = libm::round(sh / pitch).max(1.0) as u32;
    let c = Pixel::new(w as f64 / 2.0, h as f64 / 2.0);
    // LensFun radii are in units of half the shorter sensor side
    let unit_mm = 0.5 * sw.min(sh);
    let f_px = entry.focal_mm / pitch;

    let (mut pixels, mut rays) = (Vec::new(), Vec::new());
    let mut dropped = 0;
    for j in (0..h).step_by(grid_stride as usize) {
        for i in (0..w).step_by(grid_stride as usize) {
            let px = Pixel::center(i as usize, j as usize);
            let (dx, dy) = ((px.u - c.u) * pitch, (px.v - c.v) * pitch);
            let rd_mm = libm::hypot(dx, dy);
            let theta = entry
                .distortion
                .undistort(rd_mm / unit_mm)
                .ok()
                .and_then(|ru| entry.projection.unproject(ru * unit_mm / entry.focal_mm));
            let Some(theta) = theta else {
                dropped += 1;
                continue;
            };
            pixels.push(px);
            rays.push(Ray::from_polar(theta, libm::atan2(dy, dx)));
        }
    }
    let corrs = Correspondences::new(pixels, rays, w, h)?;
    if corrs.len() < 3 {
        return Err(Error::DegenerateGeometry("too few sensor points survive undistortion"));
    }
    let (spec, _) = fit_eucm_with(&corrs, 1.0, c, Some(f_px), 3)?;
    let residual_deg = mean_residual(&spec, &corrs);
    Ok(LensfunFit {
        alpha: spec.dist[0],
        beta: spec.dist[1],
        focal_mm: spec.fx * pitch,
        residual_deg,
        used: corrs.len(),
        dropped,
    })
}

fn mean_residual(spec: &CameraSpec, corrs: &Correspondences) -> f64 {
    debug_assert_eq!(spec.model, ModelId::EUCM);
    let proj = spec.projector();
    let (mut sum, mut n) = (0.0, 0usize);
    for (px, ray) in corrs.pixels.iter().zip(&corrs.rays) {
        if let Ok(r) = proj.unproject(px) {
            sum += r.angle_to(ray);
            n += 1;
        }
    }
    if n == 0 {
        f64::INFINITY
    } else {
        (sum / n as f64).to_degrees()
    }
}
