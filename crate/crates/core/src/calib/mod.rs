//! Closed-form intrinsics recovery from pixel/ray correspondences.
//!
//! The pipeline has two linear stages followed by a short Gauss-Newton
//! refinement:
//!
//! 1. [`fit_ppoint_aspect`] recovers the aspect ratio `a` and the principal
//!    point `c` from `(u - cx)·Y·a = (v - cy)·X`, which holds for every
//!    family since all of them scale `(X, aY)` by the same radial factor.
//! 2. [`fit_linear`] (or [`fit_eucm`]) recovers focal length and distortion
//!    from one linear row per correspondence.
//! 3. [`refine`] minimizes tangent-plane residuals between the observed rays
//!    and those of the fitted intrinsics.

mod convert;
pub(crate) mod eucm;
mod linear;
mod ppoint;
mod ransac;
mod refine;

pub use convert::{convert_model, convert_model_detailed};
pub use eucm::fit_eucm;
pub use linear::{fit_distortion, fit_linear};
pub use ppoint::{fit_ppoint_aspect, PrincipalPoint};
pub use ransac::{calibrate_ransac, minimal_sample, ransac_corrs, RansacOptions};
pub use refine::{refine, refine_with, residual_jacobian, RefineOptions};

use alloc::vec::Vec;
use core::fmt;

use crate::camera::{CameraSpec, Family, ModelId, Pixel, Ray, Violation};
use crate::error::{Error, Result};
use crate::fov::{rays_from_field, FovField};

/// Paired pixels and unit rays, plus the size of the image they come from.
#[derive(Clone, Debug, PartialEq)]
pub struct Correspondences {
    pub pixels: Vec<Pixel>,
    pub rays: Vec<Ray>,
    pub width: u32,
    pub height: u32,
}

impl Correspondences {
    pub fn new(pixels: Vec<Pixel>, rays: Vec<Ray>, width: u32, height: u32) -> Result<Correspondences> {
        if pixels.len() != rays.len() {
            return Err(Error::DimensionMismatch("pixels and rays differ in length"));
        }
        Ok(Correspondences {
            pixels,
            rays,
            width,
            height,
        })
    }

    /// Every `stride`-th cell of a field (in both directions).
    pub fn from_field(field: &FovField, stride: u32) -> Result<Correspondences> {
        if stride == 0 {
            return Err(Error::InvalidArgument("stride must be positive"));
        }
        let grid = rays_from_field(field)?;
        let (cols, rows) = (grid.cols(), grid.rows());
        let s = stride as usize;
        let mut pixels = Vec::with_capacity(cols.div_ceil(s) * rows.div_ceil(s));
        let mut rays = Vec::with_capacity(pixels.capacity());
        for j in (0..rows).step_by(s) {
            for i in (0..cols).step_by(s) {
                pixels.push(grid.pixel(i, j));
                rays.push(grid.rays[j * cols + i]);
            }
        }
        Correspondences::new(pixels, rays, field.width, field.height)
    }

    /// Unprojections of a spec on every `stride`-th pixel center. Pixels
    /// that cannot be unprojected are skipped.
    pub fn from_spec(spec: &CameraSpec, stride: u32) -> Result<Correspondences> {
        if stride == 0 {
            return Err(Error::InvalidArgument("stride must be positive"));
        }
        let proj = spec.projector();
        let mut pixels = Vec::new();
        let mut rays = Vec::new();
        for j in (0..spec.height).step_by(stride as usize) {
            for i in (0..spec.width).step_by(stride as usize) {
                let px = Pixel::center(i as usize, j as usize);
                if let Ok(ray) = proj.unproject(&px) {
                    pixels.push(px);
                    rays.push(ray);
                }
            }
        }
        Correspondences::new(pixels, rays, spec.width, spec.height)
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Correspondences {
        Correspondences {
            pixels: idx.iter().map(|&i| self.pixels[i]).collect(),
            rays: idx.iter().map(|&i| self.rays[i]).collect(),
            width: self.width,
            height: self.height,
        }
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = (&Pixel, &Ray)> {
        self.pixels.iter().zip(&self.rays)
    }
}

/// A parameter bound that was active (clamped) during fitting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActiveBound {
    pub param: &'static str,
    pub value: f64,
}

impl fmt::Display for ActiveBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.param, self.value)
    }
}

/// Non-fatal conditions reported alongside a fit.
#[derive(Clone, Debug, PartialEq)]
pub enum Warning {
    /// The Gauss-Newton system was rank deficient; refinement stopped.
    SingularNormalMatrix,
    /// Correspondences dropped because their pixel could not be unprojected
    /// with the algebraic estimate.
    DroppedRows(usize),
    /// The fitted spec fails the validity checks.
    InvalidSpec(Vec<Violation>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationResult {
    pub spec: CameraSpec,
    /// Output of the linear stages, before refinement.
    pub algebraic_spec: CameraSpec,
    /// Mean squared tangent residual (rad²) before refinement and after
    /// each Gauss-Newton iteration.
    pub gn_costs: Vec<f64>,
    /// RMS residual of the principal point / aspect solve, when it ran.
    pub ppoint_residual: Option<f64>,
    pub active_bounds: Vec<ActiveBound>,
    pub warnings: Vec<Warning>,
}

/// Knobs of the calibration pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibOptions {
    /// Kannala-Brandt order of the proxy model that provides the EUCM focal.
    pub eucm_proxy_order: u8,
    pub refine: RefineOptions,
}

impl Default for CalibOptions {
    fn default() -> Self {
        CalibOptions {
            eucm_proxy_order: 3,
            refine: RefineOptions::default(),
        }
    }
}

/// Output of the two linear stages.
#[derive(Clone, Debug)]
pub(crate) struct Algebraic {
    pub spec: CameraSpec,
    pub ppoint_residual: f64,
    pub active_bounds: Vec<ActiveBound>,
}

pub(crate) fn fit_algebraic(model: ModelId, corrs: &Correspondences, opts: &CalibOptions) -> Result<Algebraic> {
    let pp = fit_ppoint_aspect(corrs)?;
    let c = Pixel::new(pp.cx, pp.cy);
    let (spec, active_bounds) = match model.family() {
        Family::Eucm => eucm::fit_eucm_with(corrs, pp.a, c, None, opts.eucm_proxy_order)?,
        _ => linear::fit_linear_with(model, corrs, pp.a, c, None)?,
    };
    Ok(Algebraic {
        spec,
        ppoint_residual: pp.residual,
        active_bounds,
    })
}

/// Full pipeline on explicit correspondences.
pub fn calibrate_corrs(model: ModelId, corrs: &Correspondences, opts: &CalibOptions) -> Result<CalibrationResult> {
    let alg = fit_algebraic(model, corrs, opts)?;
    let mut res = refine_with(&alg.spec, corrs, &opts.refine)?;
    res.ppoint_residual = Some(alg.ppoint_residual);
    let mut bounds = alg.active_bounds;
    bounds.extend(res.active_bounds);
    res.active_bounds = bounds;
    Ok(res)
}

/// Calibrates `model` from a FoV field, using every `stride`-th cell.
pub fn calibrate(field: &FovField, model: ModelId, stride: u32) -> Result<CalibrationResult> {
    calibrate_with(field, model, stride, &CalibOptions::default())
}

pub fn calibrate_with(
    field: &FovField,
    model: ModelId,
    stride: u32,
    opts: &CalibOptions,
) -> Result<CalibrationResult> {
    let corrs = Correspondences::from_field(field, stride)?;
    calibrate_corrs(model, &corrs, opts)
}

/// Per-correspondence quantities shared by the linear rows.
#[derive(Clone, Copy, Debug)]
pub(crate) struct RowGeom {
    pub z: f64,
    /// `√(X² + Y²)`
    pub big_r: f64,
    /// `√(X² + a²Y²)`
    pub r_a: f64,
    /// `‖x - c‖`
    pub r_c: f64,
    /// `√((u - cx)² + ((v - cy)/a)²)`, i.e. `f` times the normalized radius
    pub r_ca: f64,
}

impl RowGeom {
    pub fn new(px: &Pixel, ray: &Ray, a: f64, c: Pixel) -> RowGeom {
        let (du, dv) = (px.u - c.u, px.v - c.v);
        RowGeom {
            z: ray.z,
            big_r: libm::hypot(ray.x, ray.y),
            r_a: libm::hypot(ray.x, a * ray.y),
            r_c: libm::hypot(du, dv),
            r_ca: libm::hypot(du, dv / a),
        }
    }

    pub fn theta(&self) -> f64 {
        libm::atan2(self.big_r, self.z)
    }

    pub fn d(&self) -> f64 {
        libm::sqrt(self.big_r * self.big_r + self.z * self.z)
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use alloc::vec;

    /// Correspondences on an `n × n` grid of pixel centers spread over the
    /// image.
    pub fn grid_corrs(spec: &CameraSpec, n: usize) -> Correspondences {
        let mut pixels = Vec::new();
        let mut rays = Vec::new();
        let (w, h) = (spec.width as f64, spec.height as f64);
        for j in 0..n {
            for i in 0..n {
                let px = Pixel::new((i as f64 + 0.5) * w / n as f64, (j as f64 + 0.5) * h / n as f64);
                rays.push(spec.unproject(&px).unwrap());
                pixels.push(px);
            }
        }
        Correspondences::new(pixels, rays, spec.width, spec.height).unwrap()
    }

    pub fn kb4_reference() -> CameraSpec {
        CameraSpec::centered(
            ModelId::kb(4).unwrap(),
            616.1,
            vec![6.0e-2, 0.61e-2, 0.06e-2, -0.03e-2],
            1752,
            1168,
        )
        .unwrap()
    }

    pub fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    pub fn max_rel_err(a: &CameraSpec, b: &CameraSpec) -> f64 {
        a.params()
            .iter()
            .zip(b.params())
            .map(|(x, y)| (x - y).abs() / y.abs().max(1e-12))
            .fold(0.0, f64::max)
    }

    pub fn sample_specs() -> Vec<CameraSpec> {
        let mk = |m: &str, p: [f64; 4], d: Vec<f64>| CameraSpec::new(m.parse().unwrap(), p, d, 640, 480).unwrap();
        vec![
            mk("pinhole", [400.0, 410.0, 330.0, 230.0], vec![]),
            mk("radial:2", [420.0, 430.0, 318.0, 245.0], vec![-0.12, 0.02]),
            mk("kb:3", [300.0, 290.0, 322.0, 236.0], vec![0.05, -0.01, 0.002]),
            mk("ucm", [500.0, 505.0, 325.0, 241.0], vec![0.9]),
            mk("eucm", [280.0, 282.0, 316.0, 238.0], vec![0.6, 1.19]),
            mk("division:2", [450.0, 460.0, 310.0, 250.0], vec![-0.2, 0.05]),
        ]
    }
}
