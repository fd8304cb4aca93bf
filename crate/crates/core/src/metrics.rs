//! Model-agnostic accuracy metrics: errors are measured on rays and pixels,
//! never on parameters, so estimates in any camera model can be compared.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::camera::{CameraSpec, Pixel, Ray};
use crate::error::{Error, Result};

/// Mean of a per-cell error over a pixel grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridError {
    pub mean: f64,
    /// Cells that entered the mean.
    pub count: usize,
    /// Cells skipped because a projection or unprojection failed.
    pub dropped: usize,
}

fn same_size(gt: &CameraSpec, est: &CameraSpec) -> Result<()> {
    if (gt.width, gt.height) != (est.width, est.height) {
        return Err(Error::DimensionMismatch("specs differ in image size"));
    }
    Ok(())
}

fn grid(spec: &CameraSpec, stride: u32) -> Result<impl Iterator<Item = Pixel>> {
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be positive"));
    }
    let (w, h) = (spec.width, spec.height);
    let s = stride as usize;
    Ok((0..h as usize)
        .step_by(s)
        .flat_map(move |j| (0..w as usize).step_by(s).map(move |i| Pixel::center(i, j))))
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Result<GridError> {
    let (mut sum, mut count, mut dropped) = (0.0, 0usize, 0usize);
    for v in values {
        match v {
            Some(v) => {
                sum += v;
                count += 1;
            }
            None => dropped += 1,
        }
    }
    if count == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(GridError {
        mean: sum / count as f64,
        count,
        dropped,
    })
}

/// Per-cell angle (degrees) between the unprojections of `gt` and `est`,
/// row-major over the strided grid; `None` where either fails.
pub fn angular_error_grid(gt: &CameraSpec, est: &CameraSpec, stride: u32) -> Result<Vec<Option<f64>>> {
    same_size(gt, est)?;
    let (pg, pe) = (gt.projector(), est.projector());
    Ok(grid(gt, stride)?
        .map(|px| match (pg.unproject(&px), pe.unproject(&px)) {
            (Ok(a), Ok(b)) => Some(a.angle_to(&b).to_degrees()),
            _ => None,
        })
        .collect())
}

/// Mean angular unprojection error (AE, degrees) over the pixel centers of
/// every `stride`-th row and column.
pub fn angular_error(gt: &CameraSpec, est: &CameraSpec, stride: u32) -> Result<GridError> {
    mean_of(angular_error_grid(gt, est, stride)?.into_iter())
}

/// Mean reprojection error (RE, pixels): each pixel is unprojected with
/// `gt` and projected back with `est`.
pub fn reproj_error(gt: &CameraSpec, est: &CameraSpec, stride: u32) -> Result<GridError> {
    same_size(gt, est)?;
    let (pg, pe) = (gt.projector(), est.projector());
    mean_of(grid(gt, stride)?.map(|px| {
        let ray = pg.unproject(&px).ok()?;
        pe.project(&ray).ok().map(|q| q.distance(&px))
    }))
}

fn axis_angle(ray: &Ray) -> f64 {
    ray.angle_to(&Ray::OPTICAL_AXIS)
}

/// Horizontal and vertical field of view (degrees) from the rays through
/// the image edges on the principal row and column:
/// `∠(π⁻¹(0, cy), z) + ∠(π⁻¹(W, cy), z)` and likewise vertically.
pub fn fov_agnostic(spec: &CameraSpec) -> Result<(f64, f64)> {
    let proj = spec.projector();
    let ang = |u: f64, v: f64| {
        proj.unproject(&Pixel::new(u, v))
            .map(|r| axis_angle(&r))
            .map_err(|_| Error::BorderUnprojectionFailed)
    };
    let (w, h) = (spec.width as f64, spec.height as f64);
    let hfov = ang(0.0, spec.cy)? + ang(w, spec.cy)?;
    let vfov = ang(spec.cx, 0.0)? + ang(spec.cx, h)?;
    Ok((hfov.to_degrees(), vfov.to_degrees()))
}

/// Area under the recall curve up to each threshold, in percent.
///
/// The curve is sampled at 101 evenly spaced points on `[0, t]`; the AUC is
/// the mean recall over those points.
pub fn auc(errors: &[f64], thresholds: &[f64]) -> Result<Vec<f64>> {
    if errors.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&t| {
            let total: f64 = (0..=100)
                .map(|k| {
                    let s = t * k as f64 / 100.0;
                    sorted.partition_point(|&e| e <= s) as f64 / n
                })
                .sum();
            100.0 * total / 101.0
        })
        .collect())
}

/// Relative focal and principal point errors for edited (stretched or
/// cropped) images: `e_f = max |Δf/f|` over both axes and
/// `e_c = 2·max(|Δcx|/W, |Δcy|/H)`.
pub fn edited_errors(gt: &CameraSpec, est: &CameraSpec) -> (f64, f64) {
    let ef = ((gt.fx - est.fx) / gt.fx).abs().max(((gt.fy - est.fy) / gt.fy).abs());
    let ec = 2.0 * ((gt.cx - est.cx).abs() / gt.width as f64).max((gt.cy - est.cy).abs() / gt.height as f64);
    (ef, ec)
}

/// Per-image summary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalReport {
    /// Degrees.
    pub ae_mean: f64,
    /// Pixels.
    pub re_mean: f64,
    /// Degrees.
    pub hfov_err: f64,
    /// Degrees.
    pub vfov_err: f64,
    pub ef: f64,
    pub ec: f64,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str = "ae_mean_deg,re_mean_px,hfov_err_deg,vfov_err_deg,ef,ec";

    pub fn csv_record(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.ae_mean, self.re_mean, self.hfov_err, self.vfov_err, self.ef, self.ec
        )
    }
}

pub fn evaluate(gt: &CameraSpec, est: &CameraSpec, stride: u32) -> Result<EvalReport> {
    let ae = angular_error(gt, est, stride)?;
    let re = reproj_error(gt, est, stride)?;
    let (hg, vg) = fov_agnostic(gt)?;
    let (he, ve) = fov_agnostic(est)?;
    let (ef, ec) = edited_errors(gt, est);
    Ok(EvalReport {
        ae_mean: ae.mean,
        re_mean: re.mean,
        hfov_err: (hg - he).abs(),
        vfov_err: (vg - ve).abs(),
        ef,
        ec,
    })
}
