//! Derivatives of the unprojection `π⁻¹(x; κ)` with respect to the
//! intrinsics `κ = [fx, fy, cx, cy, dist...]`.
//!
//! All families have analytic derivatives. Brown-Conrady and Kannala-Brandt
//! unprojections are Newton-inverted; their derivatives follow from the
//! implicit function theorem at the solved radius or angle. Central
//! differences ([`unproject_jacobian_fd`]) serve as a check.

use alloc::vec;
use alloc::vec::Vec;

use super::project::ray_direction;
use super::{CameraSpec, Family, Pixel, Projector, Ray};
use crate::error::{Error, Result};
use crate::numeric::{one_plus_series, one_plus_series_deriv};

/// Unit ray and its derivative with respect to every intrinsic parameter
/// (one 3-vector column per parameter).
#[derive(Clone, Debug, PartialEq)]
pub struct UnprojectJacobian {
    pub ray: Ray,
    pub columns: Vec<[f64; 3]>,
}

impl Projector<'_> {
    /// Analytic unprojection Jacobian.
    pub fn unproject_jacobian(&self, px: &Pixel) -> Result<UnprojectJacobian> {
        let s = self.spec();
        let mx = (px.u - s.cx) / s.fx;
        let my = (px.v - s.cy) / s.fy;
        let h = ray_direction(s.model, &s.dist, self.domain(), mx, my)?;
        let (dh_dm, dh_dd) = direction_derivatives(s.model.family(), &s.dist, mx, my, &h);

        let norm = libm::sqrt(h[0] * h[0] + h[1] * h[1] + h[2] * h[2]);
        let p = [h[0] / norm, h[1] / norm, h[2] / norm];
        // d(h/|h|) = (I - p pᵀ) dh / |h|
        let normalize = |dh: [f64; 3]| {
            let pd = p[0] * dh[0] + p[1] * dh[1] + p[2] * dh[2];
            [
                (dh[0] - p[0] * pd) / norm,
                (dh[1] - p[1] * pd) / norm,
                (dh[2] - p[2] * pd) / norm,
            ]
        };
        let scale = |v: [f64; 3], k: f64| [v[0] * k, v[1] * k, v[2] * k];

        let mut columns = Vec::with_capacity(4 + s.dist.len());
        columns.push(normalize(scale(dh_dm[0], -mx / s.fx)));
        columns.push(normalize(scale(dh_dm[1], -my / s.fy)));
        columns.push(normalize(scale(dh_dm[0], -1.0 / s.fx)));
        columns.push(normalize(scale(dh_dm[1], -1.0 / s.fy)));
        columns.extend(dh_dd.into_iter().map(normalize));
        Ok(UnprojectJacobian {
            ray: Ray {
                x: p[0],
                y: p[1],
                z: p[2],
            },
            columns,
        })
    }
}

/// `∂h/∂(m_x, m_y)` and `∂h/∂dist` for the unnormalized direction `h`
/// (already evaluated at `(m_x, m_y)`).
fn direction_derivatives(
    family: Family,
    dist: &[f64],
    mx: f64,
    my: f64,
    h: &[f64; 3],
) -> ([[f64; 3]; 2], Vec<[f64; 3]>) {
    let s = mx * mx + my * my;
    match family {
        Family::Pinhole => ([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], Vec::new()),
        Family::Division => {
            let dpsi = one_plus_series_deriv(dist, s);
            let cols = (1..=dist.len()).map(|n| [0.0, 0.0, libm::pow(s, n as f64)]).collect();
            (
                [[1.0, 0.0, 2.0 * mx * dpsi], [0.0, 1.0, 2.0 * my * dpsi]],
                cols,
            )
        }
        Family::Ucm => {
            let xi = dist[0];
            let q = libm::sqrt(1.0 + (1.0 - xi * xi) * s);
            let f = (xi + q) / (1.0 + s);
            let df_ds = ((1.0 - xi * xi) / (2.0 * q) * (1.0 + s) - (xi + q)) / ((1.0 + s) * (1.0 + s));
            let df_dxi = (1.0 - xi * s / q) / (1.0 + s);
            let (gx, gy) = (2.0 * mx * df_ds, 2.0 * my * df_ds);
            (
                [[f + mx * gx, my * gx, gx], [mx * gy, f + my * gy, gy]],
                vec![[mx * df_dxi, my * df_dxi, df_dxi - 1.0]],
            )
        }
        Family::Eucm => {
            let (a, b) = (dist[0], dist[1]);
            let q = libm::sqrt(1.0 - (2.0 * a - 1.0) * b * s);
            let num = 1.0 - b * a * a * s;
            let den = a * q + 1.0 - a;
            let quot = |dn: f64, dd: f64| (dn * den - num * dd) / (den * den);

            let dq_ds = -(2.0 * a - 1.0) * b / (2.0 * q);
            let dmz_ds = quot(-b * a * a, a * dq_ds);
            let dq_da = -b * s / q;
            let dmz_da = quot(-2.0 * a * b * s, q + a * dq_da - 1.0);
            let dq_db = -(2.0 * a - 1.0) * s / (2.0 * q);
            let dmz_db = quot(-a * a * s, a * dq_db);
            (
                [[1.0, 0.0, 2.0 * mx * dmz_ds], [0.0, 1.0, 2.0 * my * dmz_ds]],
                vec![[0.0, 0.0, dmz_da], [0.0, 0.0, dmz_db]],
            )
        }
        Family::BrownConrady => {
            // h = [m ρ/r, 1] with ρ P(ρ²) = r
            let rho = libm::hypot(h[0], h[1]);
            let (d, dx_dk) = implicit(dist, rho);
            let r = libm::sqrt(s);
            if r == 0.0 {
                return ([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], vec![[0.0; 3]; dist.len()]);
            }
            let q = rho / r;
            let dq_dr = (1.0 / d - q) / r;
            let (ux, uy) = (mx / r, my / r);
            (
                [
                    [q + mx * dq_dr * ux, my * dq_dr * ux, 0.0],
                    [mx * dq_dr * uy, q + my * dq_dr * uy, 0.0],
                ],
                dx_dk.into_iter().map(|dk| [ux * dk, uy * dk, 0.0]).collect(),
            )
        }
        Family::KannalaBrandt => {
            // h = [sin θ m/r, cos θ] with θ P(θ²) = r
            let theta = libm::atan2(libm::hypot(h[0], h[1]), h[2]);
            let (d, dx_dk) = implicit(dist, theta);
            let r = libm::sqrt(s);
            if r == 0.0 {
                return ([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], vec![[0.0; 3]; dist.len()]);
            }
            let (st, ct) = (libm::sin(theta), libm::cos(theta));
            let q = st / r;
            let dq_dr = (ct / d - q) / r;
            let (ux, uy) = (mx / r, my / r);
            let dz_dr = -st / d;
            (
                [
                    [q + mx * dq_dr * ux, my * dq_dr * ux, dz_dr * ux],
                    [mx * dq_dr * uy, q + my * dq_dr * uy, dz_dr * uy],
                ],
                dx_dk
                    .into_iter()
                    .map(|dk| [ct * ux * dk, ct * uy * dk, -st * dk])
                    .collect(),
            )
        }
    }
}

/// For the root `x` of `x P(x²) = r`: `D = d(x P(x²))/dx` and `∂x/∂k_n =
/// -x^(2n+1)/D` (so `∂x/∂r = 1/D`).
fn implicit(dist: &[f64], x: f64) -> (f64, Vec<f64>) {
    let s = x * x;
    let d = one_plus_series(dist, s) + 2.0 * s * one_plus_series_deriv(dist, s);
    let mut pow = x;
    let dk = dist
        .iter()
        .map(|_| {
            pow *= s;
            -pow / d
        })
        .collect();
    (d, dk)
}

/// Central-difference step for a parameter value.
pub fn fd_step(value: f64) -> f64 {
    1e-6 * value.abs().max(1.0)
}

/// Unprojection Jacobians by central differences, evaluated for a batch of
/// pixels (the perturbed specs are built once per parameter).
pub fn unproject_jacobian_fd(spec: &CameraSpec, pixels: &[Pixel]) -> Vec<Result<UnprojectJacobian>> {
    let base = spec.projector();
    let mut out: Vec<Result<UnprojectJacobian>> = pixels
        .iter()
        .map(|px| {
            base.unproject(px).map(|ray| UnprojectJacobian {
                ray,
                columns: Vec::with_capacity(spec.model.num_params()),
            })
        })
        .collect();
    let params = spec.params();
    for j in 0..params.len() {
        let h = fd_step(params[j]);
        let mut plus = spec.clone();
        let mut minus = spec.clone();
        let mut p = params.clone();
        p[j] = params[j] + h;
        plus.set_params(&p);
        p[j] = params[j] - h;
        minus.set_params(&p);
        let (pp, pm) = (plus.projector(), minus.projector());
        for (slot, px) in out.iter_mut().zip(pixels) {
            let Ok(jac) = slot else { continue };
            match (pp.unproject(px), pm.unproject(px)) {
                (Ok(a), Ok(b)) => jac.columns.push([
                    (a.x - b.x) / (2.0 * h),
                    (a.y - b.y) / (2.0 * h),
                    (a.z - b.z) / (2.0 * h),
                ]),
                _ => *slot = Err(Error::NonInvertiblePixel),
            }
        }
    }
    out
}

/// Analytic unprojection Jacobians for a batch of pixels.
pub fn unproject_jacobians(spec: &CameraSpec, pixels: &[Pixel]) -> Vec<Result<UnprojectJacobian>> {
    let proj = spec.projector();
    pixels.iter().map(|px| proj.unproject_jacobian(px)).collect()
}
