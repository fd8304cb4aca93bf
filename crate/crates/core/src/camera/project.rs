use super::{CameraSpec, Domain, Family, ModelId, Pixel, Ray};
use crate::error::{Error, Result};
use crate::numeric::{one_plus_series, one_plus_series_deriv, solve_increasing};

/// A spec with its domain precomputed, for repeated projection/unprojection.
#[derive(Clone, Copy, Debug)]
pub struct Projector<'a> {
    spec: &'a CameraSpec,
    domain: Domain,
}

impl<'a> Projector<'a> {
    pub fn new(spec: &'a CameraSpec) -> Projector<'a> {
        Projector {
            spec,
            domain: spec.domain(),
        }
    }

    pub fn spec(&self) -> &'a CameraSpec {
        self.spec
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Forward projection of a unit ray to pixel coordinates.
    pub fn project(&self, ray: &Ray) -> Result<Pixel> {
        let (mx, my) = normalized_coords(self.spec.model, &self.spec.dist, &self.domain, ray)?;
        Ok(Pixel {
            u: self.spec.fx * mx + self.spec.cx,
            v: self.spec.fy * my + self.spec.cy,
        })
    }

    /// Unit ray through a pixel.
    pub fn unproject(&self, px: &Pixel) -> Result<Ray> {
        let s = self.spec;
        let mx = (px.u - s.cx) / s.fx;
        let my = (px.v - s.cy) / s.fy;
        let h = ray_direction(s.model, &s.dist, &self.domain, mx, my)?;
        Ray::normalized(h[0], h[1], h[2]).ok_or(Error::NonInvertiblePixel)
    }
}

/// Normalized image coordinates `(m_x, m_y)` of a ray, i.e. projection with
/// unit focal and zero principal point.
pub(crate) fn normalized_coords(
    model: ModelId,
    dist: &[f64],
    dom: &Domain,
    ray: &Ray,
) -> Result<(f64, f64)> {
    let (x, y, z) = (ray.x, ray.y, ray.z);
    let big_r = libm::hypot(x, y);
    let theta = libm::atan2(big_r, z);
    if !(theta < dom.theta_max) || !theta.is_finite() {
        return Err(Error::RayOutsideDomain);
    }
    if big_r == 0.0 {
        return Ok((0.0, 0.0));
    }
    let phi = match model.family() {
        Family::Pinhole => 1.0 / z,
        Family::BrownConrady => {
            let rho = big_r / z;
            one_plus_series(dist, rho * rho) / z
        }
        Family::KannalaBrandt => theta * one_plus_series(dist, theta * theta) / big_r,
        Family::Ucm => {
            let d = libm::hypot(big_r, z);
            1.0 / (dist[0] * d + z)
        }
        Family::Eucm => {
            let (alpha, beta) = (dist[0], dist[1]);
            1.0 / (alpha * libm::sqrt(beta * big_r * big_r + z * z) + (1.0 - alpha) * z)
        }
        Family::Division => {
            let r = division_radius(dist, dom, theta)?;
            r / big_r
        }
    };
    if !(phi > 0.0) || !phi.is_finite() {
        return Err(Error::RayOutsideDomain);
    }
    Ok((phi * x, phi * y))
}

/// Normalized radius at which the division model unprojects to polar angle
/// `theta`: solves `atan2(r, ψ(r)) = θ` by Newton from the pinhole radius.
fn division_radius(dist: &[f64], dom: &Domain, theta: f64) -> Result<f64> {
    let g = |r: f64| {
        let s = r * r;
        let psi = one_plus_series(dist, s);
        let dpsi = 2.0 * r * one_plus_series_deriv(dist, s);
        let angle = libm::atan2(r, psi);
        (angle - theta, (psi - r * dpsi) / (s + psi * psi))
    };
    let x0 = if theta < 1.4 { libm::tan(theta) } else { 1.0 };
    solve_increasing(g, 0.0, dom.arg_max, x0).ok_or(Error::RayOutsideDomain)
}

/// Unnormalized ray direction `h(m_x, m_y)` for normalized image coordinates.
pub(crate) fn ray_direction(
    model: ModelId,
    dist: &[f64],
    dom: &Domain,
    mx: f64,
    my: f64,
) -> Result<[f64; 3]> {
    let r = libm::hypot(mx, my);
    if !(r < dom.radius_max) || !r.is_finite() {
        return Err(Error::NonInvertiblePixel);
    }
    let h = match model.family() {
        Family::Pinhole => [mx, my, 1.0],
        Family::BrownConrady => {
            if r == 0.0 {
                return Ok([0.0, 0.0, 1.0]);
            }
            let g = |rho: f64| {
                let s = rho * rho;
                (
                    rho * one_plus_series(dist, s) - r,
                    one_plus_series(dist, s) + 2.0 * s * one_plus_series_deriv(dist, s),
                )
            };
            let rho = solve_increasing(g, 0.0, dom.arg_max, r).ok_or(Error::NonInvertiblePixel)?;
            [mx * rho / r, my * rho / r, 1.0]
        }
        Family::KannalaBrandt => {
            if r == 0.0 {
                return Ok([0.0, 0.0, 1.0]);
            }
            let g = |t: f64| {
                let s = t * t;
                (
                    t * one_plus_series(dist, s) - r,
                    one_plus_series(dist, s) + 2.0 * s * one_plus_series_deriv(dist, s),
                )
            };
            let theta = solve_increasing(g, 0.0, dom.arg_max, r).ok_or(Error::NonInvertiblePixel)?;
            let st = libm::sin(theta);
            [st * mx / r, st * my / r, libm::cos(theta)]
        }
        Family::Ucm => {
            let xi = dist[0];
            let r2 = r * r;
            let disc = 1.0 + (1.0 - xi * xi) * r2;
            if disc < 0.0 {
                return Err(Error::NonInvertiblePixel);
            }
            let fac = (xi + libm::sqrt(disc)) / (1.0 + r2);
            [fac * mx, fac * my, fac - xi]
        }
        Family::Eucm => {
            let (alpha, beta) = (dist[0], dist[1]);
            let r2 = r * r;
            let disc = 1.0 - (2.0 * alpha - 1.0) * beta * r2;
            if disc < 0.0 {
                return Err(Error::NonInvertiblePixel);
            }
            let mz = (1.0 - beta * alpha * alpha * r2) / (alpha * libm::sqrt(disc) + 1.0 - alpha);
            [mx, my, mz]
        }
        Family::Division => [mx, my, one_plus_series(dist, r * r)],
    };
    if h.iter().all(|c| c.is_finite()) {
        Ok(h)
    } else {
        Err(Error::NonInvertiblePixel)
    }
}

/// Normalized radius reached at polar angle `theta`.
pub(crate) fn radial_profile(model: ModelId, dist: &[f64], dom: &Domain, theta: f64) -> Result<f64> {
    let (mx, _) = normalized_coords(model, dist, dom, &Ray::from_polar(theta, 0.0))?;
    Ok(mx)
}
