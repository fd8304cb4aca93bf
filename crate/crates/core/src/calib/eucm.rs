use alloc::vec;
use alloc::vec::Vec;

use super::linear::fit_linear_with;
use super::{ActiveBound, Correspondences, RowGeom};
use crate::camera::{CameraSpec, ModelId, Pixel};
use crate::error::{Error, Result};
use crate::linalg::System;

/// Lower bound used when `β > 0` has to be enforced.
pub(crate) const BETA_MIN: f64 = 1e-6;
/// Fitted α at or below this is roundoff around the pinhole face.
const ALPHA_ZERO: f64 = 1e-9;
/// Focal correction steps after the proxy fit.
const FOCAL_PASSES: usize = 20;

/// EUCM intrinsics for known aspect `a` and principal point `c`.
///
/// The focal length comes from a Kannala-Brandt proxy fit (order 3). With
/// `f` known, the normalized radius `r` of every pixel gives a row
/// `r²R²·γ + 2rZ(rZ - R)·α = (R - rZ)²` in `(γ, α)` with `γ = α²β`.
/// The focal is then corrected until it agrees with the fitted `(α, β)`.
pub fn fit_eucm(corrs: &Correspondences, a: f64, c: Pixel) -> Result<CameraSpec> {
    fit_eucm_with(corrs, a, c, None, 3).map(|(s, _)| s)
}

struct Row {
    g: f64,
    al: f64,
    rhs: f64,
}

pub(crate) fn fit_eucm_with(
    corrs: &Correspondences,
    a: f64,
    c: Pixel,
    fixed_f: Option<f64>,
    proxy_order: u8,
) -> Result<(CameraSpec, Vec<ActiveBound>)> {
    let mut f = match fixed_f {
        Some(f) if f > 0.0 => f,
        Some(_) => return Err(Error::InvalidFocal),
        None => fit_linear_with(ModelId::kb(proxy_order)?, corrs, a, c, None)?.0.fx,
    };
    let (mut alpha, mut beta, mut bounds) = solve_alpha_beta(corrs, a, c, f)?;
    if fixed_f.is_none() {
        // The proxy focal is close but not exact. With (α, β) fixed the
        // EUCM rows are linear in f; the map f -> f(α(f), β(f)) has the
        // true focal as a fixed point, found with secant steps.
        let mut prev: Option<(f64, f64)> = None;
        for _ in 0..FOCAL_PASSES {
            let Some(t) = focal_given(corrs, a, c, alpha, beta) else { break };
            if alpha == 0.0 {
                // pinhole face: f is exact and the (γ, α) rows vanish
                f = t;
                break;
            }
            let g = t - f;
            if g.abs() <= 1e-13 * f {
                break;
            }
            let next = match prev {
                Some((fp, gp)) if g != gp => f - g * (f - fp) / (g - gp),
                _ => t,
            };
            if !(next > 0.0 && next.is_finite()) {
                break;
            }
            let Ok(ab) = solve_alpha_beta(corrs, a, c, next) else { break };
            prev = Some((f, g));
            f = next;
            (alpha, beta, bounds) = ab;
        }
    }
    let spec = CameraSpec::new(ModelId::EUCM, [f, a * f, c.u, c.v], vec![alpha, beta], corrs.width, corrs.height)?;
    Ok((spec, bounds))
}

/// `f` from `R_a·f = r_c·(α√(βR² + Z²) + (1 - α)Z)` for fixed `(α, β)`.
fn focal_given(corrs: &Correspondences, a: f64, c: Pixel, alpha: f64, beta: f64) -> Option<f64> {
    let f = solve_1d(corrs.iter().map(|(px, ray)| {
        let g = RowGeom::new(px, ray, a, c);
        let den = alpha * libm::sqrt(beta * g.big_r * g.big_r + g.z * g.z) + (1.0 - alpha) * g.z;
        (g.r_a, g.r_c * den)
    }))?;
    (f > 0.0 && f.is_finite()).then_some(f)
}

fn solve_alpha_beta(corrs: &Correspondences, a: f64, c: Pixel, f: f64) -> Result<(f64, f64, Vec<ActiveBound>)> {
    let rows: Vec<Row> = corrs
        .iter()
        .map(|(px, ray)| {
            let r = libm::hypot((px.u - c.u) / f, (px.v - c.v) / (a * f));
            let big_r = libm::hypot(ray.x, ray.y);
            let z = ray.z;
            Row {
                g: r * r * big_r * big_r,
                al: 2.0 * r * z * (r * z - big_r),
                rhs: (big_r - r * z) * (big_r - r * z),
            }
        })
        .collect();

    let degenerate = || Error::DegenerateGeometry("rank-deficient EUCM system");
    let mut bounds = Vec::new();
    let mut sys = System::new(2);
    for r in &rows {
        sys.push(&[r.g, r.al], r.rhs);
    }
    let (alpha, beta) = match sys.solve() {
        Some(sol) => {
            let (gamma, alpha) = (sol.x[0], sol.x[1]);
            if alpha <= ALPHA_ZERO {
                // α = 0 is the pinhole model, where β has no effect
                bounds.push(ActiveBound {
                    param: "alpha",
                    value: 0.0,
                });
                (0.0, 1.0)
            } else if alpha > 1.0 {
                bounds.push(ActiveBound {
                    param: "alpha",
                    value: 1.0,
                });
                let beta = solve_1d(rows.iter().map(|r| (r.g, r.rhs - r.al))).ok_or_else(degenerate)?;
                if !(beta > 0.0) {
                    return Err(Error::BoundInfeasible);
                }
                (1.0, beta)
            } else if gamma <= 0.0 {
                bounds.push(ActiveBound {
                    param: "beta",
                    value: BETA_MIN,
                });
                // with β at its floor the γ column is negligible
                let alpha = solve_1d(rows.iter().map(|r| (r.al, r.rhs))).ok_or_else(degenerate)?;
                if !(0.0..=1.0).contains(&alpha) {
                    return Err(Error::BoundInfeasible);
                }
                (alpha, BETA_MIN)
            } else {
                (alpha, gamma / (alpha * alpha))
            }
        }
        None => {
            // pinhole-like data: all right-hand sides vanish together with
            // the α column; fall back to the α = 0 face
            let rhs_max = rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
            let g_max = rows.iter().map(|r| r.g.abs()).fold(0.0, f64::max);
            if rhs_max <= 1e-12 * g_max.max(1e-300) {
                bounds.push(ActiveBound {
                    param: "alpha",
                    value: 0.0,
                });
                (0.0, 1.0)
            } else {
                return Err(degenerate());
            }
        }
    };
    Ok((alpha, beta, bounds))
}

/// Least squares for a single unknown `x` from rows `col·x = rhs`.
fn solve_1d(rows: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    let (num, den) = rows.fold((0.0, 0.0), |(n, d), (a, b)| (n + a * b, d + a * a));
    (den > 0.0).then(|| num / den)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;
    use crate::metrics::reproj_error;

    #[test]
    fn real_lens_parameters() {
        let spec = CameraSpec::centered(ModelId::EUCM, 300.0, vec![0.6, 1.19], 640, 480).unwrap();
        let got = fit_eucm(&grid_corrs(&spec, 64), 1.0, spec.principal_point()).unwrap();
        assert!(rel(got.fx, 300.0) < 1e-3, "{got}");
        assert!((got.dist[0] - 0.6).abs() < 1e-4 && (got.dist[1] - 1.19).abs() < 1e-4, "{got}");
    }

    #[test]
    fn alpha_half_beta_one() {
        let spec = CameraSpec::centered(ModelId::EUCM, 300.0, vec![0.5, 1.0], 640, 480).unwrap();
        let c = grid_corrs(&spec, 64);
        let (got, _) = fit_eucm_with(&c, 1.0, spec.principal_point(), Some(300.0), 3).unwrap();
        assert!((got.dist[0] - 0.5).abs() < 1e-6 && (got.dist[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn pinhole_data_lands_on_alpha_zero_face() {
        let spec = CameraSpec::centered(ModelId::PINHOLE, 400.0, vec![], 640, 480).unwrap();
        let (got, bounds) = fit_eucm_with(&grid_corrs(&spec, 48), 1.0, spec.principal_point(), None, 3).unwrap();
        assert!(got.dist[0].abs() < 1e-3 && got.dist[1] > 0.0, "{got}");
        assert!(reproj_error(&spec, &got, 4).unwrap().mean < 0.1);
        assert!(bounds.is_empty() || bounds[0].param == "alpha", "{got} {bounds:?}");
    }
}
