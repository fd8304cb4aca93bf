use alloc::vec;
use alloc::vec::Vec;

use super::{eucm, ActiveBound, Correspondences, RowGeom};
use crate::camera::{CameraSpec, Family, ModelId, Pixel};
use crate::error::{Error, Result};
use crate::linalg::System;

/// Rows whose ray is this close to (or behind) the image plane are dropped
/// for the pinhole and Brown-Conrady constraints.
const MIN_Z: f64 = 1e-6;

/// Focal length and distortion of `model` for known aspect `a` and
/// principal point `c`.
///
/// Each correspondence contributes one row, linear in a reparameterization
/// of the unknowns:
///
/// | family   | unknowns             | row                                        |
/// |----------|----------------------|--------------------------------------------|
/// | pinhole  | `f`                  | `R_a·f = Z·r_c`                            |
/// | radial   | `1/f, k_n`           | `r_c·Z/f - R_a·Σ k_n (R/Z)^2n = R_a`       |
/// | kb       | `1/f, k_n`           | `R·r_c/f - R_a·Σ k_n θ^(2n+1) = R_a·θ`     |
/// | ucm      | `f, ξ`               | `R_a·f - r_c·d·ξ = r_c·Z`                  |
/// | division | `f, k'_n`            | `R_a·(f + Σ k'_n r_ca^2n) = Z·r_c`         |
///
/// with `k_n = k'_n·f^(2n-1)` for the division model. EUCM goes through
/// [`super::fit_eucm`].
pub fn fit_linear(model: ModelId, corrs: &Correspondences, a: f64, c: Pixel) -> Result<CameraSpec> {
    match model.family() {
        Family::Eucm => eucm::fit_eucm(corrs, a, c),
        _ => fit_linear_with(model, corrs, a, c, None).map(|(s, _)| s),
    }
}

/// Like [`fit_linear`] with the focal length held at `f`: only the
/// distortion unknowns are solved for.
pub fn fit_distortion(model: ModelId, corrs: &Correspondences, f: f64, a: f64, c: Pixel) -> Result<CameraSpec> {
    match model.family() {
        Family::Eucm => eucm::fit_eucm_with(corrs, a, c, Some(f), 3).map(|(s, _)| s),
        _ => fit_linear_with(model, corrs, a, c, Some(f)).map(|(s, _)| s),
    }
}

/// One linear row in the full unknown vector `[lead, dist...]`.
fn row(model: ModelId, g: &RowGeom) -> Option<(Vec<f64>, f64)> {
    let n = model.num_dist();
    match model.family() {
        Family::Pinhole => (g.z > MIN_Z).then(|| (vec![g.r_a], g.z * g.r_c)),
        Family::BrownConrady => {
            if g.z <= MIN_Z {
                return None;
            }
            let rho2 = (g.big_r / g.z) * (g.big_r / g.z);
            let mut r = vec![g.r_c * g.z];
            let mut p = 1.0;
            for _ in 0..n {
                p *= rho2;
                r.push(-g.r_a * p);
            }
            Some((r, g.r_a))
        }
        Family::KannalaBrandt => {
            let t = g.theta();
            let mut r = vec![g.big_r * g.r_c];
            let mut p = t;
            for _ in 0..n {
                p *= t * t;
                r.push(-g.r_a * p);
            }
            Some((r, g.r_a * t))
        }
        Family::Ucm => Some((vec![g.r_a, -g.r_c * g.d()], g.r_c * g.z)),
        Family::Division => {
            let s = g.r_ca * g.r_ca;
            let mut r = vec![g.r_a];
            let mut p = 1.0;
            for _ in 0..n {
                p *= s;
                r.push(g.r_a * p);
            }
            Some((r, g.z * g.r_c))
        }
        Family::Eucm => None,
    }
}

/// Whether the leading unknown is `1/f` rather than `f`.
fn lead_is_inverse(model: ModelId) -> bool {
    matches!(model.family(), Family::BrownConrady | Family::KannalaBrandt)
}

fn solve_rows(rows: &[(Vec<f64>, f64)], cols: &[usize], fixed: &[(usize, f64)]) -> Result<Vec<f64>> {
    let mut sys = System::new(cols.len());
    let mut buf = Vec::with_capacity(cols.len());
    for (r, b) in rows {
        buf.clear();
        buf.extend(cols.iter().map(|&j| r[j]));
        let rhs = b - fixed.iter().map(|&(j, v)| r[j] * v).sum::<f64>();
        sys.push(&buf, rhs);
    }
    sys.solve()
        .map(|s| s.x)
        .ok_or(Error::DegenerateGeometry("rank-deficient linear system"))
}

pub(crate) fn fit_linear_with(
    model: ModelId,
    corrs: &Correspondences,
    a: f64,
    c: Pixel,
    fixed_f: Option<f64>,
) -> Result<(CameraSpec, Vec<ActiveBound>)> {
    debug_assert!(model.family() != Family::Eucm);
    let rows: Vec<_> = corrs
        .iter()
        .filter_map(|(px, ray)| row(model, &RowGeom::new(px, ray, a, c)))
        .collect();
    let n = model.num_dist();
    let inv = lead_is_inverse(model);
    let mut fixed: Vec<(usize, f64)> = Vec::new();
    if let Some(f) = fixed_f {
        if !(f > 0.0) {
            return Err(Error::InvalidFocal);
        }
        fixed.push((0, if inv { 1.0 / f } else { f }));
    }
    let mut free: Vec<usize> = (0..=n).filter(|j| fixed.iter().all(|(k, _)| k != j)).collect();
    let mut x = vec![0.0; n + 1];
    let assign = |x: &mut Vec<f64>, free: &[usize], fixed: &[(usize, f64)], sol: &[f64]| {
        for (&j, &v) in free.iter().zip(sol) {
            x[j] = v;
        }
        for &(j, v) in fixed {
            x[j] = v;
        }
    };
    if free.is_empty() {
        assign(&mut x, &free, &fixed, &[]);
    } else {
        let sol = solve_rows(&rows, &free, &fixed)?;
        assign(&mut x, &free, &fixed, &sol);
    }

    let mut bounds = Vec::new();
    if model.family() == Family::Ucm && x[1] < 0.0 {
        fixed.push((1, 0.0));
        free.retain(|&j| j != 1);
        bounds.push(ActiveBound {
            param: "xi",
            value: 0.0,
        });
        let sol = if free.is_empty() {
            Vec::new()
        } else {
            solve_rows(&rows, &free, &fixed)?
        };
        assign(&mut x, &free, &fixed, &sol);
    }

    // a held focal is reported exactly, not as a round-tripped reciprocal
    let f = fixed_f.unwrap_or(if inv { 1.0 / x[0] } else { x[0] });
    if !(f > 0.0) || !f.is_finite() {
        return Err(Error::InvalidFocal);
    }
    let mut dist = x[1..].to_vec();
    if model.family() == Family::Division {
        for (i, k) in dist.iter_mut().enumerate() {
            *k *= libm::pow(f, (2 * i + 1) as f64);
        }
    }
    let spec = CameraSpec::new(model, [f, a * f, c.u, c.v], dist, corrs.width, corrs.height)?;
    Ok((spec, bounds))
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;

    fn fit(spec: &CameraSpec, model: ModelId) -> CameraSpec {
        let c = grid_corrs(spec, 64);
        fit_linear(model, &c, spec.aspect(), spec.principal_point()).unwrap()
    }

    #[test]
    fn pinhole_exact() {
        let spec = CameraSpec::new(ModelId::PINHOLE, [512.0, 540.0, 300.0, 250.0], vec![], 640, 480).unwrap();
        assert!(max_rel_err(&fit(&spec, spec.model), &spec) < 1e-9);
    }

    #[test]
    fn division_undoes_reparameterization() {
        let spec = CameraSpec::centered(ModelId::division(2).unwrap(), 500.0, vec![-0.2, 0.05], 640, 480).unwrap();
        let got = fit(&spec, spec.model);
        assert!(max_rel_err(&got, &spec) < 1e-6, "{got}");
        // refitting the fitted spec returns the same k_n
        let again = fit(&got, got.model);
        for (x, y) in again.dist.iter().zip(&got.dist) {
            assert!((x - y).abs() < 1e-8 * y.abs().max(1.0));
        }
    }

    #[test]
    fn ucm_reference_parameters() {
        let spec = CameraSpec::centered(ModelId::UCM, 616.1, vec![0.88], 1752, 1168).unwrap();
        assert!(max_rel_err(&fit(&spec, spec.model), &spec) < 1e-6);
    }

    #[test]
    fn kb_and_radial_exact() {
        let kb = kb4_reference();
        assert!(max_rel_err(&fit(&kb, kb.model), &kb) < 1e-6);
        let bc = CameraSpec::new(
            ModelId::radial(3).unwrap(),
            [420.0, 430.0, 318.0, 245.0],
            vec![-0.12, 0.02, -0.001],
            640,
            480,
        )
        .unwrap();
        assert!(max_rel_err(&fit(&bc, bc.model), &bc) < 1e-6);
    }

    #[test]
    fn ucm_clamps_negative_xi() {
        // a barrel-free (pincushion) pinhole-like field pushes ξ below zero
        let spec = CameraSpec::centered(ModelId::radial(1).unwrap(), 300.0, vec![0.2], 640, 480).unwrap();
        let c = grid_corrs(&spec, 32);
        let (got, bounds) = fit_linear_with(ModelId::UCM, &c, 1.0, spec.principal_point(), None).unwrap();
        assert_eq!(got.dist[0], 0.0);
        assert_eq!(bounds, vec![ActiveBound { param: "xi", value: 0.0 }]);
        assert!(got.fx > 0.0);
    }

    #[test]
    fn fixed_focal_solves_distortion_only() {
        let spec = CameraSpec::centered(ModelId::UCM, 616.1, vec![0.88], 1752, 1168).unwrap();
        let c = grid_corrs(&spec, 32);
        let got = fit_distortion(ModelId::UCM, &c, 616.1, 1.0, spec.principal_point()).unwrap();
        assert_eq!(got.fx, 616.1);
        assert!((got.dist[0] - 0.88).abs() < 1e-9);
    }
}
