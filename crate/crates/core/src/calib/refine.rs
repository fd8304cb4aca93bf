use alloc::vec;
use alloc::vec::Vec;

use super::{ActiveBound, CalibrationResult, Correspondences, Warning};
use crate::camera::{unproject_jacobians, CameraSpec, Family, Pixel, Ray};
use crate::error::{Error, Result};
use crate::linalg::lstsq;

const ALPHA_MIN: f64 = 1e-6;
const ALPHA_MAX: f64 = 1.0 - 1e-6;
const BETA_MIN: f64 = 1e-6;
const FOCAL_MIN: f64 = 1e-6;
/// Relative parameter change below which Gauss-Newton stops early.
const CONVERGED_STEP: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct RefineOptions {
    pub iterations: usize,
    /// How many times a step that increases the cost is halved before the
    /// iteration gives up and keeps the current parameters.
    pub max_halvings: usize,
    /// Indices into `[fx, fy, cx, cy, dist...]` held constant.
    pub frozen: Vec<usize>,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            iterations: 5,
            max_halvings: 4,
            frozen: Vec::new(),
        }
    }
}

/// Gauss-Newton refinement with the default options (five iterations).
pub fn refine(spec0: &CameraSpec, corrs: &Correspondences) -> Result<CalibrationResult> {
    refine_with(spec0, corrs, &RefineOptions::default())
}

/// Observed rays with a fixed orthonormal basis of their tangent planes.
struct Targets {
    pixels: Vec<Pixel>,
    rays: Vec<Ray>,
    bases: Vec<[[f64; 3]; 2]>,
}

fn tangent_basis(q: &Ray) -> [[f64; 3]; 2] {
    let q = q.as_array();
    let e = if q[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = e[0] * q[0] + e[1] * q[1] + e[2] * q[2];
    let b1 = [e[0] - d * q[0], e[1] - d * q[1], e[2] - d * q[2]];
    let n = libm::sqrt(b1[0] * b1[0] + b1[1] * b1[1] + b1[2] * b1[2]);
    let b1 = [b1[0] / n, b1[1] / n, b1[2] / n];
    let b2 = [
        q[1] * b1[2] - q[2] * b1[1],
        q[2] * b1[0] - q[0] * b1[2],
        q[0] * b1[1] - q[1] * b1[0],
    ];
    [b1, b2]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Tangent residual `log_q(p)` in basis `B`, with `θ/sin θ` and the
/// coefficient `g = (sin θ - θ cos θ)/sin³θ` of its derivative.
fn log_residual(q: &Ray, basis: &[[f64; 3]; 2], p: &Ray) -> ([f64; 2], f64, f64) {
    let pa = p.as_array();
    let bp = [dot(&basis[0], &pa), dot(&basis[1], &pa)];
    let theta = q.angle_to(p);
    let (h, g) = if theta < 1e-4 {
        let t2 = theta * theta;
        (1.0 + t2 / 6.0, 1.0 / 3.0 + 2.0 * t2 / 15.0)
    } else {
        let (s, c) = (libm::sin(theta), libm::cos(theta));
        (theta / s, (s - theta * c) / (s * s * s))
    };
    ([h * bp[0], h * bp[1]], h, g)
}

fn cost(spec: &CameraSpec, t: &Targets) -> Option<f64> {
    let proj = spec.projector();
    let mut acc = 0.0;
    for ((px, q), b) in t.pixels.iter().zip(&t.rays).zip(&t.bases) {
        let p = proj.unproject(px).ok()?;
        let (r, _, _) = log_residual(q, b, &p);
        acc += r[0] * r[0] + r[1] * r[1];
    }
    let c = acc / t.pixels.len() as f64;
    c.is_finite().then_some(c)
}

/// Stacked residuals (2 per row) and their row-major Jacobian with respect
/// to `[fx, fy, cx, cy, dist...]`.
fn linearize(spec: &CameraSpec, t: &Targets) -> Option<(Vec<f64>, Vec<f64>)> {
    let np = spec.model.num_params();
    let jacs = unproject_jacobians(spec, &t.pixels);
    let mut res = Vec::with_capacity(2 * t.pixels.len());
    let mut jac = Vec::with_capacity(2 * t.pixels.len() * np);
    for ((jp, q), b) in jacs.into_iter().zip(&t.rays).zip(&t.bases) {
        let jp = jp.ok()?;
        let (r, h, g) = log_residual(q, b, &jp.ray);
        let bp = [r[0] / h, r[1] / h];
        let qa = q.as_array();
        res.extend_from_slice(&r);
        for k in 0..2 {
            for col in &jp.columns {
                jac.push(h * dot(&b[k], col) - g * bp[k] * dot(&qa, col));
            }
        }
    }
    Some((res, jac))
}

/// Residuals and row-major Jacobian at `spec` for every correspondence
/// (fails if any pixel cannot be unprojected).
pub fn residual_jacobian(spec: &CameraSpec, corrs: &Correspondences) -> Result<(Vec<f64>, Vec<f64>)> {
    let t = Targets {
        pixels: corrs.pixels.clone(),
        rays: corrs.rays.clone(),
        bases: corrs.rays.iter().map(tangent_basis).collect(),
    };
    linearize(spec, &t).ok_or(Error::NonInvertiblePixel)
}

/// Projects parameters back into their feasible box; returns the bounds that
/// were hit.
fn clamp(spec: &mut CameraSpec, hit: &mut Vec<ActiveBound>) {
    hit.clear();
    let mut lo = |v: &mut f64, min: f64, name: &'static str| {
        if !(*v >= min) {
            *v = min;
            hit.push(ActiveBound { param: name, value: min });
        }
    };
    lo(&mut spec.fx, FOCAL_MIN, "fx");
    lo(&mut spec.fy, FOCAL_MIN, "fy");
    match spec.model.family() {
        Family::Ucm => lo(&mut spec.dist[0], 0.0, "xi"),
        Family::Eucm => {
            lo(&mut spec.dist[0], ALPHA_MIN, "alpha");
            lo(&mut spec.dist[1], BETA_MIN, "beta");
            if spec.dist[0] > ALPHA_MAX {
                spec.dist[0] = ALPHA_MAX;
                hit.push(ActiveBound {
                    param: "alpha",
                    value: ALPHA_MAX,
                });
            }
        }
        _ => {}
    }
}

/// Gauss-Newton on the tangent-plane residuals `log_q(π⁻¹(x; κ))` between
/// observed rays `q` and the unprojections of their pixels.
///
/// Every iteration solves the linearized problem by QR; a step that raises
/// the cost is halved up to `max_halvings` times and dropped if it still
/// does, so the recorded costs never increase. Correspondences whose pixel
/// cannot be unprojected by `spec0` are dropped; trial steps that make any
/// remaining pixel non-invertible count as cost increases.
pub fn refine_with(spec0: &CameraSpec, corrs: &Correspondences, opts: &RefineOptions) -> Result<CalibrationResult> {
    let proj = spec0.projector();
    let keep: Vec<usize> = (0..corrs.len())
        .filter(|&i| proj.unproject(&corrs.pixels[i]).is_ok())
        .collect();
    if keep.is_empty() {
        return Err(Error::DegenerateGeometry("no correspondence is invertible"));
    }
    let mut warnings = Vec::new();
    if keep.len() < corrs.len() {
        warnings.push(Warning::DroppedRows(corrs.len() - keep.len()));
    }
    let t = Targets {
        pixels: keep.iter().map(|&i| corrs.pixels[i]).collect(),
        rays: keep.iter().map(|&i| corrs.rays[i]).collect(),
        bases: keep.iter().map(|&i| tangent_basis(&corrs.rays[i])).collect(),
    };

    let np = spec0.model.num_params();
    let mut spec = spec0.clone();
    let mut cur = cost(&spec, &t).ok_or(Error::NonInvertiblePixel)?;
    let mut costs = vec![cur];
    let mut bounds = Vec::new();
    let mut trial_bounds = Vec::new();
    for _ in 0..opts.iterations {
        let mut free: Vec<usize> = (0..np).filter(|j| !opts.frozen.contains(j)).collect();
        if spec.model.family() == Family::Eucm && spec.dist[0] <= ALPHA_MIN {
            // β has no effect at α = 0
            free.retain(|&j| j != 5);
        }
        if free.is_empty() || cur == 0.0 {
            costs.push(cur);
            continue;
        }
        let Some((res, jac)) = linearize(&spec, &t) else {
            costs.push(cur);
            continue;
        };
        let rows = res.len();
        let mut a = Vec::with_capacity(rows * free.len());
        for i in 0..rows {
            a.extend(free.iter().map(|&j| jac[i * np + j]));
        }
        let rhs: Vec<f64> = res.iter().map(|r| -r).collect();
        let Some(sol) = lstsq(rows, free.len(), &a, &rhs) else {
            warnings.push(Warning::SingularNormalMatrix);
            break;
        };
        let base = spec.params();
        let mut step = 1.0;
        let mut moved = None;
        for _ in 0..=opts.max_halvings {
            let mut p = base.clone();
            for (&j, d) in free.iter().zip(&sol.x) {
                p[j] += step * d;
            }
            let mut trial = spec.clone();
            trial.set_params(&p);
            clamp(&mut trial, &mut trial_bounds);
            if let Some(c) = cost(&trial, &t) {
                if c <= cur {
                    moved = Some(
                        base.iter()
                            .zip(trial.params())
                            .map(|(a, b)| (a - b).abs() / a.abs().max(1.0))
                            .fold(0.0, f64::max),
                    );
                    spec = trial;
                    cur = c;
                    bounds.clone_from(&trial_bounds);
                    break;
                }
            }
            step *= 0.5;
        }
        costs.push(cur);
        // A rejected step would be recomputed identically; a negligible one
        // means convergence. Either way the remaining iterations keep `cur`.
        if moved.is_none_or(|m| m <= CONVERGED_STEP) {
            costs.resize(opts.iterations + 1, cur);
            break;
        }
    }

    if !spec.is_valid() {
        warnings.push(Warning::InvalidSpec(spec.validate()));
    }
    Ok(CalibrationResult {
        spec,
        algebraic_spec: spec0.clone(),
        gn_costs: costs,
        ppoint_residual: None,
        active_bounds: bounds,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;
    use crate::camera::{fd_step, ModelId};
    use crate::fov::{exp_map, log_map};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn ground_truth_is_a_fixed_point() {
        for spec in sample_specs() {
            let c = grid_corrs(&spec, 24);
            let res = refine(&spec, &c).unwrap();
            assert!(max_rel_err(&res.spec, &spec) < 1e-10, "{}", res.spec);
            assert_eq!(res.gn_costs.len(), 6);
        }
    }

    #[test]
    fn recovers_perturbed_focal() {
        let spec = CameraSpec::new(ModelId::PINHOLE, [500.0, 520.0, 322.0, 236.0], vec![], 640, 480).unwrap();
        let c = grid_corrs(&spec, 32);
        let mut start = spec.clone();
        start.fx *= 1.05;
        start.fy *= 1.05;
        let res = refine(&start, &c).unwrap();
        assert!(max_rel_err(&res.spec, &spec) < 1e-8, "{}", res.spec);
    }

    #[test]
    fn costs_never_increase_with_noise() {
        let spec = kb4_reference();
        let clean = grid_corrs(&spec, 32);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 0.5f64.to_radians()).unwrap();
        let rays = clean
            .rays
            .iter()
            .map(|r| {
                let t = log_map(r).unwrap();
                exp_map([t[0] + noise.sample(&mut rng), t[1] + noise.sample(&mut rng)]).unwrap()
            })
            .collect();
        let noisy = Correspondences::new(clean.pixels.clone(), rays, spec.width, spec.height).unwrap();
        let res = refine(&spec, &noisy).unwrap();
        assert!(res.gn_costs.windows(2).all(|w| w[1] <= w[0]), "{:?}", res.gn_costs);
    }

    /// Residual Jacobian against central differences of the residual itself.
    #[test]
    fn residual_jacobian_matches_differences() {
        for spec in sample_specs() {
            // rays slightly off the model so the residuals are not zero
            let mut c = grid_corrs(&spec, 6);
            for (k, r) in c.rays.iter_mut().enumerate() {
                let t = log_map(r).unwrap();
                let d = 0.01 * ((k % 5) as f64 - 2.0);
                *r = exp_map([t[0] + d, t[1] - 0.5 * d]).unwrap();
            }
            let (r0, jac) = residual_jacobian(&spec, &c).unwrap();
            let np = spec.model.num_params();
            let p = spec.params();
            for j in 0..np {
                let h = fd_step(p[j]);
                let mut sp = spec.clone();
                let mut sm = spec.clone();
                let mut q = p.clone();
                q[j] = p[j] + h;
                sp.set_params(&q);
                q[j] = p[j] - h;
                sm.set_params(&q);
                let (rp, _) = residual_jacobian(&sp, &c).unwrap();
                let (rm, _) = residual_jacobian(&sm, &c).unwrap();
                for i in 0..r0.len() {
                    let num = (rp[i] - rm[i]) / (2.0 * h);
                    let ana = jac[i * np + j];
                    let scale = num.abs().max(ana.abs()).max(1e-6);
                    assert!((num - ana).abs() <= 1e-4 * scale, "{} param {j}: {ana} vs {num}", spec.model);
                }
            }
        }
    }

    #[test]
    fn frozen_parameters_stay_put() {
        let spec = CameraSpec::centered(ModelId::UCM, 616.1, vec![0.88], 640, 480).unwrap();
        let c = grid_corrs(&spec, 16);
        let mut start = spec.clone();
        start.dist[0] = 0.8;
        let opts = RefineOptions {
            frozen: vec![0, 1, 2, 3],
            ..RefineOptions::default()
        };
        let res = refine_with(&start, &c, &opts).unwrap();
        assert_eq!(res.spec.fx, 616.1);
        assert!((res.spec.dist[0] - 0.88).abs() < 1e-8);
    }
}
