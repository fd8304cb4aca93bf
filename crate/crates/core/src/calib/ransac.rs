use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{calibrate_corrs, fit_algebraic, CalibOptions, CalibrationResult, Correspondences};
use crate::camera::{Family, ModelId};
use crate::error::{Error, Result};
use crate::fov::FovField;

/// Hypotheses whose inlier ratio stays below this fail with `NoConsensus`.
const MIN_INLIER_RATIO: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct RansacOptions {
    pub iters: usize,
    /// Inlier threshold on the angle between observed and model rays (rad).
    pub thresh: f64,
    pub seed: u64,
    pub calib: CalibOptions,
}

impl Default for RansacOptions {
    fn default() -> Self {
        RansacOptions {
            iters: 200,
            thresh: 0.5f64.to_radians(),
            seed: 0,
            calib: CalibOptions::default(),
        }
    }
}

/// Unknowns of the second linear stage.
fn stage2_unknowns(model: ModelId, opts: &CalibOptions) -> usize {
    match model.family() {
        Family::Eucm => 1 + opts.eucm_proxy_order as usize,
        _ => 1 + model.num_dist(),
    }
}

/// Minimal sample size: three rows for `(a, a·cx, cy)` plus the unknowns of
/// the model-specific stage.
pub fn minimal_sample(model: ModelId, opts: &CalibOptions) -> usize {
    3 + stage2_unknowns(model, opts)
}

/// RANSAC over minimal samples of the field's correspondences.
///
/// Each hypothesis runs both linear stages on its sample and is scored by
/// the number of cells whose observed ray lies within `thresh` of the
/// hypothesis' unprojection. The best inlier set is then fitted with the
/// full pipeline (linear stages and refinement). Deterministic in `seed`.
pub fn calibrate_ransac(
    field: &FovField,
    model: ModelId,
    iters: usize,
    thresh: f64,
    seed: u64,
) -> Result<CalibrationResult> {
    let opts = RansacOptions {
        iters,
        thresh,
        seed,
        ..RansacOptions::default()
    };
    let corrs = Correspondences::from_field(field, 1)?;
    ransac_corrs(model, &corrs, &opts)
}

/// [`calibrate_ransac`] on explicit correspondences.
pub fn ransac_corrs(model: ModelId, corrs: &Correspondences, opts: &RansacOptions) -> Result<CalibrationResult> {
    let n = corrs.len();
    let k = minimal_sample(model, &opts.calib);
    if n < k {
        return Err(Error::DegenerateGeometry("fewer correspondences than the minimal sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Vec<usize> = Vec::new();
    for _ in 0..opts.iters {
        let idx = sample(&mut rng, n, k).into_vec();
        let Ok(hyp) = fit_algebraic(model, &corrs.subset(&idx), &opts.calib) else {
            continue;
        };
        let proj = hyp.spec.projector();
        let inliers: Vec<usize> = (0..n)
            .filter(|&i| {
                proj.unproject(&corrs.pixels[i])
                    .is_ok_and(|r| r.angle_to(&corrs.rays[i]) < opts.thresh)
            })
            .collect();
        if inliers.len() > best.len() {
            best = inliers;
            if best.len() == n {
                break;
            }
        }
    }
    let ratio = best.len() as f64 / n as f64;
    if ratio < MIN_INLIER_RATIO {
        return Err(Error::NoConsensus(ratio));
    }
    calibrate_corrs(model, &corrs.subset(&best), &opts.calib)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;
    use crate::calib::calibrate;
    use crate::camera::CameraSpec;
    use crate::fov::field_from_spec;

    #[test]
    fn noiseless_field_is_all_inliers() {
        let spec = CameraSpec::new(
            ModelId::kb(2).unwrap(),
            [300.0, 310.0, 162.0, 118.0],
            alloc::vec![0.05, -0.01],
            320,
            240,
        )
        .unwrap();
        let field = field_from_spec(&spec, 4).unwrap();
        let a = calibrate(&field, spec.model, 1).unwrap();
        let b = calibrate_ransac(&field, spec.model, 20, 1e-6, 3).unwrap();
        assert!(max_rel_err(&b.spec, &a.spec) < 1e-6);
        assert!(max_rel_err(&b.spec, &spec) < 1e-6);
    }

    #[test]
    fn deterministic_in_seed() {
        let spec = CameraSpec::centered(ModelId::UCM, 200.0, alloc::vec![0.7], 160, 120).unwrap();
        let field = field_from_spec(&spec, 4).unwrap();
        let a = calibrate_ransac(&field, spec.model, 10, 1e-3, 9).unwrap();
        let b = calibrate_ransac(&field, spec.model, 10, 1e-3, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn minimal_sizes() {
        let o = CalibOptions::default();
        assert_eq!(minimal_sample(ModelId::PINHOLE, &o), 4);
        assert_eq!(minimal_sample(ModelId::kb(4).unwrap(), &o), 8);
        assert_eq!(minimal_sample(ModelId::EUCM, &o), 7);
    }
}
