use alloc::vec::Vec;

use super::eucm::fit_eucm_with;
use super::linear::fit_linear_with;
use super::{calibrate_corrs, refine_with, CalibOptions, CalibrationResult, Correspondences, RefineOptions};
use crate::camera::{CameraSpec, Family, ModelId};
use crate::error::Result;

/// Expresses the ray map of `src` in `dst_model`.
///
/// Correspondences come from unprojecting every `stride`-th pixel center of
/// `src`. Without `fix_focal` the whole pipeline runs (aspect, principal
/// point, focal, distortion, refinement). With `fix_focal`, `fx`, `fy` and
/// the principal point are copied from `src` and only the distortion is
/// fitted and refined.
pub fn convert_model(src: &CameraSpec, dst_model: ModelId, fix_focal: bool, stride: u32) -> Result<CameraSpec> {
    convert_model_detailed(src, dst_model, fix_focal, stride).map(|r| r.spec)
}

pub fn convert_model_detailed(
    src: &CameraSpec,
    dst_model: ModelId,
    fix_focal: bool,
    stride: u32,
) -> Result<CalibrationResult> {
    let corrs = Correspondences::from_spec(src, stride)?;
    let opts = CalibOptions::default();
    if !fix_focal {
        return calibrate_corrs(dst_model, &corrs, &opts);
    }
    let (a, c) = (src.aspect(), src.principal_point());
    let (mut spec0, bounds) = match dst_model.family() {
        Family::Eucm => fit_eucm_with(&corrs, a, c, Some(src.fx), opts.eucm_proxy_order)?,
        _ => fit_linear_with(dst_model, &corrs, a, c, Some(src.fx))?,
    };
    spec0.fy = src.fy;
    let refine_opts = RefineOptions {
        frozen: Vec::from([0, 1, 2, 3]),
        ..opts.refine
    };
    let mut res = refine_with(&spec0, &corrs, &refine_opts)?;
    let mut all = bounds;
    all.extend(res.active_bounds);
    res.active_bounds = all;
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;
    use crate::metrics::reproj_error;
    use alloc::vec;

    #[test]
    fn identity_conversion() {
        for spec in sample_specs() {
            let got = convert_model(&spec, spec.model, false, 8).unwrap();
            let tol = if spec.model.family() == Family::Eucm { 1e-6 } else { 1e-9 };
            assert!(max_rel_err(&got, &spec) < tol, "{spec} -> {got}");
        }
    }

    #[test]
    fn pinhole_to_kb2() {
        // hFoV 60° on 640 px
        let f = 320.0 / libm::tan(30f64.to_radians());
        let src = CameraSpec::centered(ModelId::PINHOLE, f, vec![], 640, 480).unwrap();
        let got = convert_model(&src, ModelId::kb(2).unwrap(), false, 8).unwrap();
        assert!(reproj_error(&src, &got, 4).unwrap().mean < 0.05);
    }
}
