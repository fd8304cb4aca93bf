use super::Correspondences;
use crate::error::{Error, Result};
use crate::linalg::System;

/// Rays this close to the optical axis carry no information on `(a, c)`.
const AXIS_EPS: f64 = 1e-9;

/// Aspect ratio and principal point from the first linear stage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrincipalPoint {
    pub a: f64,
    pub cx: f64,
    pub cy: f64,
    /// RMS algebraic residual of the solve (normalized pixel units).
    pub residual: f64,
}

/// Solves `u·Y·a - Y·(a·cx) + X·cy = v·X` in the least-squares sense for
/// `(a, a·cx, cy)`.
///
/// Pixel coordinates are centered and scaled first; the constraint keeps its
/// form under `u = u0 + s·u'`, so the solution maps back exactly.
pub fn fit_ppoint_aspect(corrs: &Correspondences) -> Result<PrincipalPoint> {
    let keep: alloc::vec::Vec<_> = corrs
        .iter()
        .filter(|(_, r)| r.x.abs() >= AXIS_EPS || r.y.abs() >= AXIS_EPS)
        .collect();
    if keep.len() < 3 {
        return Err(Error::DegenerateGeometry("fewer than 3 off-axis correspondences"));
    }
    let n = keep.len() as f64;
    let u0 = keep.iter().map(|(p, _)| p.u).sum::<f64>() / n;
    let v0 = keep.iter().map(|(p, _)| p.v).sum::<f64>() / n;
    let spread = libm::sqrt(
        keep.iter()
            .map(|(p, _)| (p.u - u0) * (p.u - u0) + (p.v - v0) * (p.v - v0))
            .sum::<f64>()
            / n,
    );
    let s = if spread > 0.0 { spread } else { 1.0 };

    let mut sys = System::new(3);
    for (p, r) in &keep {
        let (u, v) = ((p.u - u0) / s, (p.v - v0) / s);
        sys.push(&[u * r.y, -r.y, r.x], v * r.x);
    }
    let sol = sys
        .solve()
        .ok_or(Error::DegenerateGeometry("singular principal point system"))?;
    let a = sol.x[0];
    if !(a > 0.0) {
        return Err(Error::DegenerateGeometry("non-positive aspect ratio"));
    }
    Ok(PrincipalPoint {
        a,
        cx: u0 + s * sol.x[1] / a,
        cy: v0 + s * sol.x[2],
        residual: sol.rms,
    })
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;
    use crate::camera::{CameraSpec, ModelId};
    use alloc::vec;

    #[test]
    fn centered_pinhole() {
        let spec = CameraSpec::centered(ModelId::PINHOLE, 500.0, vec![], 640, 480).unwrap();
        let pp = fit_ppoint_aspect(&grid_corrs(&spec, 32)).unwrap();
        assert!((pp.a - 1.0).abs() < 1e-9);
        assert!((pp.cx - 320.0).abs() < 1e-9 && (pp.cy - 240.0).abs() < 1e-9);
    }

    #[test]
    fn stretched_kb4() {
        let mut spec = kb4_reference();
        spec.fy = 1.2 * spec.fx;
        spec.cx = 300.0;
        spec.cy = 200.0;
        spec.width = 640;
        spec.height = 480;
        let pp = fit_ppoint_aspect(&grid_corrs(&spec, 64)).unwrap();
        assert!(rel(pp.a, 1.2) < 1e-9 && rel(pp.cx, 300.0) < 1e-9 && rel(pp.cy, 200.0) < 1e-9);
    }

    #[test]
    fn independent_of_family() {
        let p = [400.0, 360.0, 290.0, 260.0];
        let pin = CameraSpec::new(ModelId::PINHOLE, p, vec![], 640, 480).unwrap();
        let eu = CameraSpec::new(ModelId::EUCM, p, vec![0.7, 1.4], 640, 480).unwrap();
        let a = fit_ppoint_aspect(&grid_corrs(&pin, 40)).unwrap();
        let b = fit_ppoint_aspect(&grid_corrs(&eu, 40)).unwrap();
        assert!((a.a - b.a).abs() < 1e-9 && (a.cx - b.cx).abs() < 1e-9 && (a.cy - b.cy).abs() < 1e-9);
    }

    #[test]
    fn degenerate_inputs() {
        let spec = CameraSpec::centered(ModelId::PINHOLE, 500.0, vec![], 640, 480).unwrap();
        let c = grid_corrs(&spec, 32);
        // pixels on one horizontal line through the principal point
        let idx: alloc::vec::Vec<usize> = (0..c.len()).filter(|&i| (c.pixels[i].v - 232.5).abs() < 1e-9).collect();
        let line = c.subset(&idx);
        assert!(matches!(fit_ppoint_aspect(&line), Err(Error::DegenerateGeometry(_))));
        assert!(fit_ppoint_aspect(&c.subset(&[0, 1])).is_err());
    }
}
