//! FoV fields: rays expressed as 2-vectors in the tangent plane of the unit
//! sphere at the optical axis `z₁ = [0, 0, 1]`.
//!
//! The log map sends a unit ray `p` to `θ = (θ / sin θ)·(X, Y)` with
//! `θ = ∠(p, z₁)`, so the norm of a field value is the polar angle of its
//! pixel. The exp map `θ ↦ [(sin θ / θ)·θ, cos θ]` inverts it for `‖θ‖ < π`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::camera::{CameraSpec, Pixel, Ray};
use crate::error::{Error, Result};

/// Below this angle `sin θ / θ` and `θ / sin θ` use their Taylor series.
pub const SERIES_CUTOVER: f64 = 1e-6;

/// Tangent-plane coordinates of a ray.
pub fn log_map(ray: &Ray) -> Result<[f64; 2]> {
    if ray.z <= -1.0 + 1e-12 {
        return Err(Error::AntipodalRay);
    }
    let big_r = libm::hypot(ray.x, ray.y);
    let theta = libm::atan2(big_r, ray.z);
    let scale = if theta < SERIES_CUTOVER {
        1.0 + theta * theta / 6.0
    } else {
        theta / big_r
    };
    Ok([scale * ray.x, scale * ray.y])
}

/// Unit ray of a tangent-plane vector.
pub fn exp_map(theta2: [f64; 2]) -> Result<Ray> {
    let theta = libm::hypot(theta2[0], theta2[1]);
    if !(theta < PI) {
        return Err(Error::ThetaOutOfDomain);
    }
    let sinc = if theta < SERIES_CUTOVER {
        1.0 - theta * theta / 6.0
    } else {
        libm::sin(theta) / theta
    };
    Ok(Ray {
        x: sinc * theta2[0],
        y: sinc * theta2[1],
        z: libm::cos(theta),
    })
}

/// Row-major grid of tangent-plane vectors, one per sampled pixel.
///
/// `width × height` is the image size in pixels. Cells are taken every
/// `stride` pixels: cell `(i, j)` sits at the pixel center
/// `(i·stride + 0.5, j·stride + 0.5)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FovField {
    pub width: u32,
    pub height: u32,
    pub stride: u32,
    pub theta: Vec<[f64; 2]>,
}

impl FovField {
    /// Dense field (stride 1) from row-major values.
    pub fn new(width: u32, height: u32, theta: Vec<[f64; 2]>) -> Result<FovField> {
        FovField::with_stride(width, height, 1, theta)
    }

    pub fn with_stride(width: u32, height: u32, stride: u32, theta: Vec<[f64; 2]>) -> Result<FovField> {
        if stride == 0 {
            return Err(Error::InvalidArgument("stride must be positive"));
        }
        let field = FovField {
            width,
            height,
            stride,
            theta,
        };
        if field.theta.len() != field.cols() * field.rows() {
            return Err(Error::DimensionMismatch("field length does not match its grid"));
        }
        if field.theta.iter().any(|t| !(libm::hypot(t[0], t[1]) < PI)) {
            return Err(Error::ThetaOutOfDomain);
        }
        Ok(field)
    }

    pub fn zeros(width: u32, height: u32) -> FovField {
        FovField {
            width,
            height,
            stride: 1,
            theta: alloc::vec![[0.0, 0.0]; width as usize * height as usize],
        }
    }

    pub fn cols(&self) -> usize {
        grid_len(self.width, self.stride)
    }

    pub fn rows(&self) -> usize {
        grid_len(self.height, self.stride)
    }

    pub fn get(&self, i: usize, j: usize) -> [f64; 2] {
        self.theta[j * self.cols() + i]
    }

    /// Pixel center of cell `(i, j)`.
    pub fn pixel(&self, i: usize, j: usize) -> Pixel {
        cell_pixel(self.stride, i, j)
    }

    /// Cells with their pixel centers, row-major.
    pub fn cells(&self) -> impl Iterator<Item = (Pixel, [f64; 2])> + '_ {
        let cols = self.cols();
        self.theta
            .iter()
            .enumerate()
            .map(move |(k, t)| (self.pixel(k % cols, k / cols), *t))
    }
}

/// Unit rays on the same grid as a [`FovField`].
#[derive(Clone, Debug, PartialEq)]
pub struct RayGrid {
    pub width: u32,
    pub height: u32,
    pub stride: u32,
    pub rays: Vec<Ray>,
}

impl RayGrid {
    pub fn cols(&self) -> usize {
        grid_len(self.width, self.stride)
    }

    pub fn rows(&self) -> usize {
        grid_len(self.height, self.stride)
    }

    pub fn pixel(&self, i: usize, j: usize) -> Pixel {
        cell_pixel(self.stride, i, j)
    }
}

fn grid_len(n: u32, stride: u32) -> usize {
    n.div_ceil(stride) as usize
}

fn cell_pixel(stride: u32, i: usize, j: usize) -> Pixel {
    let s = stride as f64;
    Pixel::new(i as f64 * s + 0.5, j as f64 * s + 0.5)
}

/// Ground-truth field of a camera: `log_map(unproject(px))` at every
/// `stride`-th pixel center.
pub fn field_from_spec(spec: &CameraSpec, stride: u32) -> Result<FovField> {
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be positive"));
    }
    let proj = spec.projector();
    let (cols, rows) = (grid_len(spec.width, stride), grid_len(spec.height, stride));
    let mut theta = Vec::with_capacity(cols * rows);
    for j in 0..rows {
        for i in 0..cols {
            let ray = proj.unproject(&cell_pixel(stride, i, j))?;
            theta.push(log_map(&ray)?);
        }
    }
    Ok(FovField {
        width: spec.width,
        height: spec.height,
        stride,
        theta,
    })
}

/// Elementwise exp map.
pub fn rays_from_field(field: &FovField) -> Result<RayGrid> {
    let rays = field.theta.iter().map(|t| exp_map(*t)).collect::<Result<Vec<_>>>()?;
    Ok(RayGrid {
        width: field.width,
        height: field.height,
        stride: field.stride,
        rays,
    })
}

/// Mean L1 distance between two fields, `(1/N) Σ ‖θ_a - θ_b‖₁`.
pub fn field_l1(a: &FovField, b: &FovField) -> Result<f64> {
    if (a.width, a.height, a.stride) != (b.width, b.height, b.stride) || a.theta.len() != b.theta.len() {
        return Err(Error::DimensionMismatch("fields differ in size"));
    }
    if a.theta.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sum: f64 = a
        .theta
        .iter()
        .zip(&b.theta)
        .map(|(p, q)| (p[0] - q[0]).abs() + (p[1] - q[1]).abs())
        .sum();
    Ok(sum / a.theta.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::ModelId;
    use alloc::vec;
    use core::f64::consts::{FRAC_PI_2, FRAC_PI_4};
    use proptest::prelude::*;

    #[test]
    fn base_point_and_axes() {
        assert_eq!(log_map(&Ray::OPTICAL_AXIS).unwrap(), [0.0, 0.0]);
        let t = log_map(&Ray::from_polar(FRAC_PI_4, 0.0)).unwrap();
        assert!((t[0] - FRAC_PI_4).abs() < 1e-15 && t[1] == 0.0);
        assert_eq!(exp_map([0.0, 0.0]).unwrap(), Ray::OPTICAL_AXIS);
        let r = exp_map([FRAC_PI_2, 0.0]).unwrap();
        assert!((r.x - 1.0).abs() < 1e-15 && r.y == 0.0 && r.z.abs() < 1e-16);
    }

    #[test]
    fn domain_errors() {
        let anti = Ray { x: 0.0, y: 0.0, z: -1.0 };
        assert_eq!(log_map(&anti).unwrap_err(), Error::AntipodalRay);
        assert_eq!(exp_map([PI, 0.0]).unwrap_err(), Error::ThetaOutOfDomain);
        assert_eq!(exp_map([3.0, 1.0]).unwrap_err(), Error::ThetaOutOfDomain);
    }

    #[test]
    fn series_branch_is_continuous() {
        for k in 0..60 {
            let theta = 1e-12 * libm::pow(1e6 / 1e-12 * 1e-6, k as f64 / 59.0);
            let theta = theta.min(1e-6);
            let ray = Ray::from_polar(theta, 0.7);
            let big_r = libm::hypot(ray.x, ray.y);
            let exact = libm::atan2(big_r, ray.z) / big_r;
            let series = 1.0 + theta * theta / 6.0;
            assert!((exact - series).abs() < 1e-12);
            let sinc_exact = libm::sin(theta) / theta;
            assert!((sinc_exact - (1.0 - theta * theta / 6.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn pinhole_field_values() {
        let spec = CameraSpec::centered(ModelId::PINHOLE, 240.0, vec![], 480, 480).unwrap();
        let field = field_from_spec(&spec, 1).unwrap();
        let t = field.get(479, 240);
        // pixel center (479.5, 240.5); the row offset is half a pixel
        let ray = Ray::normalized(239.5, 0.5, 240.0).unwrap();
        let theta = libm::atan2(libm::hypot(ray.x, ray.y), ray.z);
        assert!((libm::hypot(t[0], t[1]) - theta).abs() < 1e-14);
        // a centered 2x2 stencil: the field is symmetric about the center
        let a = field.get(239, 239);
        let b = field.get(240, 240);
        assert!((a[0] + b[0]).abs() < 1e-15 && (a[1] + b[1]).abs() < 1e-15);
    }

    #[test]
    fn border_center_value() {
        // odd height puts a pixel center exactly on the principal row
        let spec = CameraSpec::new(ModelId::PINHOLE, [240.0, 240.0, 240.0, 240.5], vec![], 480, 481).unwrap();
        let field = field_from_spec(&spec, 1).unwrap();
        let t = field.get(479, 240);
        assert!((t[0] - libm::atan(239.5 / 240.0)).abs() < 1e-14);
        assert!(t[1].abs() < 1e-15);
    }

    #[test]
    fn l1_loss() {
        let a = FovField::zeros(4, 3);
        assert_eq!(field_l1(&a, &a).unwrap(), 0.0);
        let mut b = a.clone();
        b.theta.iter_mut().for_each(|t| t[0] += 0.1);
        assert!((field_l1(&a, &b).unwrap() - 0.1).abs() < 1e-15);
        let c = FovField::zeros(3, 4);
        assert!(matches!(field_l1(&a, &c), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn field_round_trips_through_rays() {
        let spec = CameraSpec::centered(ModelId::EUCM, 150.0, vec![0.6, 1.19], 64, 48).unwrap();
        let field = field_from_spec(&spec, 1).unwrap();
        let grid = rays_from_field(&field).unwrap();
        for j in 0..grid.rows() {
            for i in 0..grid.cols() {
                let direct = spec.unproject(&grid.pixel(i, j)).unwrap();
                let r = grid.rays[j * grid.cols() + i];
                assert!((r.x - direct.x).abs() < 1e-12);
                assert!((r.y - direct.y).abs() < 1e-12);
                assert!((r.z - direct.z).abs() < 1e-12);
            }
        }
        let single = FovField::new(1, 1, vec![[FRAC_PI_2, 0.0]]).unwrap();
        let r = rays_from_field(&single).unwrap().rays[0];
        assert!((r.x - 1.0).abs() < 1e-15 && r.z.abs() < 1e-16);
    }

    #[test]
    fn strided_grid_geometry() {
        let spec = CameraSpec::centered(ModelId::PINHOLE, 100.0, vec![], 10, 7).unwrap();
        let f = field_from_spec(&spec, 3).unwrap();
        assert_eq!((f.cols(), f.rows()), (4, 3));
        assert_eq!(f.pixel(3, 2), Pixel::new(9.5, 6.5));
    }

    #[test]
    fn pinhole_field_is_scale_invariant() {
        let small = CameraSpec::new(ModelId::PINHOLE, [200.0, 210.0, 150.0, 110.0], vec![], 300, 220).unwrap();
        let big = CameraSpec::new(ModelId::PINHOLE, [400.0, 420.0, 300.0, 220.0], vec![], 600, 440).unwrap();
        let fs = field_from_spec(&small, 1).unwrap();
        let fb = field_from_spec(&big, 2).unwrap();
        // big stride-2 cell centers sit at 2i + 0.5, i.e. (i + 0.25) in the
        // small image; compare at matching relative positions instead.
        for (j, i) in [(0usize, 0usize), (50, 70), (109, 149)] {
            let px = Pixel::new(2.0 * (i as f64 + 0.5), 2.0 * (j as f64 + 0.5));
            let rb = log_map(&big.unproject(&px).unwrap()).unwrap();
            let rs = fs.get(i, j);
            assert!((rb[0] - rs[0]).abs() < 1e-15 && (rb[1] - rs[1]).abs() < 1e-15);
        }
        assert_eq!(fb.cols(), 300);
    }

    proptest! {
        #[test]
        fn log_exp_inverse(tx in -2.2f64..2.2, ty in -2.2f64..2.2) {
            prop_assume!(libm::hypot(tx, ty) < PI - 1e-6);
            let back = log_map(&exp_map([tx, ty]).unwrap()).unwrap();
            prop_assert!((back[0] - tx).abs() < 1e-12 && (back[1] - ty).abs() < 1e-12);
        }

        #[test]
        fn polar_angle_property(theta in 0.0f64..1.5707, phi in 0.0f64..6.2831) {
            let ray = Ray::from_polar(theta, phi);
            let t = log_map(&ray).unwrap();
            prop_assert!((libm::hypot(t[0], t[1]) - libm::acos(ray.z)).abs() < 1e-12 + 1e-16 / libm::sin(theta).max(1e-300));
        }
    }
}
