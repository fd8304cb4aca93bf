use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::fov::FovField;

/// Adds i.i.d. `N(0, sigma)` noise (`sigma` in degrees) to both components
/// of every cell. Cells pushed to `‖θ‖ ≥ π` are redrawn.
pub fn add_noise(field: &FovField, sigma: f64, seed: u64) -> Result<FovField> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument("noise sigma must be non-negative"));
    }
    if sigma == 0.0 {
        return Ok(field.clone());
    }
    let normal = Normal::new(0.0, sigma.to_radians()).map_err(|_| Error::InvalidArgument("noise sigma"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta: Vec<[f64; 2]> = field
        .theta
        .iter()
        .map(|t| loop {
            let n = [t[0] + normal.sample(&mut rng), t[1] + normal.sample(&mut rng)];
            if libm::hypot(n[0], n[1]) < PI {
                break n;
            }
        })
        .collect();
    Ok(FovField { theta, ..field.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(n: u32) -> FovField {
        let theta = (0..n * n).map(|i| [0.001 * i as f64 / (n * n) as f64, -0.3]).collect();
        FovField::new(n, n, theta).unwrap()
    }

    #[test]
    fn zero_sigma_is_identity() {
        let f = field(8);
        assert_eq!(add_noise(&f, 0.0, 1).unwrap(), f);
    }

    #[test]
    fn sample_deviation() {
        let f = field(500);
        let g = add_noise(&f, 0.5, 7).unwrap();
        let d: Vec<f64> = f
            .theta
            .iter()
            .zip(&g.theta)
            .flat_map(|(a, b)| [b[0] - a[0], b[1] - a[1]])
            .collect();
        let n = d.len() as f64;
        let mean = d.iter().sum::<f64>() / n;
        let sd = libm::sqrt(d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0));
        assert!((sd.to_degrees() / 0.5 - 1.0).abs() < 0.01, "{}", sd.to_degrees());
    }

    #[test]
    fn seeded() {
        let f = field(16);
        assert_eq!(add_noise(&f, 1.0, 3).unwrap(), add_noise(&f, 1.0, 3).unwrap());
        assert_ne!(add_noise(&f, 1.0, 3).unwrap(), add_noise(&f, 1.0, 4).unwrap());
    }

    #[test]
    fn stays_inside_log_domain() {
        let theta = alloc::vec![[PI - 1e-3, 0.0]; 1000];
        let f = FovField::new(1000, 1, theta).unwrap();
        let g = add_noise(&f, 5.0, 0).unwrap();
        assert!(g.theta.iter().all(|t| libm::hypot(t[0], t[1]) < PI));
    }
}
