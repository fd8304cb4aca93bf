use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use super::{CameraSpec, Family, ModelId};
use crate::error::Result;
use crate::numeric::{first_positive_root, one_plus_series};

/// Injective region of a model with fixed distortion coefficients.
///
/// Projection is defined for polar angles strictly below `theta_max`, and
/// unprojection for normalized image radii strictly below `radius_max`. The
/// two limits correspond to each other: `r(theta_max) = radius_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub theta_max: f64,
    pub radius_max: f64,
    /// Upper bracket for the Newton inversions: `tan θ` (Brown-Conrady),
    /// `θ` (Kannala-Brandt) or the normalized radius (division) at the
    /// limit. Infinite when unbounded.
    pub(crate) arg_max: f64,
}

impl Domain {
    pub fn of(model: ModelId, dist: &[f64]) -> Domain {
        match model.family() {
            Family::Pinhole => Domain {
                theta_max: FRAC_PI_2,
                radius_max: f64::INFINITY,
                arg_max: f64::INFINITY,
            },
            Family::BrownConrady => {
                let d: Vec<f64> = odd_weights(dist, |n| (2 * n + 1) as f64);
                match first_positive_root(&d, f64::INFINITY) {
                    Some(s) => {
                        let rho = libm::sqrt(s);
                        Domain {
                            theta_max: libm::atan(rho),
                            radius_max: rho * one_plus_series(dist, s),
                            arg_max: rho,
                        }
                    }
                    None => Domain {
                        theta_max: FRAC_PI_2,
                        radius_max: f64::INFINITY,
                        arg_max: f64::INFINITY,
                    },
                }
            }
            Family::KannalaBrandt => {
                let d: Vec<f64> = odd_weights(dist, |n| (2 * n + 1) as f64);
                let theta = first_positive_root(&d, PI * PI).map_or(PI, libm::sqrt);
                Domain {
                    theta_max: theta,
                    radius_max: theta * one_plus_series(dist, theta * theta),
                    arg_max: theta,
                }
            }
            Family::Ucm => {
                let xi = dist[0];
                let w = if xi <= 1.0 { xi } else { 1.0 / xi };
                Domain {
                    theta_max: libm::acos(-w),
                    radius_max: if xi > 1.0 {
                        1.0 / libm::sqrt(xi * xi - 1.0)
                    } else {
                        f64::INFINITY
                    },
                    arg_max: f64::INFINITY,
                }
            }
            Family::Eucm => {
                let (alpha, beta) = (dist[0], dist[1]);
                let w = if alpha <= 0.5 {
                    alpha / (1.0 - alpha)
                } else {
                    (1.0 - alpha) / alpha
                };
                let c2 = w * w * beta / (1.0 - w * w + w * w * beta);
                Domain {
                    theta_max: libm::acos(-libm::sqrt(c2.clamp(0.0, 1.0))),
                    radius_max: if alpha > 0.5 {
                        1.0 / libm::sqrt(beta * (2.0 * alpha - 1.0))
                    } else {
                        f64::INFINITY
                    },
                    arg_max: f64::INFINITY,
                }
            }
            Family::Division => {
                // d/dr atan2(r, ψ(r)) ∝ ψ - rψ' = 1 + Σ (1 - 2n) k_n r^{2n}
                let e: Vec<f64> = odd_weights(dist, |n| (1 - 2 * n as i64) as f64);
                match first_positive_root(&e, f64::INFINITY) {
                    Some(s) => {
                        let r = libm::sqrt(s);
                        Domain {
                            theta_max: libm::atan2(r, one_plus_series(dist, s)),
                            radius_max: r,
                            arg_max: r,
                        }
                    }
                    None => {
                        let lead = dist.iter().rev().find(|&&k| k != 0.0);
                        Domain {
                            theta_max: match lead {
                                Some(&k) if k < 0.0 => PI,
                                _ => FRAC_PI_2,
                            },
                            radius_max: f64::INFINITY,
                            arg_max: f64::INFINITY,
                        }
                    }
                }
            }
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.radius_max.is_finite()
    }
}

fn odd_weights(dist: &[f64], w: impl Fn(usize) -> f64) -> Vec<f64> {
    dist.iter().enumerate().map(|(i, &k)| w(i + 1) * k).collect()
}

/// Smallest focal length (pixels) for which projection stays injective over a
/// `width × height` image with a centered principal point.
///
/// This is `r_im / r_max`, with `r_im` the half diagonal and `r_max` the
/// largest invertible normalized radius of the model. Returns 0 when the
/// model is injective for every radius. For one-coefficient Brown-Conrady
/// this is `r_im / (ρ(1 + kρ²))` with `ρ = 1/√(-3k)`; for EUCM it is
/// `r_im·√(β(2α - 1))` when `α > 0.5`.
pub fn min_focal(model: ModelId, dist: &[f64], width: u32, height: u32) -> Result<f64> {
    model.check_dist_len(dist.len())?;
    let r_im = 0.5 * libm::hypot(width as f64, height as f64);
    let dom = Domain::of(model, dist);
    Ok(if dom.is_bounded() {
        r_im / dom.radius_max
    } else {
        0.0
    })
}

/// One failed validity check.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    EmptyImage,
    NonFiniteParameter,
    NonPositiveFocal,
    DistCountMismatch { expected: usize, got: usize },
    UcmXiNegative(f64),
    EucmAlphaOutOfRange(f64),
    EucmBetaNonPositive(f64),
    /// Some image corner lies outside the injective region; `min_fx` is the
    /// smallest `fx` (same aspect and principal point) that would fix it.
    FocalBelowClamp { fx: f64, min_fx: f64 },
}

pub(super) fn validate_spec(spec: &CameraSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    if spec.width == 0 || spec.height == 0 {
        out.push(Violation::EmptyImage);
    }
    if spec.dist.len() != spec.model.num_dist() {
        out.push(Violation::DistCountMismatch {
            expected: spec.model.num_dist(),
            got: spec.dist.len(),
        });
        return out;
    }
    if !spec.params().iter().all(|p| p.is_finite()) {
        out.push(Violation::NonFiniteParameter);
        return out;
    }
    if !(spec.fx > 0.0 && spec.fy > 0.0) {
        out.push(Violation::NonPositiveFocal);
        return out;
    }
    match spec.model.family() {
        Family::Ucm if spec.dist[0] < 0.0 => out.push(Violation::UcmXiNegative(spec.dist[0])),
        Family::Eucm => {
            let (alpha, beta) = (spec.dist[0], spec.dist[1]);
            if !(0.0..=1.0).contains(&alpha) {
                out.push(Violation::EucmAlphaOutOfRange(alpha));
            }
            if !(beta > 0.0) {
                out.push(Violation::EucmBetaNonPositive(beta));
            }
        }
        _ => {}
    }
    if !out.is_empty() {
        return out;
    }
    let dom = spec.domain();
    if dom.is_bounded() {
        let corner = spec
            .corners()
            .iter()
            .map(|c| spec.normalized_radius(c))
            .fold(0.0, f64::max);
        if corner >= dom.radius_max {
            out.push(Violation::FocalBelowClamp {
                fx: spec.fx,
                min_fx: spec.fx * corner / dom.radius_max,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn bc_clamp_matches_closed_form() {
        let k = -0.1f64;
        let r_max = 1.0 / libm::sqrt(-3.0 * k);
        let r_im = 0.5 * 480.0 * libm::sqrt(2.0);
        let expected = r_im / (r_max * (1.0 + k * r_max * r_max));
        let got = min_focal(ModelId::radial(1).unwrap(), &[k], 480, 480).unwrap();
        assert!((got - expected).abs() < 1e-9 * expected, "{got} vs {expected}");
    }

    #[test]
    fn unconstrained_branches_return_zero() {
        assert_eq!(min_focal(ModelId::radial(1).unwrap(), &[0.1], 480, 480).unwrap(), 0.0);
        assert_eq!(min_focal(ModelId::EUCM, &[0.5, 1.0], 480, 480).unwrap(), 0.0);
        assert_eq!(min_focal(ModelId::PINHOLE, &[], 480, 480).unwrap(), 0.0);
        assert_eq!(min_focal(ModelId::UCM, &[0.88], 480, 480).unwrap(), 0.0);
    }

    #[test]
    fn eucm_clamp_matches_closed_form() {
        let (a, b) = (0.7, 1.3);
        let r_im = 0.5 * libm::hypot(640.0, 480.0);
        let expected = r_im * libm::sqrt(b * (2.0 * a - 1.0));
        let got = min_focal(ModelId::EUCM, &[a, b], 640, 480).unwrap();
        assert!((got - expected).abs() < 1e-12 * expected);
    }

    /// The closed-form EUCM/UCM angle limits agree with a brute-force scan of
    /// where the radial profile stops increasing (or stops being defined).
    #[test]
    fn closed_form_limits_match_scan() {
        let cases: [(ModelId, &[f64]); 6] = [
            (ModelId::EUCM, &[0.3, 1.5]),
            (ModelId::EUCM, &[0.7, 0.8]),
            (ModelId::EUCM, &[0.55, 2.0]),
            (ModelId::UCM, &[0.6]),
            (ModelId::UCM, &[1.7]),
            (ModelId::EUCM, &[1.0, 1.0]),
        ];
        for (m, d) in cases {
            let dom = Domain::of(m, d);
            let radius = |t: f64| -> Option<f64> {
                let (s, c) = (libm::sin(t), libm::cos(t));
                let den = match m.family() {
                    Family::Ucm => d[0] + c,
                    _ => d[0] * libm::sqrt(d[1] * s * s + c * c) + (1.0 - d[0]) * c,
                };
                (den > 0.0).then(|| s / den)
            };
            let n = 200_000;
            let mut prev = 0.0;
            let mut limit = PI;
            for i in 1..n {
                let t = PI * i as f64 / n as f64;
                match radius(t) {
                    Some(r) if r > prev => prev = r,
                    _ => {
                        limit = t;
                        break;
                    }
                }
            }
            assert!((limit - dom.theta_max).abs() < 1e-4, "{m} {d:?}: {limit} vs {}", dom.theta_max);
        }
    }

    #[test]
    fn validation_reports() {
        let ok = CameraSpec::centered(ModelId::PINHOLE, 240.0, vec![], 480, 480).unwrap();
        assert!(ok.validate().is_empty());
        let bad = CameraSpec::centered(ModelId::EUCM, 240.0, vec![1.2, 1.0], 480, 480).unwrap();
        assert_eq!(bad.validate(), vec![Violation::EucmAlphaOutOfRange(1.2)]);
        let m = ModelId::radial(1).unwrap();
        let fmin = min_focal(m, &[-0.1], 480, 480).unwrap();
        let low = CameraSpec::centered(m, fmin * 0.99, vec![-0.1], 480, 480).unwrap();
        assert!(matches!(low.validate()[..], [Violation::FocalBelowClamp { .. }]));
        let high = CameraSpec::centered(m, fmin * 1.01, vec![-0.1], 480, 480).unwrap();
        assert!(high.validate().is_empty());
    }
}
