//! Synthetic ground truth: seeded intrinsics samplers, focal-from-FoV,
//! field noise and the mapping of LensFun fisheye calibrations onto EUCM.

mod lensfun;
mod noise;

pub use lensfun::{lensfun_to_eucm, Distortion, LensfunEntry, LensfunFit, Projection};
pub use noise::add_noise;

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::camera::{min_focal, CameraSpec, Family, ModelId};
use crate::error::{Error, Result};
use crate::metrics::fov_agnostic;

/// Draws per spec before a sampler gives up on a configuration.
pub const MAX_RETRIES: usize = 100;
/// Sampled focals sit this far (relative) above the injectivity clamp.
pub const CLAMP_MARGIN: f64 = 1e-6;

const KHAT_SIGMA: f64 = 0.07;
const KHAT_BOUND: f64 = 0.3;
const NARROW_FOV: (f64, f64) = (20.0, 105.0);
const WIDE_FOV: (f64, f64) = (50.0, 180.0);

/// Focal length (pixels) at which a centered spec of `height` pixels sees a
/// vertical field of view of `fov` degrees: `f = (H/2) / r(FoV/2)`, with
/// `r(θ)` the model's normalized radius. For the pinhole this is
/// `(H/2) / tan(FoV/2)`.
pub fn focal_from_fov(model: ModelId, dist: &[f64], fov: f64, height: u32) -> Result<f64> {
    if !(fov > 0.0 && fov < 360.0) || height == 0 {
        return Err(Error::FovOutOfRange);
    }
    let unit = CameraSpec::centered(model, 1.0, dist.to_vec(), 1, 1)?;
    let r = unit
        .radial_profile(fov.to_radians() / 2.0)
        .map_err(|_| Error::FovOutOfRange)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::FovOutOfRange);
    }
    Ok(height as f64 / 2.0 / r)
}

/// Synthetic dataset flavours, differing in their model mixture.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DatasetKind {
    /// Pinhole only.
    OpP,
    /// Radial (Brown-Conrady, one coefficient) only.
    OpR,
    /// Half radial, half EUCM.
    OpD,
    /// 34% pinhole, 33% radial, 33% EUCM.
    OpG,
}

impl DatasetKind {
    pub const ALL: [DatasetKind; 4] = [DatasetKind::OpP, DatasetKind::OpR, DatasetKind::OpD, DatasetKind::OpG];

    /// Models with their mixture weights in percent.
    pub fn mixture(self) -> &'static [(ModelId, u32)] {
        const RADIAL1: ModelId = ModelId::RADIAL1;
        match self {
            DatasetKind::OpP => &[(ModelId::PINHOLE, 100)],
            DatasetKind::OpR => &[(RADIAL1, 100)],
            DatasetKind::OpD => &[(RADIAL1, 50), (ModelId::EUCM, 50)],
            DatasetKind::OpG => &[(ModelId::PINHOLE, 34), (RADIAL1, 33), (ModelId::EUCM, 33)],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::OpP => "opp",
            DatasetKind::OpR => "opr",
            DatasetKind::OpD => "opd",
            DatasetKind::OpG => "opg",
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DatasetKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or(Error::InvalidArgument("dataset kind must be one of opp, opr, opd, opg"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SamplerConfig {
    pub kind: DatasetKind,
    /// Side of the square images, pixels.
    pub size: u32,
    pub seed: u64,
}

/// Stream of intrinsics drawn from a dataset's distributions.
///
/// Every spec is square, centered and unit-aspect. Focal lengths are not
/// drawn directly: the vertical FoV is, and `f` follows from
/// [`focal_from_fov`]. Where the injectivity clamp binds, `f` is raised to
/// just above [`min_focal`].
pub struct Sampler {
    cfg: SamplerConfig,
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(cfg: SamplerConfig) -> Sampler {
        Sampler {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        }
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    /// Next spec of the stream.
    pub fn sample(&mut self) -> Result<CameraSpec> {
        let mix = self.cfg.kind.mixture();
        let total: u32 = mix.iter().map(|&(_, w)| w).sum();
        let mut pick = self.rng.random_range(0..total);
        let model = mix
            .iter()
            .find(|&&(_, w)| {
                let hit = pick < w;
                pick = pick.wrapping_sub(w);
                hit
            })
            .map(|&(m, _)| m)
            .unwrap_or(mix[0].0);
        sample_spec(model, self.cfg.size, &mut self.rng)
    }

    /// Uses the sampler's stream for an arbitrary model (see [`sample_spec`]).
    pub fn sample_model(&mut self, model: ModelId) -> Result<CameraSpec> {
        sample_spec(model, self.cfg.size, &mut self.rng)
    }

    /// Underlying generator, for callers that draw extra variates in the
    /// same deterministic stream.
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

impl Iterator for Sampler {
    type Item = Result<CameraSpec>;

    fn next(&mut self) -> Option<Self::Item> {
        Some(self.sample())
    }
}

/// First spec of the stream seeded by `cfg`.
pub fn sample_intrinsics(cfg: &SamplerConfig) -> Result<CameraSpec> {
    Sampler::new(*cfg).sample()
}

/// Vertical FoV range (degrees) used for a model.
pub fn fov_range(model: ModelId) -> (f64, f64) {
    match model.family() {
        Family::Pinhole | Family::BrownConrady | Family::Division => NARROW_FOV,
        Family::KannalaBrandt | Family::Ucm | Family::Eucm => WIDE_FOV,
    }
}

/// `N(0, 0.07)` truncated to `[-0.3, 0.3]`, by rejection.
fn khat<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let normal = Normal::new(0.0, KHAT_SIGMA).expect("valid sigma");
    loop {
        let k = normal.sample(rng);
        if k.abs() <= KHAT_BOUND {
            return k;
        }
    }
}

/// One centered square spec of `model`.
///
/// - pinhole: FoV only;
/// - radial:N and division:N: `k̂ₙ ~ N_t(0, 0.07, [-0.3, 0.3])` with
///   `kₙ = k̂ₙ·(f/H)^(2n-1)`, so `k̂₁ = k₁H/f`. `f` and `k` depend on each
///   other and are resolved by fixed-point iteration;
/// - kb:N: `kₙ = k̂ₙ·10^(1-n)`;
/// - ucm: `ξ ~ U(0, 1.2)`;
/// - eucm: `α ~ U(0.5, 0.8)`, `β ~ U(0.5, 2)`.
///
/// Draws whose clamped spec is invalid or whose FoV leaves the range are
/// redrawn, at most [`MAX_RETRIES`] times.
pub fn sample_spec<R: Rng + ?Sized>(model: ModelId, size: u32, rng: &mut R) -> Result<CameraSpec> {
    if size == 0 {
        return Err(Error::InvalidArgument("image size must be positive"));
    }
    let (lo, hi) = fov_range(model);
    for _ in 0..MAX_RETRIES {
        let fov = rng.random_range(lo..=hi);
        let n = model.num_dist();
        let drawn = match model.family() {
            Family::Pinhole => focal_from_fov(model, &[], fov, size).map(|f| (f, Vec::new())),
            Family::BrownConrady | Family::Division => {
                let khats: Vec<f64> = (0..n).map(|_| khat(rng)).collect();
                coupled_focal(model, &khats, fov, size)
            }
            Family::KannalaBrandt => {
                let dist: Vec<f64> = (0..n).map(|i| khat(rng) * libm::pow(0.1, i as f64)).collect();
                focal_from_fov(model, &dist, fov, size).map(|f| (f, dist))
            }
            Family::Ucm => {
                let dist = alloc::vec![rng.random_range(0.0..1.2)];
                focal_from_fov(model, &dist, fov, size).map(|f| (f, dist))
            }
            Family::Eucm => {
                let dist = alloc::vec![rng.random_range(0.5..=0.8), rng.random_range(0.5..=2.0)];
                focal_from_fov(model, &dist, fov, size).map(|f| (f, dist))
            }
        };
        let Ok((f, dist)) = drawn else { continue };
        let f_min = min_focal(model, &dist, size, size)?;
        let f = f.max(f_min * (1.0 + CLAMP_MARGIN));
        let spec = CameraSpec::centered(model, f, dist, size, size)?;
        if !spec.is_valid() {
            continue;
        }
        match fov_agnostic(&spec) {
            Ok((h, v)) if in_range(h, lo, hi) && in_range(v, lo, hi) => return Ok(spec),
            _ => continue,
        }
    }
    Err(Error::FovOutOfRange)
}

fn in_range(x: f64, lo: f64, hi: f64) -> bool {
    // fov_agnostic reproduces the drawn FoV to roundoff
    (lo - 1e-9..=hi + 1e-9).contains(&x)
}

/// Fixed point of `f = focal_from_fov(k(f))`, `kₙ = k̂ₙ·(f/H)^(2n-1)`,
/// starting from `k = 0`; stops at `|Δf|/f < 1e-10` (at most 20 rounds).
fn coupled_focal(model: ModelId, khats: &[f64], fov: f64, size: u32) -> Result<(f64, Vec<f64>)> {
    let h = size as f64;
    let scale = |f: f64| -> Vec<f64> {
        khats
            .iter()
            .enumerate()
            .map(|(i, k)| k * libm::pow(f / h, (2 * i + 1) as f64))
            .collect()
    };
    let mut dist = alloc::vec![0.0; khats.len()];
    let mut f = focal_from_fov(model, &dist, fov, size)?;
    for _ in 0..20 {
        dist = scale(f);
        let next = focal_from_fov(model, &dist, fov, size)?;
        let done = (next - f).abs() < 1e-10 * f;
        f = next;
        if done {
            return Ok((f, scale(f)));
        }
    }
    Err(Error::FovOutOfRange)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinhole_focal() {
        let f = focal_from_fov(ModelId::PINHOLE, &[], 90.0, 480).unwrap();
        assert!((f - 240.0).abs() < 1e-12);
        assert_eq!(focal_from_fov(ModelId::PINHOLE, &[], 180.0, 480), Err(Error::FovOutOfRange));
        assert_eq!(focal_from_fov(ModelId::PINHOLE, &[], 0.0, 480), Err(Error::FovOutOfRange));
    }

    #[test]
    fn eucm_focal_at_half_sphere() {
        let (alpha, beta) = (0.6, 1.19);
        let f = focal_from_fov(ModelId::EUCM, &[alpha, beta], 180.0, 480).unwrap();
        // R = 1, Z = 0 leaves φ = 1/(α√β)
        let expected = 240.0 * alpha * libm::sqrt(beta);
        assert!((f - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn radial_focal_respects_clamp() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = ModelId::radial(1).unwrap();
        for _ in 0..200 {
            let s = sample_spec(model, 480, &mut rng).unwrap();
            let f_min = min_focal(model, &s.dist, 480, 480).unwrap();
            assert!(s.fx >= f_min, "{s}");
            let k_hat = s.dist[0] * 480.0 / s.fx;
            assert!(k_hat.abs() <= KHAT_BOUND + 1e-12, "{s}");
        }
    }

    #[test]
    fn fov_is_inverted() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for model in ModelId::all() {
            let dist = sample_spec(model, 320, &mut rng).unwrap().dist;
            let (lo, hi) = fov_range(model);
            let fov = 0.5 * (lo + hi);
            let Ok(f) = focal_from_fov(model, &dist, fov, 320) else { continue };
            let spec = CameraSpec::centered(model, f, dist, 320, 320).unwrap();
            let (_, v) = fov_agnostic(&spec).unwrap();
            assert!((v - fov).abs() < 1e-9, "{spec}: {v} vs {fov}");
        }
    }

    #[test]
    fn mixture_frequencies() {
        let mut s = Sampler::new(SamplerConfig {
            kind: DatasetKind::OpG,
            size: 32,
            seed: 1,
        });
        let mut counts = [0usize; 3];
        let n = 3000;
        for _ in 0..n {
            match s.sample().unwrap().model.family() {
                Family::Pinhole => counts[0] += 1,
                Family::BrownConrady => counts[1] += 1,
                _ => counts[2] += 1,
            }
        }
        for (c, w) in counts.iter().zip([34.0, 33.0, 33.0]) {
            assert!((*c as f64 / n as f64 * 100.0 - w).abs() < 3.0, "{counts:?}");
        }
    }

    #[test]
    fn sampled_specs_are_valid_and_in_range() {
        for kind in DatasetKind::ALL {
            let s = Sampler::new(SamplerConfig { kind, size: 64, seed: 3 });
            for spec in s.take(200) {
                let spec = spec.unwrap();
                assert!(spec.is_valid(), "{spec}");
                let (lo, hi) = fov_range(spec.model);
                let (h, v) = fov_agnostic(&spec).unwrap();
                assert!(in_range(h, lo, hi) && in_range(v, lo, hi), "{spec}");
                if kind == DatasetKind::OpP {
                    assert_eq!(spec.model, ModelId::PINHOLE);
                }
            }
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let cfg = SamplerConfig {
            kind: DatasetKind::OpD,
            size: 100,
            seed: 42,
        };
        let a: Vec<_> = Sampler::new(cfg).take(50).collect();
        let b: Vec<_> = Sampler::new(cfg).take(50).collect();
        assert_eq!(a, b);
        assert_eq!(sample_intrinsics(&cfg), a[0]);
    }

    #[test]
    fn every_model_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for model in ModelId::all() {
            for _ in 0..20 {
                let s = sample_spec(model, 64, &mut rng).unwrap();
                assert!(s.is_valid(), "{s}");
            }
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in DatasetKind::ALL {
            assert_eq!(k.name().parse::<DatasetKind>().unwrap(), k);
        }
        assert!("opx".parse::<DatasetKind>().is_err());
    }
}
