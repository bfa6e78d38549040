//! Seedable key generators and their exact CDFs.
//!
//! Three distribution families: uniform, truncated normal (realized by
//! rejection against the bounds), and finite mixtures of uniform/normal
//! components inside a common window. Every spec carries its own seed;
//! identical `(spec, n)` always produce a bit-identical key sequence.
//! The generator is a ChaCha8 stream cipher RNG: counter-based, seedable
//! from 64 bits, and stable across platforms, so shards can be produced
//! in parallel simply by splitting seeds.
//!
//! [`DistributionSpec::exact_cdf`] is the analytic oracle the model tests
//! validate against.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Slack allowed on the mixture weight sum.
const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Minimum probability mass a truncation window must retain; below this the
/// rejection sampler would stall.
const MIN_WINDOW_MASS: f64 = 1e-4;

/// A key distribution plus the seed that makes draws reproducible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec<T> {
    pub kind: DistributionKind<T>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum DistributionKind<T> {
    Uniform {
        lo: T,
        hi: T,
    },
    TruncatedNormal {
        mean: T,
        stddev: T,
        lo: T,
        hi: T,
    },
    /// Weighted components restricted to the window `[lo, hi]`. Normal
    /// components are truncated to the window; uniform components must lie
    /// inside it.
    Mixture {
        components: Vec<MixtureComponent<T>>,
        lo: T,
        hi: T,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent<T> {
    pub weight: T,
    pub kind: ComponentKind<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "component", rename_all = "snake_case")]
pub enum ComponentKind<T> {
    Uniform { lo: T, hi: T },
    Normal { mean: T, stddev: T },
}

impl<T: Scalar> DistributionSpec<T> {
    pub fn uniform(lo: T, hi: T, seed: u64) -> Result<Self> {
        let spec = Self {
            kind: DistributionKind::Uniform { lo, hi },
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn truncated_normal(mean: T, stddev: T, lo: T, hi: T, seed: u64) -> Result<Self> {
        let spec = Self {
            kind: DistributionKind::TruncatedNormal {
                mean,
                stddev,
                lo,
                hi,
            },
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn mixture(components: Vec<MixtureComponent<T>>, lo: T, hi: T, seed: u64) -> Result<Self> {
        let spec = Self {
            kind: DistributionKind::Mixture { components, lo, hi },
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Window the keys are guaranteed to fall in.
    pub fn bounds(&self) -> (T, T) {
        match &self.kind {
            DistributionKind::Uniform { lo, hi }
            | DistributionKind::TruncatedNormal { lo, hi, .. }
            | DistributionKind::Mixture { lo, hi, .. } => (*lo, *hi),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bounds();
        let (lo_f, hi_f) = (lo.to_f64_exact(), hi.to_f64_exact());
        if !lo_f.is_finite() || !hi_f.is_finite() || lo_f >= hi_f {
            return Err(Error::InvalidDistribution(format!(
                "bounds must satisfy lo < hi and be finite, got lo={lo}, hi={hi}"
            )));
        }
        match &self.kind {
            DistributionKind::Uniform { .. } => Ok(()),
            DistributionKind::TruncatedNormal { mean, stddev, .. } => {
                validate_normal(mean.to_f64_exact(), stddev.to_f64_exact(), lo_f, hi_f)
            }
            DistributionKind::Mixture { components, .. } => {
                if components.is_empty() {
                    return Err(Error::InvalidDistribution(
                        "mixture needs at least one component".into(),
                    ));
                }
                let mut sum = 0.0;
                for c in components {
                    let w = c.weight.to_f64_exact();
                    if !w.is_finite() || w <= 0.0 {
                        return Err(Error::InvalidDistribution(format!(
                            "mixture weights must be positive, got {w}"
                        )));
                    }
                    sum += w;
                    match &c.kind {
                        ComponentKind::Uniform { lo: clo, hi: chi } => {
                            let (clo, chi) = (clo.to_f64_exact(), chi.to_f64_exact());
                            if !(clo < chi) || clo < lo_f || chi > hi_f {
                                return Err(Error::InvalidDistribution(format!(
                                    "uniform component [{clo}, {chi}] must lie inside the \
                                     mixture window [{lo_f}, {hi_f}]"
                                )));
                            }
                        }
                        ComponentKind::Normal { mean, stddev } => {
                            validate_normal(
                                mean.to_f64_exact(),
                                stddev.to_f64_exact(),
                                lo_f,
                                hi_f,
                            )?;
                        }
                    }
                }
                if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
                    return Err(Error::InvalidDistribution(format!(
                        "mixture weights must sum to 1, got {sum}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Draws `n` keys. Identical `(spec, n)` yield a bit-identical vector.
    pub fn generate(&self, n: usize) -> Result<Vec<T>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut keys = Vec::with_capacity(n);
        for _ in 0..n {
            keys.push(T::from_f64_approx(self.draw(&mut rng)));
        }
        Ok(keys)
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        let (lo, hi) = self.bounds();
        let (lo, hi) = (lo.to_f64_exact(), hi.to_f64_exact());
        match &self.kind {
            DistributionKind::Uniform { .. } => lo + rng.random::<f64>() * (hi - lo),
            DistributionKind::TruncatedNormal { mean, stddev, .. } => {
                draw_truncated_normal(rng, mean.to_f64_exact(), stddev.to_f64_exact(), lo, hi)
            }
            DistributionKind::Mixture { components, .. } => {
                let mut u = rng.random::<f64>();
                let mut pick = components.len() - 1;
                for (i, c) in components.iter().enumerate() {
                    let w = c.weight.to_f64_exact();
                    if u < w {
                        pick = i;
                        break;
                    }
                    u -= w;
                }
                match &components[pick].kind {
                    ComponentKind::Uniform { lo: clo, hi: chi } => {
                        let (clo, chi) = (clo.to_f64_exact(), chi.to_f64_exact());
                        clo + rng.random::<f64>() * (chi - clo)
                    }
                    ComponentKind::Normal { mean, stddev } => draw_truncated_normal(
                        rng,
                        mean.to_f64_exact(),
                        stddev.to_f64_exact(),
                        lo,
                        hi,
                    ),
                }
            }
        }
    }

    /// Exact CDF of the distribution at `x`. Assumes a valid spec.
    /// Values outside the window clamp to 0 or 1.
    pub fn exact_cdf(&self, x: T) -> f64 {
        let x = x.to_f64_exact();
        let (lo, hi) = self.bounds();
        let (lo, hi) = (lo.to_f64_exact(), hi.to_f64_exact());
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        match &self.kind {
            DistributionKind::Uniform { .. } => (x - lo) / (hi - lo),
            DistributionKind::TruncatedNormal { mean, stddev, .. } => {
                truncated_normal_cdf(x, mean.to_f64_exact(), stddev.to_f64_exact(), lo, hi)
            }
            DistributionKind::Mixture { components, .. } => {
                let mut acc = 0.0;
                for c in components {
                    let w = c.weight.to_f64_exact();
                    let f = match &c.kind {
                        ComponentKind::Uniform { lo: clo, hi: chi } => {
                            let (clo, chi) = (clo.to_f64_exact(), chi.to_f64_exact());
                            ((x - clo) / (chi - clo)).clamp(0.0, 1.0)
                        }
                        ComponentKind::Normal { mean, stddev } => truncated_normal_cdf(
                            x,
                            mean.to_f64_exact(),
                            stddev.to_f64_exact(),
                            lo,
                            hi,
                        ),
                    };
                    acc += w * f;
                }
                acc.clamp(0.0, 1.0)
            }
        }
    }
}

fn validate_normal(mean: f64, stddev: f64, lo: f64, hi: f64) -> Result<()> {
    if !mean.is_finite() || !stddev.is_finite() || stddev <= 0.0 {
        return Err(Error::InvalidDistribution(format!(
            "normal component needs a finite mean and a positive stddev, got mean={mean}, \
             stddev={stddev}"
        )));
    }
    let mass = std_normal_cdf((hi - mean) / stddev) - std_normal_cdf((lo - mean) / stddev);
    if mass < MIN_WINDOW_MASS {
        return Err(Error::InvalidDistribution(format!(
            "truncation window [{lo}, {hi}] keeps only {mass:.2e} of the normal mass; \
             rejection sampling would stall"
        )));
    }
    Ok(())
}

fn draw_truncated_normal(rng: &mut ChaCha8Rng, mean: f64, stddev: f64, lo: f64, hi: f64) -> f64 {
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let x = mean + stddev * z;
        if (lo..=hi).contains(&x) {
            return x;
        }
    }
}

/// Standard normal CDF via `erfc`, accurate in both tails.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn truncated_normal_cdf(x: f64, mean: f64, stddev: f64, lo: f64, hi: f64) -> f64 {
    let phi = |v: f64| std_normal_cdf((v - mean) / stddev);
    let (plo, phi_hi) = (phi(lo), phi(hi));
    ((phi(x) - plo) / (phi_hi - plo)).clamp(0.0, 1.0)
}

/// The named test distributions, all on the window `[-1000, 1000]`.
///
/// `Uniform` and `TruncatedNormal` are the smooth baselines; the three
/// Gaussian mixtures are deliberately multi-modal stand-ins for the
/// "nontrivial" shapes, exercising steep CDF regions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Uniform,
    TruncatedNormal,
    Bimodal,
    TrimodalSkewed,
    CombOfFive,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Uniform,
        Preset::TruncatedNormal,
        Preset::Bimodal,
        Preset::TrimodalSkewed,
        Preset::CombOfFive,
    ];

    pub const WINDOW: (f64, f64) = (-1000.0, 1000.0);

    pub fn name(self) -> &'static str {
        match self {
            Preset::Uniform => "uniform",
            Preset::TruncatedNormal => "truncnorm",
            Preset::Bimodal => "bimodal",
            Preset::TrimodalSkewed => "trimodal",
            Preset::CombOfFive => "comb5",
        }
    }

    /// Hidden-layer size that fits the preset well: 10 for the two smooth
    /// shapes, 50 for the mixtures.
    pub fn default_neurons(self) -> usize {
        match self {
            Preset::Uniform | Preset::TruncatedNormal => 10,
            _ => 50,
        }
    }

    pub fn spec<T: Scalar>(self, seed: u64) -> DistributionSpec<T> {
        let (lo, hi) = Preset::WINDOW;
        let t = T::from_f64_approx;
        let normal = |weight: f64, mean: f64, stddev: f64| MixtureComponent {
            weight: t(weight),
            kind: ComponentKind::Normal {
                mean: t(mean),
                stddev: t(stddev),
            },
        };
        let spec = match self {
            Preset::Uniform => DistributionSpec::uniform(t(lo), t(hi), seed),
            Preset::TruncatedNormal => {
                DistributionSpec::truncated_normal(t(0.0), t(250.0), t(lo), t(hi), seed)
            }
            Preset::Bimodal => DistributionSpec::mixture(
                vec![normal(0.5, -500.0, 150.0), normal(0.5, 500.0, 150.0)],
                t(lo),
                t(hi),
                seed,
            ),
            Preset::TrimodalSkewed => DistributionSpec::mixture(
                vec![
                    normal(0.45, -600.0, 120.0),
                    normal(0.35, 150.0, 180.0),
                    normal(0.20, 650.0, 90.0),
                ],
                t(lo),
                t(hi),
                seed,
            ),
            Preset::CombOfFive => DistributionSpec::mixture(
                vec![
                    normal(0.2, -800.0, 60.0),
                    normal(0.2, -400.0, 60.0),
                    normal(0.2, 0.0, 60.0),
                    normal(0.2, 400.0, 60.0),
                    normal(0.2, 800.0, 60.0),
                ],
                t(lo),
                t(hi),
                seed,
            ),
        };
        spec.expect("presets are always valid")
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Preset::Uniform),
            "truncnorm" => Ok(Preset::TruncatedNormal),
            "bimodal" => Ok(Preset::Bimodal),
            "trimodal" => Ok(Preset::TrimodalSkewed),
            "comb5" => Ok(Preset::CombOfFive),
            other => Err(Error::InvalidParameter(format!(
                "unknown distribution preset '{other}' \
                 (expected uniform, truncnorm, bimodal, trimodal or comb5)"
            ))),
        }
    }
}
