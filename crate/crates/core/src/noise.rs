//! Correlated binary noise sources.
//!
//! Each trial draws a pair of signs `(s1, s2)` with fair marginals and
//! `E[s1·s2] = r`. The conditional probabilities are
//!
//! ```text
//! N(1|1)  = N(-1|-1) = (1 + r) / 2
//! N(1|-1) = N(-1|1)  = (1 - r) / 2
//! ```
//!
//! Sources are seeded ChaCha8 streams. A source is identified by
//! `(seed, stream_id)`; distinct stream ids give independent sequences, which
//! is how parallel chunks stay reproducible.

use std::f64::consts::FRAC_2_PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Correlation `r ∈ [-1, 1]` between the two noise signals.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct CorrelationCoefficient(f64);

impl CorrelationCoefficient {
    pub fn new(r: f64) -> Result<Self> {
        if r.is_finite() && (-1.0..=1.0).contains(&r) {
            Ok(Self(r))
        } else {
            Err(Error::invalid("r", format!("{r} is outside [-1, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for CorrelationCoefficient {
    type Error = Error;

    fn try_from(r: f64) -> Result<Self> {
        Self::new(r)
    }
}

impl From<CorrelationCoefficient> for f64 {
    fn from(r: CorrelationCoefficient) -> f64 {
        r.0
    }
}

/// `N(1|1)` and `N(1|-1)`; the other two follow by symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionalProbabilities {
    pub n_same: f64,
    pub n_diff: f64,
}

pub fn conditional_probs(r: CorrelationCoefficient) -> ConditionalProbabilities {
    let r = r.value();
    ConditionalProbabilities {
        n_same: (1.0 + r) / 2.0,
        n_diff: (1.0 - r) / 2.0,
    }
}

/// Inverse of [`conditional_probs`]: `r = 1 − 2·N(1|-1)`.
pub fn corr_from_conditional(n_diff: f64) -> Result<CorrelationCoefficient> {
    if !(0.0..=1.0).contains(&n_diff) {
        return Err(Error::invalid(
            "n_diff",
            format!("{n_diff} is not a probability"),
        ));
    }
    CorrelationCoefficient::new(1.0 - 2.0 * n_diff)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    #[serde(rename = "V")]
    Vertical,
    #[serde(rename = "H")]
    Horizontal,
}

impl Polarization {
    /// `+1 → V`, `-1 → H`.
    pub fn from_sign(s: i8) -> Self {
        if s > 0 {
            Polarization::Vertical
        } else {
            Polarization::Horizontal
        }
    }

    /// Polarization angle relative to the laboratory vertical, in degrees.
    pub fn angle_deg(self) -> f64 {
        match self {
            Polarization::Vertical => 0.0,
            Polarization::Horizontal => 90.0,
        }
    }
}

/// One trial's pair of noise signs. Signs are stored as `±1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct TrialPolarizations {
    pub s1: i8,
    pub s2: i8,
}

impl TrialPolarizations {
    pub fn new(s1: i8, s2: i8) -> Self {
        debug_assert!(s1 == 1 || s1 == -1);
        debug_assert!(s2 == 1 || s2 == -1);
        Self { s1, s2 }
    }

    pub fn pol1(self) -> Polarization {
        Polarization::from_sign(self.s1)
    }

    pub fn pol2(self) -> Polarization {
        Polarization::from_sign(self.s2)
    }

    pub fn is_aligned(self) -> bool {
        self.s1 == self.s2
    }

    pub fn product(self) -> i8 {
        self.s1 * self.s2
    }
}

/// A single-consumer stream of correlated sign pairs.
pub trait PairSource {
    fn next_trial(&mut self) -> TrialPolarizations;
}

fn stream_rng(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

fn sign(positive: bool) -> i8 {
    if positive {
        1
    } else {
        -1
    }
}

/// Pair of random telegraph wave samples with correlation `r`.
///
/// `s1` is a fair coin; `s2` copies it with probability `(1 + r)/2` and
/// flips it otherwise.
#[derive(Debug, Clone)]
pub struct RtwPairSource {
    r: CorrelationCoefficient,
    n_same: f64,
    rng: ChaCha8Rng,
}

impl RtwPairSource {
    pub fn new(r: CorrelationCoefficient, seed: u64, stream_id: u64) -> Self {
        Self {
            r,
            n_same: conditional_probs(r).n_same,
            rng: stream_rng(seed, stream_id),
        }
    }

    pub fn correlation(&self) -> CorrelationCoefficient {
        self.r
    }
}

impl PairSource for RtwPairSource {
    fn next_trial(&mut self) -> TrialPolarizations {
        let s1 = sign(self.rng.random::<bool>());
        let keep = self.rng.random::<f64>() < self.n_same;
        TrialPolarizations::new(s1, if keep { s1 } else { -s1 })
    }
}

/// Signs of a standard bivariate Gaussian with latent correlation `rho`.
/// A draw of exactly zero counts as `+1`.
#[derive(Debug, Clone)]
pub struct GaussianSignSource {
    rho: f64,
    cross: f64,
    rng: ChaCha8Rng,
}

impl GaussianSignSource {
    pub fn new(rho: f64, seed: u64, stream_id: u64) -> Result<Self> {
        if !(rho.is_finite() && (-1.0..=1.0).contains(&rho)) {
            return Err(Error::invalid("rho", format!("{rho} is outside [-1, 1]")));
        }
        Ok(Self {
            rho,
            cross: (1.0 - rho * rho).sqrt(),
            rng: stream_rng(seed, stream_id),
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

impl PairSource for GaussianSignSource {
    fn next_trial(&mut self) -> TrialPolarizations {
        let z1: f64 = self.rng.sample(StandardNormal);
        let z2: f64 = self.rng.sample(StandardNormal);
        let y = self.rho * z1 + self.cross * z2;
        TrialPolarizations::new(sign(z1 >= 0.0), sign(y >= 0.0))
    }
}

/// Sign correlation `E[sgn X · sgn Y]` of a standard bivariate Gaussian with
/// correlation `rho`, from the orthant probability `¼ + asin(rho)/(2π)`.
pub fn gaussian_sign_correlation(rho: f64) -> f64 {
    FRAC_2_PI * rho.clamp(-1.0, 1.0).asin()
}

/// Mean of `s1·s2` and its standard error (sample sd / √N).
pub fn empirical_correlation(trials: &[TrialPolarizations]) -> Result<(f64, f64)> {
    let n = trials.len() as u64;
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let sum: i64 = trials.iter().map(|t| t.product() as i64).sum();
    let nf = n as f64;
    let mean = sum as f64 / nf;
    // products are ±1, so Σx² = N
    let var = ((nf - sum as f64 * mean) / (nf - 1.0)).max(0.0);
    Ok((mean, (var / nf).sqrt()))
}

const CALIBRATION_MAX_ITER: usize = 200;

/// Default acceptable `|corr(rho) − target|` for [`calibrate_gaussian`].
pub const DEFAULT_CALIBRATION_TOLERANCE: f64 = 1e-3;

/// Latent Gaussian correlation whose sign correlation matches `target`.
///
/// Bisects `rho ∈ [-1, 1]` on the monotone map [`gaussian_sign_correlation`].
pub fn calibrate_gaussian(target: CorrelationCoefficient, tolerance: f64) -> Result<f64> {
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(Error::invalid(
            "tolerance",
            format!("{tolerance} must be > 0"),
        ));
    }
    let target = target.value();
    let residual = |rho: f64| gaussian_sign_correlation(rho) - target;

    let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
    for end in [hi, lo] {
        if residual(end).abs() <= tolerance {
            return Ok(end);
        }
    }

    let mut best = (f64::INFINITY, 0.0);
    for _ in 0..CALIBRATION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let f = residual(mid);
        if f.abs() < best.0 {
            best = (f.abs(), mid);
        }
        if f.abs() <= tolerance {
            return Ok(mid);
        }
        if f < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::CalibrationFailed {
        best_rho: best.1,
        residual: best.0,
        iterations: CALIBRATION_MAX_ITER,
    })
}
