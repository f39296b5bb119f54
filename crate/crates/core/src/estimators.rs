//! Coincidence probabilities, the correlation estimator `E` and the CHSH
//! quantity `S`, both in closed form and by Monte Carlo.
//!
//! Closed form, with `Δ = θi − θj`:
//!
//! ```text
//! P(V,V) = P(H,H) = ½cos²Δ · (1 + r)/2
//! P(V,H) = P(H,V) = ½sin²Δ · (1 − r)/2
//! E = P(V,V) + P(H,H) − P(V,H) − P(H,V) = ½cos 2Δ + r/2
//! ```
//!
//! The Monte Carlo side streams trials through [`trial_outcome`] and scores
//! each one `u = cos²Δ` when aligned and `u = −sin²Δ` when mismatched, so
//! that `E[u]` is exactly the closed-form `E`. The empirical probabilities
//! use `P_xy = 2·Σ intensity_xy / N`, which has the closed-form values above
//! as its expectation.
//!
//! Runs are split into fixed-size chunks, each with its own RNG stream
//! keyed by `(seed, pairing, chunk)`. Chunks may execute on any number of
//! threads; their accumulators are merged in chunk order, so results depend
//! only on the seed.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::noise::{
    gaussian_sign_correlation, CorrelationCoefficient, GaussianSignSource, PairSource,
    RtwPairSource, TrialPolarizations,
};
use crate::polarization::{cos_deg, trial_outcome, Angle, CoincidenceLabel, TrialOutcome};

/// Trials per RNG stream in [`mc_pair_run`]. Independent of worker count.
pub const CHUNK_SIZE: u64 = 1 << 16;

const THRESHOLD_TOLERANCE: f64 = 1e-10;
const THRESHOLD_MAX_ITER: usize = 200;

/// Detector orientations `θA, θB, θC, θD`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngleSet {
    pub theta_a: Angle,
    pub theta_b: Angle,
    pub theta_c: Angle,
    pub theta_d: Angle,
}

impl AngleSet {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self::from_array([a, b, c, d].map(Angle::deg))
    }

    /// 0°, 22.5°, 45°, 67.5°.
    pub fn standard() -> Self {
        Self::new(0.0, 22.5, 45.0, 67.5)
    }

    /// The standard set with `θC` turned by 90°. Maximal for `r < 0`.
    pub fn standard_anti() -> Self {
        Self::new(0.0, 22.5, 135.0, 67.5)
    }

    pub fn from_array(a: [Angle; 4]) -> Self {
        Self {
            theta_a: a[0],
            theta_b: a[1],
            theta_c: a[2],
            theta_d: a[3],
        }
    }

    pub fn to_array(self) -> [Angle; 4] {
        [self.theta_a, self.theta_b, self.theta_c, self.theta_d]
    }

    pub fn degrees(self) -> [f64; 4] {
        self.to_array().map(Angle::degrees)
    }

    pub fn rotated(self, offset_deg: f64) -> Self {
        Self::from_array(self.to_array().map(|a| a.rotated(offset_deg)))
    }

    pub fn pairing(self, p: Pairing) -> (Angle, Angle) {
        match p {
            Pairing::AB => (self.theta_a, self.theta_b),
            Pairing::AD => (self.theta_a, self.theta_d),
            Pairing::CB => (self.theta_c, self.theta_b),
            Pairing::CD => (self.theta_c, self.theta_d),
        }
    }
}

impl fmt::Display for AngleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.degrees();
        write!(f, "{a},{b},{c},{d}")
    }
}

/// Parses `"0,22.5,45,67.5"` (degrees).
impl FromStr for AngleSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts = s
            .split(',')
            .map(str::parse::<Angle>)
            .collect::<Result<Vec<_>>>()?;
        let arr: [Angle; 4] = parts.try_into().map_err(|v: Vec<Angle>| {
            Error::invalid("angles", format!("expected 4 angles, got {}", v.len()))
        })?;
        Ok(Self::from_array(arr))
    }
}

/// The four detector pairings entering `S`, in the order they are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Pairing {
    AB,
    AD,
    CB,
    CD,
}

impl Pairing {
    pub const ALL: [Pairing; 4] = [Pairing::AB, Pairing::AD, Pairing::CB, Pairing::CD];

    pub fn index(self) -> u64 {
        self as u64
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Pairing::AB => "AB",
            Pairing::AD => "AD",
            Pairing::CB => "CB",
            Pairing::CD => "CD",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChshMode {
    Analytic,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshResult {
    pub e_ab: f64,
    pub e_ad: f64,
    pub e_cb: f64,
    pub e_cd: f64,
    pub s_value: f64,
    pub std_err: f64,
    pub violated: bool,
    pub mode: ChshMode,
}

impl ChshResult {
    /// Builds the result from estimators given in [`Pairing::ALL`] order.
    pub fn from_estimators(e: [f64; 4], std_err: f64, mode: ChshMode) -> Self {
        let [e_ab, e_ad, e_cb, e_cd] = e;
        let s_value = chsh_combination(e);
        Self {
            e_ab,
            e_ad,
            e_cb,
            e_cd,
            s_value,
            std_err,
            violated: s_value > crate::CLASSICAL_BOUND,
            mode,
        }
    }

    pub fn estimators(&self) -> [f64; 4] {
        [self.e_ab, self.e_ad, self.e_cb, self.e_cd]
    }
}

fn chsh_combination([ab, ad, cb, cd]: [f64; 4]) -> f64 {
    (ab - ad).abs() + (cb + cd).abs()
}

fn relative(theta_i: Angle, theta_j: Angle) -> f64 {
    theta_i.degrees() - theta_j.degrees()
}

pub fn analytic_p_aligned(delta: Angle, r: CorrelationCoefficient) -> f64 {
    let c = cos_deg(delta.degrees());
    0.5 * c * c * (1.0 + r.value()) / 2.0
}

pub fn analytic_p_mismatched(delta: Angle, r: CorrelationCoefficient) -> f64 {
    let c = cos_deg(delta.degrees());
    0.5 * (1.0 - c * c) * (1.0 - r.value()) / 2.0
}

/// `E(Δ) = ½cos(2Δ) + r/2`.
pub fn analytic_e(delta: Angle, r: CorrelationCoefficient) -> f64 {
    e_closed_form(delta.degrees(), r.value())
}

fn e_closed_form(delta_deg: f64, r: f64) -> f64 {
    0.5 * cos_deg(2.0 * delta_deg) + 0.5 * r
}

fn analytic_estimators(angles: &AngleSet, r: f64) -> [f64; 4] {
    Pairing::ALL.map(|p| {
        let (i, j) = angles.pairing(p);
        e_closed_form(relative(i, j), r)
    })
}

pub fn analytic_chsh(angles: &AngleSet, r: CorrelationCoefficient) -> ChshResult {
    ChshResult::from_estimators(
        analytic_estimators(angles, r.value()),
        0.0,
        ChshMode::Analytic,
    )
}

fn s_of_r(angles: &AngleSet, r: f64) -> f64 {
    chsh_combination(analytic_estimators(angles, r))
}

/// Where `S(r)` attains its minimum over `[-1, 1]`.
///
/// `E(A,B) − E(A,D)` does not depend on `r` and `E(C,B) + E(C,D)` grows as
/// `c + r`, so `S(r)` is convex and piecewise linear with one kink at
/// `r = −c`.
fn s_minimizer(angles: &AngleSet) -> f64 {
    let e = analytic_estimators(angles, 0.0);
    (-(e[2] + e[3])).clamp(-1.0, 1.0)
}

/// Bisects `S(r) = 2` on `[lo, hi]`, where `S(lo) < 2 ≤ S(hi)` if
/// `increasing`, or the mirror image otherwise.
fn bisect_threshold(angles: &AngleSet, mut lo: f64, mut hi: f64, increasing: bool) -> f64 {
    let bound = crate::CLASSICAL_BOUND;
    let mut best = (f64::INFINITY, hi);
    for _ in 0..THRESHOLD_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let f = s_of_r(angles, mid) - bound;
        if f.abs() < best.0 {
            best = (f.abs(), mid);
        }
        if f.abs() <= THRESHOLD_TOLERANCE {
            return mid;
        }
        if (f < 0.0) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best.1
}

/// Smallest `r` at which `S` reaches 2 on the branch where `S` increases
/// with `r`. `None` when `S(r) < 2` along that whole branch.
pub fn violation_threshold(angles: &AngleSet) -> Option<f64> {
    let bound = crate::CLASSICAL_BOUND;
    if s_of_r(angles, 1.0) < bound - THRESHOLD_TOLERANCE {
        return None;
    }
    let lo = s_minimizer(angles);
    if s_of_r(angles, lo) >= bound {
        return Some(lo);
    }
    Some(bisect_threshold(angles, lo, 1.0, true))
}

/// Largest `r` at which `S` reaches 2 on the branch where `S` grows as `r`
/// decreases (anti-correlated noise). `None` when there is no such point.
pub fn anti_violation_threshold(angles: &AngleSet) -> Option<f64> {
    let bound = crate::CLASSICAL_BOUND;
    if s_of_r(angles, -1.0) < bound - THRESHOLD_TOLERANCE {
        return None;
    }
    let hi = s_minimizer(angles);
    if s_of_r(angles, hi) >= bound {
        return Some(hi);
    }
    Some(bisect_threshold(angles, -1.0, hi, false))
}

/// Per-label coincidence sums for one detector pairing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairStatistics {
    pub theta_i: Angle,
    pub theta_j: Angle,
    /// Indexed by `VV, HH, VH, HV`.
    pub intensity_sum: [f64; 4],
    pub trial_count: [u64; 4],
    pub total_trials: u64,
    pub score_sum: f64,
    pub sum_of_squared_scores: f64,
}

impl PairStatistics {
    pub fn new(theta_i: Angle, theta_j: Angle) -> Self {
        Self {
            theta_i,
            theta_j,
            intensity_sum: [0.0; 4],
            trial_count: [0; 4],
            total_trials: 0,
            score_sum: 0.0,
            sum_of_squared_scores: 0.0,
        }
    }

    pub fn record(&mut self, outcome: TrialOutcome) {
        let k = outcome.label.index();
        self.intensity_sum[k] += outcome.intensity;
        self.trial_count[k] += 1;
        self.total_trials += 1;
        let u = score(outcome);
        self.score_sum += u;
        self.sum_of_squared_scores += u * u;
    }

    /// Records `count` identical outcomes at once.
    pub fn record_many(&mut self, outcome: TrialOutcome, count: u64) {
        let k = outcome.label.index();
        let c = count as f64;
        let u = score(outcome);
        self.intensity_sum[k] += c * outcome.intensity;
        self.trial_count[k] += count;
        self.total_trials += count;
        self.score_sum += c * u;
        self.sum_of_squared_scores += c * u * u;
    }

    /// Adds `other`'s sums. Both must describe the same pairing.
    pub fn merge(&mut self, other: &PairStatistics) {
        debug_assert_eq!((self.theta_i, self.theta_j), (other.theta_i, other.theta_j));
        for k in 0..4 {
            self.intensity_sum[k] += other.intensity_sum[k];
            self.trial_count[k] += other.trial_count[k];
        }
        self.total_trials += other.total_trials;
        self.score_sum += other.score_sum;
        self.sum_of_squared_scores += other.sum_of_squared_scores;
    }

    pub fn count(&self, label: CoincidenceLabel) -> u64 {
        self.trial_count[label.index()]
    }

    pub fn intensity(&self, label: CoincidenceLabel) -> f64 {
        self.intensity_sum[label.index()]
    }
}

/// `+2I` for aligned outcomes, `−2I` for mismatched ones.
fn score(outcome: TrialOutcome) -> f64 {
    if outcome.label.is_aligned() {
        2.0 * outcome.intensity
    } else {
        -2.0 * outcome.intensity
    }
}

/// Streams `n_trials` from `source` through the detector pair `(θi, θj)`.
pub fn accumulate_pairs<S: PairSource>(
    source: &mut S,
    theta_i: Angle,
    theta_j: Angle,
    n_trials: u64,
) -> Result<PairStatistics> {
    if n_trials == 0 {
        return Err(Error::EmptyRun);
    }
    let mut stats = PairStatistics::new(theta_i, theta_j);
    fill(&mut stats, source, n_trials);
    Ok(stats)
}

fn fill<S: PairSource>(stats: &mut PairStatistics, source: &mut S, n: u64) {
    // The outcome only depends on the label, so evaluate each label once.
    let table = CoincidenceLabel::ALL.map(|label| {
        let trial = match label {
            CoincidenceLabel::VV => TrialPolarizations::new(1, 1),
            CoincidenceLabel::HH => TrialPolarizations::new(-1, -1),
            CoincidenceLabel::VH => TrialPolarizations::new(1, -1),
            CoincidenceLabel::HV => TrialPolarizations::new(-1, 1),
        };
        trial_outcome(trial, stats.theta_i, stats.theta_j)
    });
    let mut counts = [0u64; 4];
    for _ in 0..n {
        counts[CoincidenceLabel::of(source.next_trial()).index()] += 1;
    }
    for (outcome, count) in table.into_iter().zip(counts) {
        stats.record_many(outcome, count);
    }
}

/// Which noise drives the sources in a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    Rtw { r: CorrelationCoefficient },
    Gaussian { rho: f64 },
}

impl NoiseModel {
    pub fn rtw(r: CorrelationCoefficient) -> Self {
        NoiseModel::Rtw { r }
    }

    pub fn gaussian(rho: f64) -> Result<Self> {
        GaussianSignSource::new(rho, 0, 0)?;
        Ok(NoiseModel::Gaussian { rho })
    }

    /// Sign correlation `E[s1·s2]` produced by this model.
    pub fn effective_r(&self) -> CorrelationCoefficient {
        match *self {
            NoiseModel::Rtw { r } => r,
            NoiseModel::Gaussian { rho } => {
                CorrelationCoefficient::new(gaussian_sign_correlation(rho).clamp(-1.0, 1.0))
                    .expect("clamped")
            }
        }
    }

    fn run_chunk(&self, stats: &mut PairStatistics, seed: u64, stream_id: u64, n: u64) {
        match *self {
            NoiseModel::Rtw { r } => fill(stats, &mut RtwPairSource::new(r, seed, stream_id), n),
            NoiseModel::Gaussian { rho } => {
                let mut src = GaussianSignSource::new(rho, seed, stream_id).expect("validated");
                fill(stats, &mut src, n)
            }
        }
    }
}

fn stream_id(pairing: u64, chunk: u64) -> u64 {
    (pairing << 40) | chunk
}

/// Chunked, parallel Monte Carlo run for one detector pairing.
///
/// Chunk `k` of pairing `p` draws from stream `(seed, p·2⁴⁰ + k)`. Runs on
/// the current rayon pool.
pub fn mc_pair_run(
    noise: &NoiseModel,
    seed: u64,
    pairing: u64,
    theta_i: Angle,
    theta_j: Angle,
    n_trials: u64,
) -> Result<PairStatistics> {
    if n_trials == 0 {
        return Err(Error::EmptyRun);
    }
    let chunks = n_trials.div_ceil(CHUNK_SIZE);
    let parts: Vec<PairStatistics> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let n = CHUNK_SIZE.min(n_trials - k * CHUNK_SIZE);
            let mut stats = PairStatistics::new(theta_i, theta_j);
            noise.run_chunk(&mut stats, seed, stream_id(pairing, k), n);
            stats
        })
        .collect();
    let mut total = PairStatistics::new(theta_i, theta_j);
    for part in &parts {
        total.merge(part);
    }
    Ok(total)
}

/// Empirical `P(V,V), P(H,H), P(V,H), P(H,V)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoincidenceProbabilities {
    pub p_vv: f64,
    pub p_hh: f64,
    pub p_vh: f64,
    pub p_hv: f64,
}

impl CoincidenceProbabilities {
    pub fn aligned(&self) -> f64 {
        self.p_vv + self.p_hh
    }

    pub fn mismatched(&self) -> f64 {
        self.p_vh + self.p_hv
    }
}

/// `P_xy = 2·Σ intensity_xy / N`.
pub fn estimate_p(stats: &PairStatistics) -> Result<CoincidenceProbabilities> {
    if stats.total_trials == 0 {
        return Err(Error::EmptyRun);
    }
    let scale = 2.0 / stats.total_trials as f64;
    let p = stats.intensity_sum.map(|s| s * scale);
    Ok(CoincidenceProbabilities {
        p_vv: p[0],
        p_hh: p[1],
        p_vh: p[2],
        p_hv: p[3],
    })
}

/// Mean per-trial score and its standard error.
///
/// For a fixed detector pairing the score depends only on the label, so the
/// sample variance is taken between the label groups. This keeps the
/// variance exactly zero when every trial lands in one group.
pub fn mc_e(stats: &PairStatistics) -> Result<(f64, f64)> {
    let n = stats.total_trials;
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let nf = n as f64;
    let mean = stats.score_sum / nf;
    let mut ss = 0.0;
    for (k, label) in CoincidenceLabel::ALL.iter().enumerate() {
        let count = stats.trial_count[k];
        if count == 0 {
            continue;
        }
        let sign = if label.is_aligned() { 2.0 } else { -2.0 };
        let u = sign * stats.intensity_sum[k] / count as f64;
        ss += count as f64 * (u - mean) * (u - mean);
    }
    let var = ss / (nf - 1.0);
    Ok((mean, (var / nf).sqrt()))
}

/// A Monte Carlo CHSH run together with its per-pairing accumulators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloChsh {
    pub result: ChshResult,
    pub pairs: [PairStatistics; 4],
}

/// Monte Carlo `S` from four independent pairing runs.
///
/// The standard error is the root-sum-square of the four estimator errors.
pub fn mc_chsh(
    noise: &NoiseModel,
    angles: &AngleSet,
    n_trials_per_pair: u64,
    seed: u64,
) -> Result<ChshResult> {
    mc_chsh_detailed(noise, angles, n_trials_per_pair, seed).map(|m| m.result)
}

pub fn mc_chsh_detailed(
    noise: &NoiseModel,
    angles: &AngleSet,
    n_trials_per_pair: u64,
    seed: u64,
) -> Result<MonteCarloChsh> {
    match n_trials_per_pair {
        0 => return Err(Error::EmptyRun),
        1 => return Err(Error::InsufficientData { needed: 2, got: 1 }),
        _ => {}
    }
    let mut pairs = Vec::with_capacity(4);
    for p in Pairing::ALL {
        let (i, j) = angles.pairing(p);
        pairs.push(mc_pair_run(
            noise,
            seed,
            p.index(),
            i,
            j,
            n_trials_per_pair,
        )?);
    }
    let mut e = [0.0; 4];
    let mut var = 0.0;
    for (k, stats) in pairs.iter().enumerate() {
        let (mean, se) = mc_e(stats)?;
        e[k] = mean;
        var += se * se;
    }
    Ok(MonteCarloChsh {
        result: ChshResult::from_estimators(e, var.sqrt(), ChshMode::MonteCarlo),
        pairs: pairs.try_into().expect("four pairings"),
    })
}
