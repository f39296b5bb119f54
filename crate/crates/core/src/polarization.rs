//! Classical polarized fields and detector coincidences.
//!
//! A unit field at angle θ relative to the detector axes decomposes as
//! `E = a_V cos θ + a_H sin θ`. The correlation field of two detectors is the
//! dot product of their projected fields, `cos(θA − θB)`, and the coincidence
//! intensity is half its square.
//!
//! The angle entering the field combines the detector orientation Φ with the
//! wave's polarization angle ξ as `θ = Φ − ξ`, where a vertically polarized
//! wave has ξ = 0° and a horizontally polarized one ξ = 90°. Aligned trials
//! therefore score `½cos²(ΔΦ)` and mismatched trials `½sin²(ΔΦ)`.
//!
//! Note that applying Malus's law in each arm separately and multiplying,
//! `cos²θA · cos²θB`, is a different detector model: it is not a function of
//! `θA − θB` alone and does not reproduce the `½cos²(θA − θB)` coincidence
//! law used here.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::TrialPolarizations;

/// An orientation in degrees, stored normalized to `[0, 360)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Angle(f64);

impl Angle {
    /// Panics on non-finite input; use [`Angle::try_deg`] for external data.
    pub fn deg(degrees: f64) -> Self {
        Self::try_deg(degrees).expect("angle must be finite")
    }

    pub fn try_deg(degrees: f64) -> Result<Self> {
        if !degrees.is_finite() {
            return Err(Error::invalid("angle", format!("{degrees} is not finite")));
        }
        let mut d = degrees.rem_euclid(360.0);
        if d >= 360.0 {
            d = 0.0;
        }
        Ok(Self(d))
    }

    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0.to_radians()
    }

    pub fn rotated(self, offset_deg: f64) -> Self {
        Self::deg(self.0 + offset_deg)
    }
}

impl TryFrom<f64> for Angle {
    type Error = Error;

    fn try_from(d: f64) -> Result<Self> {
        Self::try_deg(d)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}°", self.0)
    }
}

impl FromStr for Angle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v: f64 = s
            .trim()
            .trim_end_matches('°')
            .parse()
            .map_err(|_| Error::invalid("angle", format!("cannot parse `{s}`")))?;
        Self::try_deg(v)
    }
}

/// `(cos x, sin x)` for `x` in degrees.
///
/// The argument is reduced to `[-45°, 45°]` around the nearest multiple of
/// 90° first, so quarter turns give exact zeros and ones.
pub(crate) fn cos_sin_deg(x: f64) -> (f64, f64) {
    let x = x.rem_euclid(360.0);
    let q = (x / 90.0).round();
    let rem = (x - 90.0 * q).to_radians();
    let (s, c) = rem.sin_cos();
    match (q as i64).rem_euclid(4) {
        0 => (c, s),
        1 => (-s, c),
        2 => (-c, -s),
        _ => (s, -c),
    }
}

pub(crate) fn cos_deg(x: f64) -> f64 {
    cos_sin_deg(x).0
}

/// Unit field decomposed on the detector's vertical and horizontal axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldVector {
    pub e_v: f64,
    pub e_h: f64,
}

impl FieldVector {
    pub fn dot(self, other: FieldVector) -> f64 {
        self.e_v * other.e_v + self.e_h * other.e_h
    }

    pub fn norm_sqr(self) -> f64 {
        self.dot(self)
    }
}

pub fn field(theta: Angle) -> FieldVector {
    let (c, s) = cos_sin_deg(theta.degrees());
    FieldVector { e_v: c, e_h: s }
}

/// `field(a) · field(b)`, evaluated as `cos|a − b|`.
pub fn correlation_field(theta_a: Angle, theta_b: Angle) -> f64 {
    cos_deg((theta_a.degrees() - theta_b.degrees()).abs())
}

/// `½ cos²(θA − θB)`, always in `[0, ½]`.
pub fn coincidence_intensity(theta_a: Angle, theta_b: Angle) -> f64 {
    let p = correlation_field(theta_a, theta_b);
    0.5 * p * p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CoincidenceLabel {
    VV,
    HH,
    VH,
    HV,
}

impl CoincidenceLabel {
    pub const ALL: [CoincidenceLabel; 4] = [
        CoincidenceLabel::VV,
        CoincidenceLabel::HH,
        CoincidenceLabel::VH,
        CoincidenceLabel::HV,
    ];

    pub fn of(trial: TrialPolarizations) -> Self {
        match (trial.s1 > 0, trial.s2 > 0) {
            (true, true) => CoincidenceLabel::VV,
            (false, false) => CoincidenceLabel::HH,
            (true, false) => CoincidenceLabel::VH,
            (false, true) => CoincidenceLabel::HV,
        }
    }

    pub fn is_aligned(self) -> bool {
        matches!(self, CoincidenceLabel::VV | CoincidenceLabel::HH)
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CoincidenceLabel::VV => "VV",
            CoincidenceLabel::HH => "HH",
            CoincidenceLabel::VH => "VH",
            CoincidenceLabel::HV => "HV",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub label: CoincidenceLabel,
    pub intensity: f64,
}

/// Coincidence outcome of one trial with detectors at `theta_a` and `theta_b`.
pub fn trial_outcome(trial: TrialPolarizations, theta_a: Angle, theta_b: Angle) -> TrialOutcome {
    let eff_a = theta_a.degrees() - trial.pol1().angle_deg();
    let eff_b = theta_b.degrees() - trial.pol2().angle_deg();
    let p = cos_deg(eff_a - eff_b);
    TrialOutcome {
        label: CoincidenceLabel::of(trial),
        intensity: 0.5 * p * p,
    }
}
