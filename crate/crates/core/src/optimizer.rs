//! Search over the four detector angles for the largest analytic `S` at a
//! fixed noise correlation.
//!
//! `S` has period 180° in every angle and is invariant under a common
//! rotation, so the lattice search pins `θA = 0` and scans the other three
//! over `[0°, 180°)`. [`refine`] then polishes a point with a derivative-free
//! coordinate search; the absolute values in `S` make it non-smooth where an
//! estimator combination changes sign.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{analytic_chsh, AngleSet};
use crate::noise::CorrelationCoefficient;
use crate::polarization::Angle;

const INITIAL_BRACKET_DEG: f64 = 10.0;
const MIN_BRACKET_DEG: f64 = 1e-7;
const GOLDEN_ITERATIONS: usize = 80;
const MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceStep {
    pub angles: AngleSet,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub best_angles: AngleSet,
    pub best_s: f64,
    pub evaluations: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceStep>>,
}

fn objective(r: CorrelationCoefficient, x: [f64; 4]) -> f64 {
    analytic_chsh(&AngleSet::new(x[0], x[1], x[2], x[3]), r).s_value
}

/// Better of two lattice candidates: larger `S`, then the smaller index
/// tuple. Associative, so the parallel reduction is deterministic.
fn better(a: (f64, [usize; 3]), b: (f64, [usize; 3])) -> (f64, [usize; 3]) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Exhaustive evaluation on `θA = 0`, `θB, θC, θD ∈ {0, step, …} ∩ [0°, 180°)`.
pub fn grid_search(r: CorrelationCoefficient, step_deg: f64) -> Result<OptimizationResult> {
    if !(step_deg > 0.0 && step_deg <= 45.0) {
        return Err(Error::invalid(
            "step",
            format!("{step_deg}° is outside (0°, 45°]"),
        ));
    }
    let lattice: Vec<f64> = (0..)
        .map(|k| k as f64 * step_deg)
        .take_while(|&v| v < 180.0 - 1e-9)
        .collect();
    let n = lattice.len();

    let (best_s, [b, c, d]) = (0..n)
        .into_par_iter()
        .map(|ib| {
            let mut best = (f64::NEG_INFINITY, [usize::MAX; 3]);
            for ic in 0..n {
                for id in 0..n {
                    let s = objective(r, [0.0, lattice[ib], lattice[ic], lattice[id]]);
                    best = better(best, (s, [ib, ic, id]));
                }
            }
            best
        })
        .reduce(|| (f64::NEG_INFINITY, [usize::MAX; 3]), better);

    Ok(OptimizationResult {
        best_angles: AngleSet::new(0.0, lattice[b], lattice[c], lattice[d]),
        best_s,
        evaluations: (n * n * n) as u64,
        trace: None,
    })
}

/// Golden-section maximization of `f` on `[lo, hi]`.
fn golden_max(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..GOLDEN_ITERATIONS {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Coordinate-wise local search from `start`.
///
/// Each sweep runs a golden-section line search over `±h` around every
/// angle and keeps strict improvements. When a sweep gains no more than
/// `tolerance`, `h` is halved; the search stops once `h` falls below 1e-7°.
/// The incumbent never gets worse and the trace records every accepted step.
pub fn refine(r: CorrelationCoefficient, start: AngleSet, tolerance: f64) -> OptimizationResult {
    let mut x = start.degrees();
    let mut best = objective(r, x);
    let mut evaluations = 1u64;
    let mut trace = vec![TraceStep {
        angles: start,
        s: best,
    }];
    let tolerance = if tolerance > 0.0 {
        tolerance
    } else {
        f64::EPSILON
    };

    let mut h = INITIAL_BRACKET_DEG;
    for _ in 0..MAX_SWEEPS {
        let before = best;
        for i in 0..4 {
            let centre = x[i];
            let mut probe = x;
            let (t, _) = golden_max(
                |t| {
                    evaluations += 1;
                    probe[i] = t;
                    objective(r, probe)
                },
                centre - h,
                centre + h,
            );
            let mut cand = x;
            cand[i] = Angle::deg(t).degrees();
            let s = objective(r, cand);
            evaluations += 1;
            // ignore last-ulp wobble around a stationary point
            if s > best + 4.0 * f64::EPSILON * best.abs().max(1.0) {
                x = cand;
                best = s;
                trace.push(TraceStep {
                    angles: AngleSet::new(x[0], x[1], x[2], x[3]),
                    s,
                });
            }
        }
        if best - before <= tolerance {
            if h <= MIN_BRACKET_DEG {
                break;
            }
            h *= 0.5;
        }
    }

    OptimizationResult {
        best_angles: AngleSet::new(x[0], x[1], x[2], x[3]),
        best_s: best,
        evaluations,
        trace: Some(trace),
    }
}
