//! Classical Bell-test simulation driven by correlated random telegraph noise.
//!
//! Two classical, linearly polarized waves have their polarization switched
//! between vertical and horizontal by a pair of correlated binary noise
//! signals. Detectors at four orientations measure coincidence intensities,
//! from which the CHSH quantity
//!
//! ```text
//! S = |E(A,B) - E(A,D)| + |E(C,B) + E(C,D)|
//! ```
//!
//! is formed. With `E(Δ) = ½cos(2Δ) + r/2` the standard angle set
//! (0°, 22.5°, 45°, 67.5°) gives `S = √2 + r`, which exceeds the classical
//! bound of 2 once `r > 2 − √2`.
//!
//! The crate is split into:
//!
//! * [`noise`]: correlated ±1 sources and their conditional statistics.
//! * [`polarization`]: field vectors, detector angles and per-trial outcomes.
//! * [`estimators`]: analytic and Monte Carlo coincidence probabilities,
//!   `E`, `S` and the violation threshold.
//! * [`optimizer`]: search over detector angles for the largest `S`.

pub mod error;
pub mod estimators;
pub mod noise;
pub mod optimizer;
pub mod polarization;

pub use error::{Error, Result};
pub use estimators::{
    accumulate_pairs, analytic_chsh, analytic_e, analytic_p_aligned, analytic_p_mismatched,
    anti_violation_threshold, estimate_p, mc_chsh, mc_chsh_detailed, mc_e, mc_pair_run,
    violation_threshold, AngleSet, ChshMode, ChshResult, CoincidenceProbabilities, MonteCarloChsh,
    NoiseModel, PairStatistics, Pairing, CHUNK_SIZE,
};
pub use noise::{
    calibrate_gaussian, conditional_probs, corr_from_conditional, empirical_correlation,
    gaussian_sign_correlation, ConditionalProbabilities, CorrelationCoefficient,
    GaussianSignSource, PairSource, Polarization, RtwPairSource, TrialPolarizations,
    DEFAULT_CALIBRATION_TOLERANCE,
};
pub use optimizer::{grid_search, refine, OptimizationResult, TraceStep};
pub use polarization::{
    coincidence_intensity, correlation_field, field, trial_outcome, Angle, CoincidenceLabel,
    FieldVector, TrialOutcome,
};

/// Upper bound of `S` for any local model with outcomes in [-1, 1].
pub const CLASSICAL_BOUND: f64 = 2.0;

/// Reference value 2√2 quoted for entangled photon pairs. Never computed
/// from a quantum model here; reported for comparison only.
pub const QUANTUM_REFERENCE: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Threshold as printed in the original analysis. The closed form
/// `√2 + r > 2` actually gives `2 − √2 ≈ 0.5858`; this constant is kept
/// so reports can flag the discrepancy.
pub const PRINTED_THRESHOLD: f64 = 0.656;
