use std::f64::consts::SQRT_2;
use std::fmt;

use serde_json::{json, Value};

use classical_bell::{
    analytic_chsh, analytic_e, anti_violation_threshold, calibrate_gaussian, empirical_correlation,
    estimate_p, gaussian_sign_correlation, grid_search, mc_chsh, mc_chsh_detailed, mc_e, refine,
    violation_threshold, AngleSet, ChshResult, CorrelationCoefficient, Error, GaussianSignSource,
    NoiseModel, OptimizationResult, PairSource, Pairing, CLASSICAL_BOUND, PRINTED_THRESHOLD,
    QUANTUM_REFERENCE,
};

use crate::args::{AngleMode, Command, SourceKind};
use crate::output::{opt_csv, opt_sig6, sig6, Report, Table};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments; exit code 2.
    Invalid(String),
    /// A numerical procedure failed; exit code 3.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid arguments: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::CalibrationFailed { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

type CmdResult = Result<Report, CliError>;

const DISCREPANCY_NOTE: &str =
    "S = sqrt(2) + r at the standard angles crosses 2 at r = 2 - sqrt(2) \
     = 0.585786; the value 0.656 printed alongside that formula does not follow from it";

fn corr(r: f64) -> Result<CorrelationCoefficient, CliError> {
    Ok(CorrelationCoefficient::new(r)?)
}

fn need_trials(trials: u64) -> Result<(), CliError> {
    if trials < 2 {
        return Err(CliError::Invalid(format!(
            "--trials must be at least 2, got {trials}"
        )));
    }
    Ok(())
}

fn angles_json(a: &AngleSet) -> Value {
    json!(a.degrees())
}

fn estimators_json(res: &ChshResult) -> Value {
    json!({"e_ab": res.e_ab, "e_ad": res.e_ad, "e_cb": res.e_cb, "e_cd": res.e_cd})
}

/// Independent per-row seed for sweeps (SplitMix64 finalizer).
pub fn row_seed(seed: u64, row: u64) -> u64 {
    let mut z = seed.wrapping_add(row.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run(command: &Command, seed: u64) -> CmdResult {
    match command {
        Command::Analytic { angles, corr: r } => analytic(angles, *r),
        Command::Simulate {
            angles,
            corr: r,
            trials,
            source,
            rho,
            calibration_tolerance,
        } => simulate(
            angles,
            *r,
            *trials,
            *source,
            *rho,
            *calibration_tolerance,
            seed,
        ),
        Command::SweepR {
            angles,
            angle_mode,
            r_from,
            r_to,
            r_step,
            trials,
            analytic_only,
        } => sweep_r(
            angles,
            *angle_mode,
            (*r_from, *r_to, *r_step),
            *trials,
            *analytic_only,
            seed,
        ),
        Command::Optimize {
            corr: r,
            grid_step,
            tolerance,
            trace,
        } => optimize(*r, *grid_step, *tolerance, *trace),
        Command::Calibrate {
            target,
            tolerance,
            trials,
        } => calibrate(*target, *tolerance, *trials, seed),
        Command::Threshold { angles } => threshold(angles),
    }
}

fn analytic(angles: &AngleSet, r: f64) -> CmdResult {
    let rc = corr(r)?;
    let res = analytic_chsh(angles, rc);
    let thr = violation_threshold(angles);
    let anti = anti_violation_threshold(angles);

    let mut rep = Report::new("analytic", json!({"angles": angles_json(angles), "r": r}));
    rep.field("estimators", estimators_json(&res));
    rep.field("s", res.s_value);
    rep.field("violated", res.violated);
    rep.field(
        "threshold",
        json!({
            "r_star": thr,
            "r_star_anti": anti,
            "printed_value": PRINTED_THRESHOLD,
            "note": DISCREPANCY_NOTE,
        }),
    );
    rep.field("classical_bound", CLASSICAL_BOUND);
    rep.field("quantum_reference", QUANTUM_REFERENCE);

    rep.table = Table {
        header: vec![
            "r",
            "e_ab",
            "e_ad",
            "e_cb",
            "e_cd",
            "s",
            "violated",
            "r_star",
            "r_star_anti",
        ],
        rows: vec![vec![
            r.to_string(),
            res.e_ab.to_string(),
            res.e_ad.to_string(),
            res.e_cb.to_string(),
            res.e_cd.to_string(),
            res.s_value.to_string(),
            res.violated.to_string(),
            opt_csv(thr),
            opt_csv(anti),
        ]],
    };
    for (name, e) in [
        ("E(A,B)", res.e_ab),
        ("E(A,D)", res.e_ad),
        ("E(C,B)", res.e_cb),
        ("E(C,D)", res.e_cd),
    ] {
        rep.line(name, sig6(e));
    }
    rep.line("S", sig6(res.s_value));
    rep.line("violated", res.violated.to_string());
    rep.line("threshold r*", opt_sig6(thr));
    rep.line("threshold r* (anti-correlated branch)", opt_sig6(anti));
    rep.line(
        "printed threshold",
        format!("{} ({DISCREPANCY_NOTE})", PRINTED_THRESHOLD),
    );
    rep.line("classical bound", sig6(CLASSICAL_BOUND));
    rep.line("quantum reference", sig6(QUANTUM_REFERENCE));
    Ok(rep)
}

fn gaussian_model(
    r: CorrelationCoefficient,
    rho: Option<f64>,
    tolerance: f64,
) -> Result<NoiseModel, CliError> {
    let rho = match rho {
        Some(rho) => rho,
        None => calibrate_gaussian(r, tolerance)?,
    };
    Ok(NoiseModel::gaussian(rho)?)
}

fn simulate(
    angles: &AngleSet,
    r: f64,
    trials: u64,
    source: SourceKind,
    rho: Option<f64>,
    calibration_tolerance: f64,
    seed: u64,
) -> CmdResult {
    let rc = corr(r)?;
    need_trials(trials)?;
    let noise = match source {
        SourceKind::Rtw => NoiseModel::rtw(rc),
        SourceKind::Gaussian => gaussian_model(rc, rho, calibration_tolerance)?,
    };
    let eff_r = noise.effective_r();
    let mc = mc_chsh_detailed(&noise, angles, trials, seed)?;
    let res = mc.result;
    let reference = analytic_chsh(angles, eff_r);
    let z = (res.std_err > 0.0).then(|| (res.s_value - reference.s_value) / res.std_err);

    let mut config = json!({
        "angles": angles_json(angles),
        "r": r,
        "trials": trials,
        "seed": seed,
        "source": match source { SourceKind::Rtw => "rtw", SourceKind::Gaussian => "gaussian" },
    });
    if let NoiseModel::Gaussian { rho } = noise {
        config["rho"] = json!(rho);
        config["calibration_tolerance"] = json!(calibration_tolerance);
    }
    let mut rep = Report::new("simulate", config);

    let mut pairs = Vec::new();
    let mut rows = Vec::new();
    for (p, stats) in Pairing::ALL.iter().zip(&mc.pairs) {
        let (e, se) = mc_e(stats)?;
        let probs = estimate_p(stats)?;
        let e_an = analytic_e(
            classical_bell::Angle::deg(stats.theta_i.degrees() - stats.theta_j.degrees()),
            eff_r,
        );
        pairs.push(json!({
            "pairing": p.as_str(),
            "theta_i": stats.theta_i.degrees(),
            "theta_j": stats.theta_j.degrees(),
            "e": e,
            "std_err": se,
            "e_analytic": e_an,
            "p_vv": probs.p_vv,
            "p_hh": probs.p_hh,
            "p_vh": probs.p_vh,
            "p_hv": probs.p_hv,
            "counts": {
                "VV": stats.trial_count[0],
                "HH": stats.trial_count[1],
                "VH": stats.trial_count[2],
                "HV": stats.trial_count[3],
            },
        }));
        rows.push(vec![
            p.as_str().to_owned(),
            stats.theta_i.degrees().to_string(),
            stats.theta_j.degrees().to_string(),
            e.to_string(),
            se.to_string(),
            e_an.to_string(),
            probs.p_vv.to_string(),
            probs.p_hh.to_string(),
            probs.p_vh.to_string(),
            probs.p_hv.to_string(),
        ]);
        rep.line(
            &format!("E({})", p.as_str()),
            format!("{} ± {} (analytic {})", sig6(e), sig6(se), sig6(e_an)),
        );
    }

    rep.field("effective_r", eff_r.value());
    rep.field("s_mc", res.s_value);
    rep.field("std_err", res.std_err);
    rep.field("violated", res.violated);
    rep.field("s_analytic", reference.s_value);
    rep.field("z_score", z);
    rep.field("pairs", Value::Array(pairs));
    rep.field("classical_bound", CLASSICAL_BOUND);
    rep.field("quantum_reference", QUANTUM_REFERENCE);

    rep.table = Table {
        header: vec![
            "pairing",
            "theta_i",
            "theta_j",
            "e",
            "std_err",
            "e_analytic",
            "p_vv",
            "p_hh",
            "p_vh",
            "p_hv",
        ],
        rows,
    };
    rep.line("effective r", sig6(eff_r.value()));
    rep.line(
        "S (Monte Carlo)",
        format!("{} ± {}", sig6(res.s_value), sig6(res.std_err)),
    );
    rep.line("S (analytic)", sig6(reference.s_value));
    rep.line("z-score", opt_sig6(z));
    rep.line("violated", res.violated.to_string());
    Ok(rep)
}

fn sweep_values(from: f64, to: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !step.is_finite() || step <= 0.0 {
        return Err(CliError::Invalid(format!("--step must be > 0, got {step}")));
    }
    if from.is_nan() || to.is_nan() || from > to {
        return Err(CliError::Invalid(format!(
            "empty range: --from {from} > --to {to}"
        )));
    }
    corr(from)?;
    corr(to)?;
    let mut values = Vec::new();
    for k in 0u64.. {
        let v = ((from + k as f64 * step) * 1e12).round() / 1e12;
        if v > to + 1e-12 {
            break;
        }
        values.push(v.min(1.0));
    }
    Ok(values)
}

fn best_angles_for(r: f64) -> Result<AngleSet, CliError> {
    let rc = corr(r)?;
    let grid = grid_search(rc, 7.5)?;
    Ok(refine(rc, grid.best_angles, 1e-12).best_angles)
}

fn sweep_r(
    angles: &AngleSet,
    mode: AngleMode,
    (from, to, step): (f64, f64, f64),
    trials: u64,
    analytic_only: bool,
    seed: u64,
) -> CmdResult {
    let values = sweep_values(from, to, step)?;
    if !analytic_only {
        need_trials(trials)?;
    }
    let (pos, neg) = match mode {
        AngleMode::Fixed => (*angles, *angles),
        AngleMode::SignMatched => (best_angles_for(0.5)?, best_angles_for(-0.5)?),
    };

    let mut config = json!({
        "angle_mode": match mode { AngleMode::Fixed => "fixed", AngleMode::SignMatched => "sign-matched" },
        "from": from,
        "to": to,
        "step": step,
        "trials": trials,
        "seed": seed,
        "analytic_only": analytic_only,
    });
    match mode {
        AngleMode::Fixed => config["angles"] = angles_json(angles),
        AngleMode::SignMatched => {
            config["angles_positive"] = angles_json(&pos);
            config["angles_negative"] = angles_json(&neg);
        }
    }
    let mut rep = Report::new("sweep-r", config);

    let mut rows_json = Vec::new();
    let mut rows = Vec::new();
    for (k, &r) in values.iter().enumerate() {
        let rc = corr(r)?;
        let set = if r >= 0.0 { pos } else { neg };
        let an = analytic_chsh(&set, rc);
        let mc = if analytic_only {
            None
        } else {
            Some(mc_chsh(
                &NoiseModel::rtw(rc),
                &set,
                trials,
                row_seed(seed, k as u64),
            )?)
        };
        rows_json.push(json!({
            "r": r,
            "s_analytic": an.s_value,
            "s_mc": mc.map(|m| m.s_value),
            "std_err": mc.map(|m| m.std_err),
            "violated_analytic": an.violated,
            "violated_mc": mc.map(|m| m.violated),
        }));
        rows.push(vec![
            r.to_string(),
            an.s_value.to_string(),
            opt_csv(mc.map(|m| m.s_value)),
            opt_csv(mc.map(|m| m.std_err)),
            an.violated.to_string(),
            mc.map(|m| m.violated.to_string()).unwrap_or_default(),
        ]);
        rep.line(
            &format!("r = {}", sig6(r)),
            match mc {
                Some(m) => format!(
                    "S = {} (MC {} ± {}), violated = {}",
                    sig6(an.s_value),
                    sig6(m.s_value),
                    sig6(m.std_err),
                    an.violated
                ),
                None => format!("S = {}, violated = {}", sig6(an.s_value), an.violated),
            },
        );
    }
    rep.field("rows", Value::Array(rows_json));
    rep.table = Table {
        header: vec![
            "r",
            "s_analytic",
            "s_mc",
            "std_err",
            "violated_analytic",
            "violated_mc",
        ],
        rows,
    };
    Ok(rep)
}

fn optimization_json(res: &OptimizationResult) -> Value {
    json!({
        "best_angles": angles_json(&res.best_angles),
        "best_s": res.best_s,
        "evaluations": res.evaluations,
    })
}

fn optimize(r: f64, grid_step: f64, tolerance: f64, trace: bool) -> CmdResult {
    let rc = corr(r)?;
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(CliError::Invalid(format!(
            "--tolerance must be > 0, got {tolerance}"
        )));
    }
    let grid = grid_search(rc, grid_step)?;
    let refined = refine(rc, grid.best_angles, tolerance);
    let bound = SQRT_2 + r.abs();

    let mut rep = Report::new(
        "optimize",
        json!({"r": r, "grid_step": grid_step, "tolerance": tolerance, "trace": trace}),
    );
    rep.field("best_angles", angles_json(&refined.best_angles));
    rep.field("best_s", refined.best_s);
    rep.field("evaluations", grid.evaluations + refined.evaluations);
    rep.field("violated", refined.best_s > CLASSICAL_BOUND);
    rep.field("conjectured_max", bound);
    rep.field("gap_to_conjectured_max", bound - refined.best_s);
    rep.field("grid", optimization_json(&grid));
    rep.field("refined", optimization_json(&refined));
    if trace {
        let steps: Vec<Value> = refined
            .trace
            .iter()
            .flatten()
            .map(|t| json!({"angles": angles_json(&t.angles), "s": t.s}))
            .collect();
        rep.field("trace", Value::Array(steps));
    }

    rep.table = Table {
        header: vec![
            "r",
            "theta_a",
            "theta_b",
            "theta_c",
            "theta_d",
            "best_s",
            "evaluations",
            "conjectured_max",
        ],
        rows: vec![{
            let mut row = vec![r.to_string()];
            row.extend(refined.best_angles.degrees().iter().map(f64::to_string));
            row.push(refined.best_s.to_string());
            row.push((grid.evaluations + refined.evaluations).to_string());
            row.push(bound.to_string());
            row
        }],
    };
    rep.line(
        "best angles",
        refined.best_angles.degrees().map(sig6).join(", "),
    );
    rep.line("best S", sig6(refined.best_s));
    rep.line("grid S", sig6(grid.best_s));
    rep.line("sqrt(2) + |r|", sig6(bound));
    rep.line(
        "evaluations",
        (grid.evaluations + refined.evaluations).to_string(),
    );
    rep.line("violated", (refined.best_s > CLASSICAL_BOUND).to_string());
    Ok(rep)
}

fn calibrate(target: f64, tolerance: f64, trials: u64, seed: u64) -> CmdResult {
    let rc = corr(target)?;
    need_trials(trials)?;
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(CliError::Invalid(format!(
            "--tolerance must be > 0, got {tolerance}"
        )));
    }
    let rho = calibrate_gaussian(rc, tolerance)?;
    let achieved = gaussian_sign_correlation(rho);
    let mut src = GaussianSignSource::new(rho, seed, 0)?;
    let draws: Vec<_> = (0..trials).map(|_| src.next_trial()).collect();
    let (mc_r, mc_se) = empirical_correlation(&draws)?;

    let mut rep = Report::new(
        "calibrate",
        json!({"target": target, "tolerance": tolerance, "trials": trials, "seed": seed}),
    );
    rep.field("rho", rho);
    rep.field("achieved", achieved);
    rep.field("residual", achieved - target);
    rep.field("mc_achieved", mc_r);
    rep.field("mc_std_err", mc_se);
    rep.table = Table {
        header: vec![
            "target",
            "rho",
            "achieved",
            "residual",
            "mc_achieved",
            "mc_std_err",
        ],
        rows: vec![vec![
            target.to_string(),
            rho.to_string(),
            achieved.to_string(),
            (achieved - target).to_string(),
            mc_r.to_string(),
            mc_se.to_string(),
        ]],
    };
    rep.line("rho", sig6(rho));
    rep.line("achieved sign correlation", sig6(achieved));
    rep.line("residual", sig6(achieved - target));
    rep.line(
        "simulated sign correlation",
        format!("{} ± {}", sig6(mc_r), sig6(mc_se)),
    );
    Ok(rep)
}

fn threshold(angles: &AngleSet) -> CmdResult {
    let thr = violation_threshold(angles);
    let anti = anti_violation_threshold(angles);
    let closed_form = 2.0 - SQRT_2;
    let mut rep = Report::new("threshold", json!({"angles": angles_json(angles)}));
    rep.field("r_star", thr);
    rep.field("r_star_anti", anti);
    rep.field("standard_angles_closed_form", closed_form);
    rep.field("printed_value", PRINTED_THRESHOLD);
    rep.field("note", DISCREPANCY_NOTE);
    rep.table = Table {
        header: vec![
            "r_star",
            "r_star_anti",
            "standard_angles_closed_form",
            "printed_value",
        ],
        rows: vec![vec![
            opt_csv(thr),
            opt_csv(anti),
            closed_form.to_string(),
            PRINTED_THRESHOLD.to_string(),
        ]],
    };
    rep.line("r*", opt_sig6(thr));
    rep.line("r* (anti-correlated branch)", opt_sig6(anti));
    rep.line("2 - sqrt(2)", sig6(closed_form));
    rep.line(
        "printed value",
        format!("{PRINTED_THRESHOLD} ({DISCREPANCY_NOTE})"),
    );
    Ok(rep)
}
