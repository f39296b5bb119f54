use classical_bell::{
    analytic_e, calibrate_gaussian, gaussian_sign_correlation, mc_e, mc_pair_run, Angle,
    CorrelationCoefficient, GaussianSignSource, NoiseModel, PairSource, RtwPairSource,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn r(v: f64) -> CorrelationCoefficient {
    CorrelationCoefficient::new(v).unwrap()
}

#[derive(Default)]
struct Joint {
    pp: u64,
    mm: u64,
    pm: u64,
    mp: u64,
}

fn tally<S: PairSource>(src: &mut S, n: usize) -> Joint {
    let mut j = Joint::default();
    for _ in 0..n {
        let t = src.next_trial();
        match (t.s1 > 0, t.s2 > 0) {
            (true, true) => j.pp += 1,
            (false, false) => j.mm += 1,
            (true, false) => j.pm += 1,
            (false, true) => j.mp += 1,
        }
    }
    j
}

#[test]
fn conditional_symmetry_and_fair_marginals() {
    let n = 200_000;
    for rv in [-0.9, -0.3, 0.0, 0.6, 0.9] {
        let j = tally(&mut RtwPairSource::new(r(rv), 2024, 0), n);
        let s2_plus = (j.pp + j.mp) as f64;
        let s2_minus = (j.mm + j.pm) as f64;
        let f_pp = j.pp as f64 / s2_plus;
        let f_mm = j.mm as f64 / s2_minus;
        let p = (1.0 + rv) / 2.0;
        let se = (p * (1.0 - p) * (1.0 / s2_plus + 1.0 / s2_minus)).sqrt();
        assert!(
            (f_pp - f_mm).abs() <= 5.0 * se + 1e-12,
            "r = {rv}: {f_pp} vs {f_mm}"
        );

        let nf = n as f64;
        let mean_s1 = ((j.pp + j.pm) as f64 - (j.mm + j.mp) as f64) / nf;
        let mean_s2 = (s2_plus - s2_minus) / nf;
        assert!(
            mean_s1.abs() <= 5.0 / nf.sqrt(),
            "r = {rv}: mean s1 {mean_s1}"
        );
        assert!(
            mean_s2.abs() <= 5.0 / nf.sqrt(),
            "r = {rv}: mean s2 {mean_s2}"
        );
    }
}

#[test]
fn gaussian_source_is_fair_and_matches_sign_correlation() {
    let n = 400_000;
    let rho = 0.35;
    let j = tally(&mut GaussianSignSource::new(rho, 8, 0).unwrap(), n);
    let nf = n as f64;
    let r_hat = (j.pp + j.mm) as f64 / nf - (j.pm + j.mp) as f64 / nf;
    let target = gaussian_sign_correlation(rho);
    let se = ((1.0 - target * target) / nf).sqrt();
    assert!((r_hat - target).abs() <= 5.0 * se, "{r_hat} vs {target}");
    let mean_s1 = ((j.pp + j.pm) as f64 - (j.mm + j.mp) as f64) / nf;
    assert!(mean_s1.abs() <= 5.0 / nf.sqrt());
}

#[test]
fn monte_carlo_estimator_tracks_closed_form() {
    let deltas = [0.0, 22.5, 45.0, 67.5, 90.0, 135.0];
    let corrs = [-1.0, -0.6, 0.0, 0.4, 0.8, 1.0];
    let seeds = 0..6u64;
    let (mut total, mut within) = (0, 0);
    for &delta in &deltas {
        for &rv in &corrs {
            let target = analytic_e(Angle::deg(delta), r(rv));
            for seed in seeds.clone() {
                let stats = mc_pair_run(
                    &NoiseModel::rtw(r(rv)),
                    seed,
                    0,
                    Angle::deg(delta),
                    Angle::deg(0.0),
                    100_000,
                )
                .unwrap();
                let (e, se) = mc_e(&stats).unwrap();
                total += 1;
                if (e - target).abs() <= 5.0 * se + 1e-12 {
                    within += 1;
                }
            }
        }
    }
    assert!(within as f64 >= 0.99 * total as f64, "{within}/{total}");
}

/// Sign correlation of `n` fixed standard-normal pairs mixed to correlation
/// `rho`. Reusing the same draws for every `rho` makes it monotone in `rho`.
fn crn_sign_correlation(draws: &[(f64, f64)], rho: f64) -> f64 {
    let cross = (1.0 - rho * rho).sqrt();
    let agree: i64 = draws
        .iter()
        .map(|&(z1, z2)| {
            let y = rho * z1 + cross * z2;
            if (z1 >= 0.0) == (y >= 0.0) {
                1
            } else {
                -1
            }
        })
        .sum();
    agree as f64 / draws.len() as f64
}

#[test]
fn calibration_agrees_with_monte_carlo_bisection() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let draws: Vec<(f64, f64)> = (0..400_000)
        .map(|_| (rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();

    for target in [0.5, -0.3, 0.7] {
        let (mut lo, mut hi) = (-1.0, 1.0);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if crn_sign_correlation(&draws, mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let rho = calibrate_gaussian(r(target), 1e-9).unwrap();
        // sign-correlation noise ~1/√N maps to rho through d rho/d r ≤ π/2
        assert!(
            (rho - oracle).abs() < 5e-3,
            "target {target}: {rho} vs oracle {oracle}"
        );
    }

    let rho = calibrate_gaussian(r(0.5), 1e-3).unwrap();
    assert!((rho - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-3);
}
