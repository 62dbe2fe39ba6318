//! End-to-end pipeline checks: synthetic data with known generating laws
//! flows through selection and fitting and comes back out.

use ditscale::alloc::{empirical_nopt, exponent_bracket, IsoFlopProfile};
use ditscale::compute::ComputeConfig;
use ditscale::powerlaw::fit_powerlaw2;
use ditscale::presets;
use ditscale::runs::{
    observations, observations_to_runs, parse_runs_csv, runs_to_csv_string, select_near_optimal,
    to_units,
};
use ditscale::sgd::synth_runs;
use ditscale::units::UnitConvention;

/// Shape parameter counts for depths 4, 6, 8, 10 (the experiment scales).
fn grid_n() -> Vec<f64> {
    vec![16_777_216.0, 56_623_104.0, 134_217_728.0, 262_144_000.0]
}

fn grid_t() -> Vec<f64> {
    (1..=6).map(|i| 2e9 * i as f64).collect()
}

#[test]
fn synthetic_runs_recover_hyperparameter_laws() {
    let law_b = presets::bopt_video_samples();
    let law_eta = presets::eta_opt_video();
    let surface = presets::surface_video_optimal();
    let cfg = ComputeConfig::default();
    let units = UnitConvention::billions();

    let obs = synth_runs(
        &law_b,
        &law_eta,
        &surface,
        &grid_n(),
        &grid_t(),
        &cfg,
        128,
        0.002,
        17,
    )
    .unwrap();
    assert_eq!(obs.len(), 4 * 6 * 25);

    let scaled: Vec<_> = obs.iter().map(|o| to_units(o, &units)).collect();
    let kept = select_near_optimal(&scaled, 2e-4);
    assert!(kept.len() >= 24, "selection kept {}", kept.len());

    let b_pts: Vec<(f64, f64, f64)> = kept.iter().map(|o| (o.t, o.n, o.b)).collect();
    let e_pts: Vec<(f64, f64, f64)> = kept.iter().map(|o| (o.t, o.n, o.eta)).collect();
    let fit_b = fit_powerlaw2(&b_pts, units).unwrap();
    let fit_e = fit_powerlaw2(&e_pts, units).unwrap();

    assert!(
        (fit_b.law.beta - law_b.beta).abs() < 0.02,
        "beta_B {} vs {}",
        fit_b.law.beta,
        law_b.beta
    );
    assert!(
        (fit_b.law.gamma - law_b.gamma).abs() < 0.02,
        "gamma_B {} vs {}",
        fit_b.law.gamma,
        law_b.gamma
    );
    assert!((fit_e.law.beta - law_eta.beta).abs() < 0.02);
    assert!((fit_e.law.gamma - law_eta.gamma).abs() < 0.02);
}

#[test]
fn synthetic_runs_survive_csv_round_trip() {
    let obs = synth_runs(
        &presets::bopt_video_samples(),
        &presets::eta_opt_video(),
        &presets::surface_video_optimal(),
        &grid_n(),
        &[4e9, 8e9],
        &ComputeConfig::default(),
        128,
        0.002,
        5,
    )
    .unwrap();
    let runs = observations_to_runs(&obs, 128).unwrap();
    let text = runs_to_csv_string(&runs);
    let reloaded = parse_runs_csv(&text, "synth.csv").unwrap();
    let round = observations(&reloaded);
    assert_eq!(round.len(), obs.len());
    for (a, b) in obs.iter().zip(&round) {
        assert_eq!(a.loss, b.loss, "losses are carried bit-exactly");
        assert_eq!(a.t, b.t);
        assert_eq!(a.n, b.n, "grid sizes are exact shape sizes");
        // batch sizes rounded to whole samples on the way out
        assert!((a.b - b.b).abs() <= 0.5);
    }
}

/// Golden-section minimum of the surface along the compute constraint in
/// `ln N`; the independent oracle for profile placement.
fn constrained_argmin_ln_n(surface: &ditscale::surface::LossSurface, c: f64, n_ctx: f64) -> f64 {
    let loss_at = |ln_n: f64| -> f64 {
        let n = ln_n.exp();
        let d = (8.0 * n).cbrt();
        let c_token = 0.75 * n * (7.0 + n_ctx / d);
        let t = c / c_token;
        surface.eval(t / 1e9, n / 1e9).unwrap()
    };
    let (mut a, mut b) = (1e5f64.ln(), 1e12f64.ln());
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c1 = b - phi * (b - a);
        let c2 = a + phi * (b - a);
        if loss_at(c1) < loss_at(c2) {
            b = c2;
        } else {
            a = c1;
        }
    }
    0.5 * (a + b)
}

#[test]
fn surface_synthesized_profiles_land_in_regime_bracket() {
    let surface = presets::surface_video_optimal();
    let n_ctx = 1280.0;
    let mut profiles = Vec::new();
    for &c in &presets::ISOFLOP_BUDGETS {
        let x_star = constrained_argmin_ln_n(&surface, c, n_ctx) / std::f64::consts::LN_10;
        let points: Vec<(f64, f64)> = [-0.12, -0.06, 0.0, 0.06, 0.12]
            .iter()
            .map(|dx| {
                let n = 10f64.powf(x_star + dx);
                let d = (8.0 * n).cbrt();
                let c_token = 0.75 * n * (7.0 + n_ctx / d);
                let loss = surface.eval(c / c_token / 1e9, n / 1e9).unwrap();
                (n, loss)
            })
            .collect();
        profiles.push(IsoFlopProfile::from_points(c, points).unwrap());
    }
    let fit = empirical_nopt(&profiles).unwrap();
    let (lo, hi) = exponent_bracket(&surface);
    let e = fit.law.exponent;
    assert!(lo < e && e < hi, "exponent {e} outside ({lo}, {hi})");
}
