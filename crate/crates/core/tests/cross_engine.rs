//! Cross-engine consistency: the spectral route, the count-resolved ladder
//! and the stochastic sampler must tell the same story about the same atom.

use ndarray::{array, Array2};
use num_complex::Complex64 as C64;

use clickstat_core::atom::AtomModel;
use clickstat_core::counting;
use clickstat_core::detection::DetectionParams;
use clickstat_core::linalg::{null_vector, unvec_matrix};
use clickstat_core::liouville;
use clickstat_core::trajectory;

fn detector(x: f64) -> DetectionParams {
    DetectionParams::from_x(1.0, 1.0, 0.0, x).unwrap()
}

fn reference_model() -> AtomModel {
    AtomModel::two_level(0.0, detector(20.0).effective_rate() / 4.0)
}

#[test]
fn undriven_steady_state_is_the_ground_projector() {
    let model = AtomModel::two_level(0.0, 0.0);
    let gen = liouville::build_tilted_generator(&model, 0.9, 0.0);
    let v = null_vector(gen.matrix()).unwrap();
    let rho = unvec_matrix(&v.view(), 2);
    let tr = rho.trace();
    assert!((rho.get(1, 1) / tr - C64::new(1.0, 0.0)).norm() < 1e-10);
    assert!((rho.get(0, 0) / tr).norm() < 1e-10);
}

#[test]
fn ladder_mean_rate_approaches_spectral_flux() {
    // gamma_eff * t = 50 on the x = 0.2 branch: <n>/t within 1% of I(0).
    let model = reference_model();
    let det = detector(0.2);
    let g = det.effective_rate();
    let t = 50.0 / g;
    let dt = counting::stable_step(&model, g);
    let state = counting::evolve(&model, g, &model.initial_density(), t, dt).unwrap();
    let mean_rate = state.finite_time_cumulants(0.0, 1).unwrap() / t;
    let i0 = liouville::ld_point(&model, &det, 0.0).unwrap().flux;
    let rel = (mean_rate - i0).abs() / i0;
    assert!(rel < 0.01, "<n>/t = {mean_rate} vs I(0) = {i0} ({rel:.4})");
}

#[test]
fn ladder_mandel_factor_is_sub_poissonian_like_the_spectral_one() {
    // Finite-time Q from the ladder vs the s-derivative route at s = 0.
    let model = reference_model();
    let det = detector(20.0);
    let g = det.effective_rate();
    let t = 50.0 / g;
    let dt = counting::stable_step(&model, g);
    let state = counting::evolve(&model, g, &model.initial_density(), t, dt).unwrap();
    let mean = state.finite_time_cumulants(0.0, 1).unwrap();
    let var = -state.finite_time_cumulants(0.0, 2).unwrap();
    let q_ladder = var / mean - 1.0;
    let q_spectral = liouville::ld_point(&model, &det, 0.0)
        .unwrap()
        .mandel_q
        .unwrap();
    assert!(q_ladder < 0.0, "finite-time Q = {q_ladder}");
    assert!(
        (q_ladder - q_spectral).abs() < 0.1,
        "Q ladder {q_ladder} vs spectral {q_spectral}"
    );
}

#[test]
fn monte_carlo_moments_match_exact_sums() {
    // Same horizon, same ground start: the transient is common to both
    // routes, so plain moments must agree within sampling error.
    let tau = 0.01;
    let det = DetectionParams::from_x(1.0, 20.0 / tau, 0.0, 20.0).unwrap();
    let g = det.effective_rate();
    let model = reference_model();
    let horizon = 20.0;
    let dt = trajectory::default_window(&model, &det).unwrap();
    let n = 3000;

    let records = trajectory::simulate_ensemble(&model, &det, horizon, dt, n, 4242).unwrap();
    let stats = trajectory::ensemble_statistics(&records).unwrap();

    let state = counting::evolve(
        &model,
        g,
        &model.initial_density(),
        horizon,
        counting::stable_step(&model, g),
    )
    .unwrap();
    let mean = state.finite_time_cumulants(0.0, 1).unwrap();
    let var = -state.finite_time_cumulants(0.0, 2).unwrap();

    let se_mean = (var / n as f64).sqrt();
    assert!(
        (stats.mean_count - mean).abs() < 3.0 * se_mean,
        "MC mean {} vs ladder {mean} (3 SE = {:.4})",
        stats.mean_count,
        3.0 * se_mean
    );
    let se_var = var * (2.0 / (n as f64 - 1.0)).sqrt();
    assert!(
        (stats.var_count - var).abs() < 3.0 * se_var,
        "MC variance {} vs ladder {var} (3 SE = {:.4})",
        stats.var_count,
        3.0 * se_var
    );
}

#[test]
fn zeno_detector_produces_flat_statistics_everywhere() {
    // x = 0: no engine sees any click.
    let model = reference_model();
    let det = DetectionParams::new(1.0, 1.0, 0.0, 0.0).unwrap();
    assert_eq!(det.effective_rate(), 0.0);

    let point = liouville::ld_point(&model, &det, 0.3).unwrap();
    assert!(point.lambda.abs() < 1e-10);
    assert!(point.flux.abs() < 1e-10);
    assert!(point.mandel_q.is_none());

    let records = trajectory::simulate_ensemble(&model, &det, 10.0, 0.5, 50, 9).unwrap();
    assert!(records.iter().all(|r| r.total_n() == 0));
}

#[test]
fn custom_model_runs_through_every_engine() {
    // a lightly detuned two-level atom built through the generic constructor
    let mut jump = Array2::zeros((2, 2));
    jump[(1, 0)] = C64::new(1.0, 0.0);
    let h = array![
        [C64::new(0.15, 0.0), C64::new(0.2, 0.0)],
        [C64::new(0.2, 0.0), C64::new(-0.15, 0.0)]
    ];
    let model = AtomModel::new(
        h,
        jump,
        vec!["up".into(), "down".into()],
        array![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
    )
    .unwrap();
    let det = DetectionParams::from_x(1.0, 200.0, 0.0, 2.0).unwrap();
    let g = det.effective_rate();

    let p = liouville::ld_point(&model, &det, 0.0).unwrap();
    assert!(p.lambda.abs() < 1e-9);
    let i0 = liouville::stationary_flux(&model, g).unwrap();
    assert!((p.flux - i0).abs() / i0 < 1e-6);

    let state = counting::evolve(
        &model,
        g,
        &model.initial_density(),
        30.0,
        counting::stable_step(&model, g),
    )
    .unwrap();
    let rate = state.finite_time_cumulants(0.0, 1).unwrap() / 30.0;
    assert!((rate - i0).abs() / i0 < 0.15, "rate {rate} vs {i0}");

    let record = trajectory::simulate(
        &model,
        &det,
        40.0,
        trajectory::default_window(&model, &det).unwrap(),
        trajectory::TrajectorySeed { master: 1, stream: 0 },
    )
    .unwrap();
    assert!(record.total_n() > 0);
}
