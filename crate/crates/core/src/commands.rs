//! Command implementations behind the CLI: each takes a validated
//! [`RunConfig`], writes machine-readable files into an output directory and
//! returns the paths it created. All randomness comes from the configured
//! seed, and reruns with identical inputs produce identical bytes.

use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::counting;
use crate::detection::DetectionParams;
use crate::liouville;
use crate::report::{fmt_float, fmt_opt, write_csv, write_json};
use crate::trajectory;
use crate::{Error, Result, VERSION};

fn require_t_final(cfg: &RunConfig) -> Result<f64> {
    cfg.analysis.t_final.ok_or_else(|| {
        Error::Config(crate::config::ConfigError::Invalid {
            key: "analysis.t_final",
            reason: "this command needs an evolution horizon".into(),
        })
    })
}

/// Tabulate the effective decay rate over the configured x grid.
pub fn cmd_gamma_eff(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let resolved = cfg.resolved_json()?;
    let det = &cfg.detection;
    let rows: Vec<String> = cfg
        .x_grid()
        .iter()
        .map(|&x| {
            let params = DetectionParams::from_x(det.gamma, det.lambda, det.d, x)?;
            Ok(format!(
                "{},{}",
                fmt_float(x),
                fmt_float(params.effective_rate())
            ))
        })
        .collect::<Result<_>>()?;
    let path = out_dir.join("gamma_eff.csv");
    write_csv(&path, &resolved, "x,gamma_eff", &rows)?;
    Ok(vec![path])
}

/// Large-deviation sweep: one CSV (plus a metadata sidecar) per requested x.
pub fn cmd_ld_sweep(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let resolved = cfg.resolved_json()?;
    let model = cfg.atom_model()?;
    let grid = cfg.s_grid();
    let mut written = Vec::new();
    for x in cfg.x_values()? {
        let det = cfg.detection_params(Some(x))?;
        let points = liouville::sweep(&model, &det, &grid).map_err(Error::Ld)?;
        let mut rows = Vec::with_capacity(points.len());
        let mut failures = Vec::new();
        for (s, point) in grid.iter().zip(points) {
            match point {
                Ok(p) => rows.push(format!(
                    "{},{},{},{},{},{},{},{}",
                    fmt_float(p.s),
                    fmt_float(p.lambda),
                    fmt_float(p.flux),
                    fmt_float(p.shot_noise),
                    fmt_opt(p.fano),
                    fmt_opt(p.mandel_q),
                    fmt_float(p.spectral_gap),
                    u8::from(p.degenerate),
                )),
                Err(e) => failures.push(serde_json::json!({
                    "s": s,
                    "error": e.to_string(),
                })),
            }
        }
        let tag = format!("{x}");
        let csv_path = out_dir.join(format!("ld_sweep_x{tag}.csv"));
        write_csv(
            &csv_path,
            &resolved,
            "s,lambda,flux,shot_noise,fano,mandel_q,gap,degenerate",
            &rows,
        )?;
        let meta_path = out_dir.join(format!("ld_sweep_x{tag}.meta.json"));
        write_json(
            &meta_path,
            &serde_json::json!({
                "version": VERSION,
                "config": resolved,
                "x": x,
                "gamma_eff": det.effective_rate(),
                "failed_points": failures,
            }),
        )?;
        written.push(csv_path);
        written.push(meta_path);
    }
    Ok(written)
}

/// Integrate the count-resolved ladder and write `(t, n, P(n,t))` rows.
pub fn cmd_pn_evolve(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let resolved = cfg.resolved_json()?;
    let model = cfg.atom_model()?;
    let det = cfg.detection_params(None)?;
    let gamma_eff = det.effective_rate();
    let t_final = require_t_final(cfg)?;
    let dt = cfg
        .analysis
        .dt
        .unwrap_or_else(|| counting::stable_step(&model, gamma_eff));

    let record_at: Vec<f64> = if t_final == 0.0 {
        vec![0.0]
    } else {
        let k = cfg.analysis.record_points.max(2);
        (0..k)
            .map(|i| t_final * i as f64 / (k - 1) as f64)
            .collect()
    };
    let states = counting::evolve_recorded(
        &model,
        gamma_eff,
        &model.initial_density(),
        t_final,
        dt,
        &record_at,
    )
    .map_err(Error::Counting)?;

    let mut rows = Vec::new();
    for state in &states {
        for (n, p) in state.pn_distribution() {
            if p != 0.0 {
                rows.push(format!(
                    "{},{n},{}",
                    fmt_float(state.t()),
                    fmt_float(p)
                ));
            }
        }
    }
    let path = out_dir.join("pn_evolve.csv");
    write_csv(&path, &resolved, "t,n,p", &rows)?;
    Ok(vec![path])
}

/// Simulate the click ensemble; write one row per click plus a summary block.
pub fn cmd_trajectories(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let resolved = cfg.resolved_json()?;
    let model = cfg.atom_model()?;
    let det = cfg.detection_params(None)?;
    let t_final = require_t_final(cfg)?;
    let dt = match cfg.analysis.dt {
        Some(dt) => dt,
        None => trajectory::default_window(&model, &det).map_err(Error::Trajectory)?,
    };
    // snap the horizon to a whole number of windows
    let horizon = (t_final / dt).round().max(1.0) * dt;
    let count = cfg.analysis.trajectories;
    let seed = cfg.analysis.seed;

    let records = trajectory::simulate_ensemble(&model, &det, horizon, dt, count, seed)
        .map_err(Error::Trajectory)?;
    let stats = trajectory::ensemble_statistics(&records).map_err(Error::Trajectory)?;

    let mut rows = Vec::new();
    for (idx, record) in records.iter().enumerate() {
        for &t in record.click_times() {
            rows.push(format!("{idx},{}", fmt_float(t)));
        }
    }
    let clicks_path = out_dir.join("trajectory_clicks.csv");
    write_csv(&clicks_path, &resolved, "trajectory,time", &rows)?;

    // Stationary-window rate: the first 20% of the horizon is burn-in, so
    // the comparison against the spectral-route flux is free of the
    // ground-start transient.
    let burn = ((0.2 * horizon) / dt).round() * dt;
    let window_time = horizon - burn;
    let windowed: Vec<f64> = records
        .iter()
        .map(|r| r.click_times().iter().filter(|&&t| t > burn).count() as f64)
        .collect();
    let n = windowed.len() as f64;
    let mean = windowed.iter().sum::<f64>() / n;
    let var = windowed.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let stationary_rate = mean / window_time;
    let stationary_se = (var / n).sqrt() / window_time;

    // spectral-route flux at s = 0 for the cross-engine agreement line
    let i0 = liouville::ld_point(&model, &det, 0.0)
        .map_err(Error::Ld)?
        .flux;
    let z = if stationary_se > 0.0 {
        (stationary_rate - i0) / stationary_se
    } else {
        f64::NAN
    };
    let summary_path = out_dir.join("trajectory_summary.json");
    write_json(
        &summary_path,
        &serde_json::json!({
            "version": VERSION,
            "config": resolved,
            "window": dt,
            "horizon": horizon,
            "seed": seed,
            "stats": stats,
            "stationary_window": {
                "t_start": burn,
                "duration": window_time,
                "rate": stationary_rate,
                "rate_std_error": stationary_se,
            },
            "flux_s0_spectral": i0,
            "stationary_rate_minus_flux_in_std_errors": z,
            "agrees_within_3_std_errors": z.is_finite() && z.abs() <= 3.0,
        }),
    )?;
    Ok(vec![clicks_path, summary_path])
}
