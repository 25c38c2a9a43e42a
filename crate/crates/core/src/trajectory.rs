//! Stochastic simulation of the window-by-window detection protocol.
//!
//! Each update window of length `dt` (an integer number of detector checks
//! `tau`) resolves into one of two outcomes: a click, which applies the
//! lowering operator, or a null result, which multiplies the emitting
//! excited amplitude by the survival factor `abar(dt)`. Either branch is
//! followed by the drive propagator `U(dt) = exp(-i H dt)` and
//! renormalization:
//!
//! ```text
//! |psi(t + dt)> = U(dt) M_{1,0}(dt) |psi(t)> / ||...||
//! ```
//!
//! The click branch fires with probability `q(dt) |alpha_e|^2` where
//! `q = 1 - |abar|^2`, which completes the two-outcome measurement exactly.
//! Windows are sized so at most one photon is registered per window
//! (click probability at most 0.1).
//!
//! Every trajectory owns a counter-based RNG stream derived from
//! `(master seed, trajectory index)`, so ensembles are reproducible
//! bit-for-bit and embarrassingly parallel.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atom::{AtomError, AtomModel};
use crate::detection::{DetectionError, DetectionParams};
use crate::linalg::{mat_exp, ExpMode, LinalgError};

/// Hard ceiling on the per-window click probability.
pub const MAX_WINDOW_CLICK_PROB: f64 = 0.1;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Atom(#[from] AtomError),
    #[error("window dt = {dt} is not a positive integer multiple of tau = {tau}")]
    WindowNotMultipleOfTau { dt: f64, tau: f64 },
    #[error(
        "window dt = {dt} too large: click probability {p1:.4} exceeds {MAX_WINDOW_CLICK_PROB}; use dt <= {required:.6e}"
    )]
    WindowTooLarge { dt: f64, p1: f64, required: f64 },
    #[error("horizon T = {horizon} is not an integer number of windows dt = {dt}")]
    HorizonNotMultiple { horizon: f64, dt: f64 },
    #[error("state norm collapsed to zero during an update")]
    ZeroNorm,
    #[error("ensemble statistics need at least two records, got {0}")]
    TooFewRecords(usize),
    #[error("records mix different horizons or parameters")]
    MixedRecords,
    #[error("all sub-ensemble weights underflowed; use a smaller |s|")]
    WeightUnderflow,
}

type Result<T> = std::result::Result<T, TrajectoryError>;

/// Normalized pure state over the atom levels.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: Vec<C64>,
}

impl PureState {
    /// Wrap amplitudes, requiring norm 1 within 1e-10.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() >= 1e-10 {
            return Err(TrajectoryError::ZeroNorm);
        }
        let mut st = Self { amps };
        st.renormalize()?;
        Ok(st)
    }

    pub fn from_model(model: &AtomModel) -> Self {
        Self {
            amps: model.initial_state().to_vec(),
        }
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    fn renormalize(&mut self) -> Result<()> {
        let norm = self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(TrajectoryError::ZeroNorm);
        }
        for a in &mut self.amps {
            *a /= norm;
        }
        Ok(())
    }
}

/// RNG identity of one trajectory: a master seed plus a stream index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectorySeed {
    pub master: u64,
    pub stream: u64,
}

impl TrajectorySeed {
    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}

/// Parameter snapshot carried by every record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryParams {
    pub gamma: f64,
    pub lambda_bw: f64,
    pub d: f64,
    pub tau: f64,
    pub window: f64,
    pub horizon: f64,
}

/// Click record of a single trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    click_times: Vec<f64>,
    bin_counts: Vec<u8>,
    seed: TrajectorySeed,
    params: TrajectoryParams,
}

impl TrajectoryRecord {
    pub fn click_times(&self) -> &[f64] {
        &self.click_times
    }

    pub fn bin_counts(&self) -> &[u8] {
        &self.bin_counts
    }

    pub fn total_n(&self) -> usize {
        self.click_times.len()
    }

    pub fn seed(&self) -> TrajectorySeed {
        self.seed
    }

    pub fn params(&self) -> TrajectoryParams {
        self.params
    }
}

/// Flattened propagator for the tight inner loop.
struct Propagator {
    dim: usize,
    entries: Vec<C64>, // row-major
}

impl Propagator {
    fn new(model: &AtomModel, dt: f64) -> Result<Self> {
        let u = mat_exp(model.hamiltonian(), dt, ExpMode::Unitary)?;
        let dim = model.dim();
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(u.get(i, j));
            }
        }
        Ok(Self { dim, entries })
    }

    fn apply(&self, amps: &[C64]) -> Vec<C64> {
        (0..self.dim)
            .map(|i| {
                let row = &self.entries[i * self.dim..(i + 1) * self.dim];
                row.iter().zip(amps).map(|(m, a)| m * a).sum()
            })
            .collect()
    }
}

fn check_window(det: &DetectionParams, dt: f64) -> Result<()> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(TrajectoryError::WindowNotMultipleOfTau { dt, tau: det.tau() });
    }
    let tau = det.tau();
    if tau > 0.0 {
        let ratio = dt / tau;
        if ratio < 0.5 || (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(TrajectoryError::WindowNotMultipleOfTau { dt, tau });
        }
    }
    Ok(())
}

/// Largest window satisfying the click-probability ceiling for any state.
fn max_window(det: &DetectionParams) -> f64 {
    let g = det.effective_rate();
    if g > 0.0 {
        -(1.0 - MAX_WINDOW_CLICK_PROB).ln() / g
    } else {
        f64::INFINITY
    }
}

/// Default update window: `min(0.01/gamma_eff, 0.1/||H||)`, rounded down to
/// a multiple of `tau` (and never below `tau` itself).
pub fn default_window(model: &AtomModel, det: &DetectionParams) -> Result<f64> {
    let g = det.effective_rate();
    let norm = model.hamiltonian().spectral_norm_hermitian()?;
    let mut dt = f64::INFINITY;
    if g > 0.0 {
        dt = dt.min(0.01 / g);
    }
    if norm > 0.0 {
        dt = dt.min(0.1 / norm);
    }
    if !dt.is_finite() {
        dt = if det.tau() > 0.0 { det.tau() } else { 0.1 };
    }
    let tau = det.tau();
    if tau > 0.0 {
        let k = (dt / tau).floor().max(1.0);
        dt = k * tau;
    }
    Ok(dt)
}

/// Everything constant across the windows of one trajectory.
struct WindowKernel {
    emitting: usize,
    ground: usize,
    abar: C64,
    jump_weight: f64,
    propagator: Propagator,
    dt: f64,
    max_window: f64,
}

impl WindowKernel {
    fn new(model: &AtomModel, det: &DetectionParams, dt: f64) -> Result<Self> {
        let (emitting, ground) = model.emission_channel()?;
        let abar = det.survival_amplitude(dt)?;
        Ok(Self {
            emitting,
            ground,
            abar,
            jump_weight: 1.0 - abar.norm_sqr(),
            propagator: Propagator::new(model, dt)?,
            dt,
            max_window: max_window(det),
        })
    }
}

fn step_inner(state: &mut PureState, kernel: &WindowKernel, rng: &mut impl Rng) -> Result<u8> {
    let p1 = kernel.jump_weight * state.amps[kernel.emitting].norm_sqr();
    if p1 > MAX_WINDOW_CLICK_PROB {
        return Err(TrajectoryError::WindowTooLarge {
            dt: kernel.dt,
            p1,
            required: kernel.max_window,
        });
    }
    let click = rng.gen::<f64>() < p1;
    if click {
        let mut jumped = vec![C64::new(0.0, 0.0); state.dim()];
        jumped[kernel.ground] = state.amps[kernel.emitting];
        state.amps = jumped;
    } else {
        state.amps[kernel.emitting] *= kernel.abar;
    }
    state.amps = kernel.propagator.apply(&state.amps);
    state.renormalize()?;
    Ok(u8::from(click))
}

/// One update window: returns the post-window state and `Delta N_c`.
pub fn step(
    state: &PureState,
    model: &AtomModel,
    det: &DetectionParams,
    dt: f64,
    rng: &mut impl Rng,
) -> Result<(PureState, u8)> {
    check_window(det, dt)?;
    let kernel = WindowKernel::new(model, det, dt)?;
    let mut next = state.clone();
    let click = step_inner(&mut next, &kernel, rng)?;
    Ok((next, click))
}

/// Run one trajectory over `(0, horizon)` with update window `dt`.
///
/// The horizon must be an integer number of windows; the record is a
/// deterministic function of `(seed, parameters)`.
pub fn simulate(
    model: &AtomModel,
    det: &DetectionParams,
    horizon: f64,
    dt: f64,
    seed: TrajectorySeed,
) -> Result<TrajectoryRecord> {
    check_window(det, dt)?;
    if !horizon.is_finite() || horizon < 0.0 {
        return Err(TrajectoryError::HorizonNotMultiple { horizon, dt });
    }
    let windows_f = horizon / dt;
    if (windows_f - windows_f.round()).abs() > 1e-9 * windows_f.max(1.0) {
        return Err(TrajectoryError::HorizonNotMultiple { horizon, dt });
    }
    let n_windows = windows_f.round() as usize;

    let kernel = WindowKernel::new(model, det, dt)?;
    let mut state = PureState::from_model(model);
    let mut rng = seed.rng();
    let mut click_times = Vec::new();
    let mut bin_counts = vec![0u8; n_windows];
    for (i, bin) in bin_counts.iter_mut().enumerate() {
        let click = step_inner(&mut state, &kernel, &mut rng)?;
        if click == 1 {
            click_times.push((i as f64 + 1.0) * dt);
        }
        *bin = click;
    }
    Ok(TrajectoryRecord {
        click_times,
        bin_counts,
        seed,
        params: TrajectoryParams {
            gamma: det.gamma(),
            lambda_bw: det.lambda_bw(),
            d: det.d(),
            tau: det.tau(),
            window: dt,
            horizon,
        },
    })
}

/// Run `count` independent trajectories; trajectory `i` uses RNG stream `i`
/// of the master seed. Embarrassingly parallel, output ordered by index.
pub fn simulate_ensemble(
    model: &AtomModel,
    det: &DetectionParams,
    horizon: f64,
    dt: f64,
    count: usize,
    master_seed: u64,
) -> Result<Vec<TrajectoryRecord>> {
    (0..count as u64)
        .into_par_iter()
        .map(|stream| {
            simulate(
                model,
                det,
                horizon,
                dt,
                TrajectorySeed {
                    master: master_seed,
                    stream,
                },
            )
        })
        .collect()
}

/// Unbiased sample statistics of total counts.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnsembleStats {
    pub n_records: usize,
    pub horizon: f64,
    pub mean_count: f64,
    /// Unbiased sample variance of the total count.
    pub var_count: f64,
    /// Mean click rate `<n>/T`.
    pub rate: f64,
    /// Standard error of the rate.
    pub rate_std_error: f64,
    /// Conventional Fano factor `Var/<n>`; undefined at zero mean.
    pub fano: Option<f64>,
    /// Mandel factor `Var/<n> - 1`; undefined at zero mean.
    pub mandel_q: Option<f64>,
}

/// Statistics of raw counts over a common horizon.
pub fn count_statistics(counts: &[u64], horizon: f64) -> Result<EnsembleStats> {
    if counts.len() < 2 {
        return Err(TrajectoryError::TooFewRecords(counts.len()));
    }
    let n = counts.len() as f64;
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    let var = counts
        .iter()
        .map(|&c| (c as f64 - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    let (fano, mandel_q) = if mean > 0.0 {
        (Some(var / mean), Some(var / mean - 1.0))
    } else {
        (None, None)
    };
    Ok(EnsembleStats {
        n_records: counts.len(),
        horizon,
        mean_count: mean,
        var_count: var,
        rate: mean / horizon,
        rate_std_error: (var / n).sqrt() / horizon,
        fano,
        mandel_q,
    })
}

/// [`count_statistics`] over trajectory records sharing one horizon.
pub fn ensemble_statistics(records: &[TrajectoryRecord]) -> Result<EnsembleStats> {
    if records.len() < 2 {
        return Err(TrajectoryError::TooFewRecords(records.len()));
    }
    let params = records[0].params;
    if records.iter().any(|r| r.params != params) {
        return Err(TrajectoryError::MixedRecords);
    }
    let counts: Vec<u64> = records.iter().map(|r| r.total_n() as u64).collect();
    count_statistics(&counts, params.horizon)
}

/// Resample `k` records with replacement, weighted by `e^{-s * total_n}`.
///
/// Negative `s` favors active trajectories, positive `s` inactive ones. The
/// largest exponent is subtracted before exponentiation, so the weights can
/// only underflow collectively (in which case this errors rather than
/// returning a biased sample).
pub fn select_subensemble(
    records: &[TrajectoryRecord],
    s: f64,
    k: usize,
    rng: &mut impl Rng,
) -> Result<Vec<TrajectoryRecord>> {
    if records.is_empty() {
        return Err(TrajectoryError::TooFewRecords(0));
    }
    let exponents: Vec<f64> = records.iter().map(|r| -s * r.total_n() as f64).collect();
    let m = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = exponents.iter().map(|e| (e - m).exp()).collect();
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut total = 0.0;
    for w in &weights {
        total += w;
        cumulative.push(total);
    }
    if !total.is_finite() || total <= 0.0 {
        return Err(TrajectoryError::WeightUnderflow);
    }
    let mut picked = Vec::with_capacity(k);
    for _ in 0..k {
        let u = rng.gen::<f64>() * total;
        let idx = cumulative.partition_point(|&c| c <= u).min(records.len() - 1);
        picked.push(records[idx].clone());
    }
    Ok(picked)
}
