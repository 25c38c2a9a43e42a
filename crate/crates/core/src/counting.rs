//! Direct integration of the count-resolved master equation.
//!
//! The atom state conditioned on `n` detected photons obeys a ladder of
//! coupled equations,
//!
//! ```text
//! d rho^(n) / dt = -i[H, rho^(n)]
//!                  + gamma_eff ( sigma^- rho^(n-1) sigma^+
//!                                - 1/2 {sigma^+ sigma^-, rho^(n)} ) ,
//! ```
//!
//! truncated at an `n_max` chosen so the top rung carries less than 1e-10 of
//! probability. From `P(n,t) = Tr rho^(n)(t)` the finite-time generating
//! function and its exact-sum cumulants follow; this is the finite-time
//! oracle against the spectral route in [`crate::liouville`].
//!
//! Integration is classical fixed-step fourth order; the step must satisfy
//! `dt * (||H|| + gamma_eff) < 0.05`.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use ndarray_linalg::{Eigh, UPLO};
use thiserror::Error;

use crate::atom::AtomModel;
use crate::linalg::{CMatrix, LinalgError};

/// Tail mass allowed on the top rung of the ladder.
pub const TAIL_TOL: f64 = 1e-10;
/// Stability bound: `dt * (||H|| + gamma_eff)` must stay below this.
pub const STEP_BOUND: f64 = 0.05;

#[derive(Debug, Error)]
pub enum CountingError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("rho0 is not a valid density matrix: {reason}")]
    InvalidInitialState { reason: String },
    #[error("step dt = {dt} violates dt * (||H|| + gamma_eff) = {product} < {bound}")]
    StepTooLarge { dt: f64, product: f64, bound: f64 },
    #[error("invalid evolution parameter: {0}")]
    InvalidParam(String),
    #[error(
        "tail mass {tail:.3e} on rung n_max = {n_max} still above {TAIL_TOL:.0e} at the auto-extension cap"
    )]
    TailOverflow { n_max: usize, tail: f64 },
    #[error("ladder invariant violated after integration: {0}")]
    InvariantViolated(String),
    #[error("cumulant order {0} not supported (1..=3)")]
    UnsupportedOrder(usize),
}

type Result<T> = std::result::Result<T, CountingError>;

/// The ladder of conditioned density matrices at one instant.
#[derive(Debug, Clone)]
pub struct CountResolvedState {
    t: f64,
    rhos: Vec<Array2<C64>>,
}

impl CountResolvedState {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn n_max(&self) -> usize {
        self.rhos.len() - 1
    }

    pub fn rho(&self, n: usize) -> CMatrix {
        CMatrix::from_array(self.rhos[n].clone()).expect("finite ladder entries")
    }

    /// `P(n, t) = Tr rho^(n)(t)` for every rung.
    pub fn pn_distribution(&self) -> Vec<(usize, f64)> {
        self.rhos
            .iter()
            .enumerate()
            .map(|(n, rho)| (n, rho.diag().sum().re))
            .collect()
    }

    /// Unconditional state `sum_n rho^(n)(t)`.
    pub fn total_density(&self) -> CMatrix {
        let d = self.rhos[0].nrows();
        let mut acc = Array2::<C64>::zeros((d, d));
        for rho in &self.rhos {
            acc += rho;
        }
        CMatrix::from_array(acc).expect("finite ladder entries")
    }

    /// Finite-time generating function `F(s,t) = -ln sum_n e^{-s n} P(n,t)`,
    /// evaluated with log-sum-exp stabilization.
    pub fn finite_time_generating(&self, s: f64) -> f64 {
        let terms: Vec<f64> = self
            .pn_distribution()
            .iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|(n, p)| -s * *n as f64 + p.ln())
            .collect();
        let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = terms.iter().map(|a| (a - m).exp()).sum();
        -(m + sum.ln())
    }

    /// Exact-sum cumulants of the reweighted distribution
    /// `e^{-s n} P(n,t) / P(s,t)`: order 1 gives `<n>_s`, order 2 gives
    /// `-<(n - nbar)^2>_s`, order 3 gives `<(n - nbar)^3>_s`, matching the
    /// s-derivatives of the generating function.
    pub fn finite_time_cumulants(&self, s: f64, order: usize) -> Result<f64> {
        if !(1..=3).contains(&order) {
            return Err(CountingError::UnsupportedOrder(order));
        }
        let pn = self.pn_distribution();
        let terms: Vec<(f64, f64)> = pn
            .iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|(n, p)| (*n as f64, -s * *n as f64 + p.ln()))
            .collect();
        let m = terms
            .iter()
            .map(|(_, a)| *a)
            .fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = terms.iter().map(|(_, a)| (a - m).exp()).sum();
        let weight = |a: f64| (a - m).exp() / total;
        let nbar: f64 = terms.iter().map(|(n, a)| n * weight(*a)).sum();
        Ok(match order {
            1 => nbar,
            2 => -terms
                .iter()
                .map(|(n, a)| (n - nbar).powi(2) * weight(*a))
                .sum::<f64>(),
            _ => terms
                .iter()
                .map(|(n, a)| (n - nbar).powi(3) * weight(*a))
                .sum::<f64>(),
        })
    }
}

/// Largest step allowed by the stability bound, with a little margin.
pub fn stable_step(model: &AtomModel, gamma_eff: f64) -> f64 {
    let norm = model
        .hamiltonian()
        .spectral_norm_hermitian()
        .expect("model Hamiltonian is Hermitian");
    let scale = norm + gamma_eff;
    if scale > 0.0 {
        0.8 * STEP_BOUND / scale
    } else {
        0.05
    }
}

/// Integrate the ladder from `rho0` to `t_final` with fixed step `dt`.
///
/// The truncation starts at `ceil(5 gamma_eff t_final) + 10` rungs and is
/// extended (doubling, up to `ceil(10 gamma_eff t_final) + 50`) until the
/// top rung holds less than [`TAIL_TOL`] of probability.
pub fn evolve(
    model: &AtomModel,
    gamma_eff: f64,
    rho0: &CMatrix,
    t_final: f64,
    dt: f64,
) -> Result<CountResolvedState> {
    Ok(evolve_recorded(model, gamma_eff, rho0, t_final, dt, &[t_final])?
        .pop()
        .expect("one record requested"))
}

/// As [`evolve`], additionally returning snapshots at the requested times
/// (each snapped to the nearest integration step).
pub fn evolve_recorded(
    model: &AtomModel,
    gamma_eff: f64,
    rho0: &CMatrix,
    t_final: f64,
    dt: f64,
    record_at: &[f64],
) -> Result<Vec<CountResolvedState>> {
    validate_density(rho0, model.dim())?;
    if !gamma_eff.is_finite() || gamma_eff < 0.0 {
        return Err(CountingError::InvalidParam(format!(
            "gamma_eff = {gamma_eff} must be a nonnegative rate"
        )));
    }
    if !t_final.is_finite() || t_final < 0.0 {
        return Err(CountingError::InvalidParam(format!(
            "t_final = {t_final} must be nonnegative"
        )));
    }
    if !dt.is_finite() || dt <= 0.0 {
        return Err(CountingError::InvalidParam(format!(
            "dt = {dt} must be positive"
        )));
    }
    let norm = model
        .hamiltonian()
        .spectral_norm_hermitian()
        .map_err(CountingError::Linalg)?;
    let product = dt * (norm + gamma_eff);
    if product >= STEP_BOUND {
        return Err(CountingError::StepTooLarge {
            dt,
            product,
            bound: STEP_BOUND,
        });
    }

    let base = (5.0 * gamma_eff * t_final).ceil() as usize + 10;
    let cap = (10.0 * gamma_eff * t_final).ceil() as usize + 50;
    let mut n_max = base.min(cap);
    loop {
        let states = integrate_ladder(model, gamma_eff, rho0, t_final, dt, n_max, record_at);
        let tail = states
            .iter()
            .map(|st| st.rhos[n_max].diag().sum().re)
            .fold(0.0f64, f64::max);
        if tail < TAIL_TOL {
            for st in &states {
                check_invariants(st)?;
            }
            return Ok(states);
        }
        if n_max >= cap {
            return Err(CountingError::TailOverflow { n_max, tail });
        }
        n_max = (n_max * 2).min(cap);
    }
}

/// Fixed-step RK4 on the whole ladder, stored as one contiguous buffer of
/// `(n_max + 1)` row-major d x d blocks. The no-jump part of the rung
/// equation is folded into a single drift matrix `A = -iH - (gamma/2) RL`
/// with `d rho_n = A rho_n + rho_n A^dagger + gamma L rho_{n-1} L^dagger`.
struct LadderKernel {
    d: usize,
    n_max: usize,
    gamma_eff: f64,
    drift: Vec<C64>,
    drift_dag: Vec<C64>,
    lower: Vec<C64>,
    raise: Vec<C64>,
}

impl LadderKernel {
    fn new(model: &AtomModel, gamma_eff: f64, n_max: usize) -> Self {
        let d = model.dim();
        let flat = |m: &Array2<C64>| -> Vec<C64> {
            let mut v = Vec::with_capacity(d * d);
            for i in 0..d {
                for j in 0..d {
                    v.push(m[(i, j)]);
                }
            }
            v
        };
        let h = model.hamiltonian().array();
        let lower_arr = model.jump_op().array().clone();
        let raise_arr = lower_arr.t().mapv(|z| z.conj());
        let rl = raise_arr.dot(&lower_arr);
        let drift_arr =
            h.mapv(|z| -C64::i() * z) + rl.mapv(|z| z * C64::new(-0.5 * gamma_eff, 0.0));
        let drift_dag_arr = drift_arr.t().mapv(|z| z.conj());
        Self {
            d,
            n_max,
            gamma_eff,
            drift: flat(&drift_arr),
            drift_dag: flat(&drift_dag_arr),
            lower: flat(&lower_arr),
            raise: flat(&raise_arr),
        }
    }

    fn len(&self) -> usize {
        (self.n_max + 1) * self.d * self.d
    }

    /// dst = d ladder / dt evaluated at src.
    fn rhs(&self, src: &[C64], dst: &mut [C64], scratch: &mut [C64]) {
        let d = self.d;
        let block = d * d;
        for n in 0..=self.n_max {
            let rho = &src[n * block..(n + 1) * block];
            let out = &mut dst[n * block..(n + 1) * block];
            // out = drift * rho + rho * drift_dag
            for i in 0..d {
                for j in 0..d {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..d {
                        acc += self.drift[i * d + k] * rho[k * d + j];
                        acc += rho[i * d + k] * self.drift_dag[k * d + j];
                    }
                    out[i * d + j] = acc;
                }
            }
            if n > 0 {
                // out += gamma * lower * rho_{n-1} * raise
                let prev = &src[(n - 1) * block..n * block];
                for i in 0..d {
                    for j in 0..d {
                        let mut acc = C64::new(0.0, 0.0);
                        for k in 0..d {
                            acc += self.lower[i * d + k] * prev[k * d + j];
                        }
                        scratch[i * d + j] = acc;
                    }
                }
                for i in 0..d {
                    for j in 0..d {
                        let mut acc = C64::new(0.0, 0.0);
                        for k in 0..d {
                            acc += scratch[i * d + k] * self.raise[k * d + j];
                        }
                        out[i * d + j] += acc * self.gamma_eff;
                    }
                }
            }
        }
    }
}

fn integrate_ladder(
    model: &AtomModel,
    gamma_eff: f64,
    rho0: &CMatrix,
    t_final: f64,
    dt: f64,
    n_max: usize,
    record_at: &[f64],
) -> Vec<CountResolvedState> {
    let kernel = LadderKernel::new(model, gamma_eff, n_max);
    let d = kernel.d;
    let block = d * d;

    let n_steps = if t_final > 0.0 {
        (t_final / dt).ceil().max(1.0) as usize
    } else {
        0
    };
    let step = if n_steps > 0 { t_final / n_steps as f64 } else { 0.0 };

    let record_steps: Vec<usize> = record_at
        .iter()
        .map(|&t| {
            if t_final > 0.0 {
                ((t / t_final) * n_steps as f64).round().clamp(0.0, n_steps as f64) as usize
            } else {
                0
            }
        })
        .collect();

    let mut y = vec![C64::new(0.0, 0.0); kernel.len()];
    for i in 0..d {
        for j in 0..d {
            y[i * d + j] = rho0.get(i, j);
        }
    }
    let mut k1 = vec![C64::new(0.0, 0.0); kernel.len()];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut stage = k1.clone();
    let mut scratch = vec![C64::new(0.0, 0.0); block];

    let snapshot = |y: &[C64], t: f64| -> CountResolvedState {
        let rhos = (0..=n_max)
            .map(|n| {
                Array2::from_shape_fn((d, d), |(i, j)| y[n * block + i * d + j])
            })
            .collect();
        CountResolvedState { t, rhos }
    };

    let mut out: Vec<Option<CountResolvedState>> = vec![None; record_at.len()];
    for (slot, &rs) in record_steps.iter().enumerate() {
        if rs == 0 {
            out[slot] = Some(snapshot(&y, 0.0));
        }
    }

    for k in 1..=n_steps {
        kernel.rhs(&y, &mut k1, &mut scratch);
        for (s, (yi, ki)) in stage.iter_mut().zip(y.iter().zip(k1.iter())) {
            *s = yi + ki * (step / 2.0);
        }
        kernel.rhs(&stage, &mut k2, &mut scratch);
        for (s, (yi, ki)) in stage.iter_mut().zip(y.iter().zip(k2.iter())) {
            *s = yi + ki * (step / 2.0);
        }
        kernel.rhs(&stage, &mut k3, &mut scratch);
        for (s, (yi, ki)) in stage.iter_mut().zip(y.iter().zip(k3.iter())) {
            *s = yi + ki * step;
        }
        kernel.rhs(&stage, &mut k4, &mut scratch);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (step / 6.0);
        }
        for (slot, &rs) in record_steps.iter().enumerate() {
            if rs == k {
                out[slot] = Some(snapshot(&y, k as f64 * step));
            }
        }
    }
    out.into_iter()
        .map(|st| st.expect("every record slot filled"))
        .collect()
}

fn validate_density(rho: &CMatrix, dim: usize) -> Result<()> {
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(CountingError::InvalidInitialState {
            reason: format!("dimension {}x{} does not match model dim {dim}", rho.nrows(), rho.ncols()),
        });
    }
    let dev = rho.hermitian_deviation();
    if dev >= 1e-10 {
        return Err(CountingError::InvalidInitialState {
            reason: format!("not Hermitian: deviation {dev:.3e}"),
        });
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() >= 1e-8 || tr.im.abs() >= 1e-10 {
        return Err(CountingError::InvalidInitialState {
            reason: format!("trace {tr} is not 1"),
        });
    }
    if min_eigenvalue(rho.array()) < -1e-10 {
        return Err(CountingError::InvalidInitialState {
            reason: "negative eigenvalue".into(),
        });
    }
    Ok(())
}

fn min_eigenvalue(a: &Array2<C64>) -> f64 {
    // hermitize first; the deviations here are at round-off level
    let sym = (a + &a.t().mapv(|z| z.conj())).mapv(|z| z * 0.5);
    match sym.eigh(UPLO::Lower) {
        Ok((w, _)) => w.iter().cloned().fold(f64::INFINITY, f64::min),
        Err(_) => f64::NEG_INFINITY,
    }
}

fn check_invariants(state: &CountResolvedState) -> Result<()> {
    let mut total = 0.0;
    for (n, rho) in state.rhos.iter().enumerate() {
        let dev = rho
            .iter()
            .zip(rho.t().mapv(|z| z.conj()).iter())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
        if dev >= 1e-10 {
            return Err(CountingError::InvariantViolated(format!(
                "rho^({n}) not Hermitian at t = {}: deviation {dev:.3e}",
                state.t
            )));
        }
        let lo = min_eigenvalue(rho);
        if lo < -1e-10 {
            return Err(CountingError::InvariantViolated(format!(
                "rho^({n}) has eigenvalue {lo:.3e} at t = {}",
                state.t
            )));
        }
        total += rho.diag().sum().re;
    }
    if (total - 1.0).abs() >= 1e-8 {
        return Err(CountingError::InvariantViolated(format!(
            "total probability {total} at t = {} drifted from 1",
            state.t
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{mat_exp, vec_matrix, ExpMode};
    use crate::liouville::build_tilted_generator;
    use approx::assert_abs_diff_eq;

    fn excited_density() -> CMatrix {
        let mut rho = CMatrix::zeros(2, 2);
        rho.set(0, 0, C64::new(1.0, 0.0));
        rho
    }

    #[test]
    fn zero_time_is_a_point_mass_at_n_zero() {
        let model = AtomModel::two_level(0.0, 0.3);
        let state = evolve(&model, 0.9, &model.initial_density(), 0.0, 0.01).unwrap();
        let pn = state.pn_distribution();
        assert_eq!(pn[0], (0, 1.0));
        assert!(pn.iter().skip(1).all(|(_, p)| p.abs() < 1e-15));
    }

    #[test]
    fn undriven_excited_atom_is_a_single_decay() {
        let g = 0.95;
        let model = AtomModel::two_level(0.0, 0.0);
        let t = 1.3;
        let state = evolve(&model, g, &excited_density(), t, 0.01).unwrap();
        let pn = state.pn_distribution();
        assert_abs_diff_eq!(pn[0].1, (-g * t).exp(), epsilon = 1e-8);
        assert_abs_diff_eq!(pn[1].1, 1.0 - (-g * t).exp(), epsilon = 1e-8);
        assert!(pn.iter().skip(2).all(|(_, p)| p.abs() < 1e-12));
    }

    #[test]
    fn half_life_survival_probability() {
        let g = 1.0;
        let model = AtomModel::two_level(0.0, 0.0);
        let t = std::f64::consts::LN_2 / g;
        let state = evolve(&model, g, &excited_density(), t, 0.005).unwrap();
        assert_abs_diff_eq!(state.pn_distribution()[0].1, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn probabilities_sum_to_one_for_driven_evolution() {
        let model = AtomModel::two_level(0.4, 0.25);
        let state = evolve(&model, 0.95, &model.initial_density(), 12.0, 0.02).unwrap();
        let total: f64 = state.pn_distribution().iter().map(|(_, p)| p).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-8);
        assert!(state
            .pn_distribution()
            .iter()
            .all(|(_, p)| *p >= -1e-12));
    }

    #[test]
    fn generating_function_vanishes_at_s_zero() {
        let model = AtomModel::two_level(0.0, 0.25);
        let state = evolve(&model, 0.95, &model.initial_density(), 8.0, 0.02).unwrap();
        assert!(state.finite_time_generating(0.0).abs() < 1e-10);
    }

    #[test]
    fn single_decay_generating_function_closed_form() {
        let g = 1.0;
        let model = AtomModel::two_level(0.0, 0.0);
        let t = std::f64::consts::LN_2 / g;
        let state = evolve(&model, g, &excited_density(), t, 0.005).unwrap();
        for s in [-2.0f64, -0.5, 0.0, 0.7, 3.0, 50.0] {
            let expected = -(0.5 + 0.5 * (-s).exp()).ln();
            assert_abs_diff_eq!(state.finite_time_generating(s), expected, epsilon = 1e-6);
        }
    }

    #[test]
    fn bernoulli_cumulants_at_half_life() {
        let model = AtomModel::two_level(0.0, 0.0);
        let t = std::f64::consts::LN_2;
        let state = evolve(&model, 1.0, &excited_density(), t, 0.005).unwrap();
        assert_abs_diff_eq!(state.finite_time_cumulants(0.0, 1).unwrap(), 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(state.finite_time_cumulants(0.0, 2).unwrap(), -0.25, epsilon = 1e-6);
        // third central moment of a fair Bernoulli vanishes
        assert_abs_diff_eq!(state.finite_time_cumulants(0.0, 3).unwrap(), 0.0, epsilon = 1e-6);
    }

    #[test]
    fn mean_count_is_first_moment_of_pn() {
        let model = AtomModel::two_level(0.0, 0.25);
        let state = evolve(&model, 0.95, &model.initial_density(), 10.0, 0.02).unwrap();
        let direct: f64 = state
            .pn_distribution()
            .iter()
            .map(|(n, p)| *n as f64 * p)
            .sum();
        assert_abs_diff_eq!(
            state.finite_time_cumulants(0.0, 1).unwrap(),
            direct,
            epsilon = 1e-10
        );
    }

    #[test]
    fn exact_cumulants_match_finite_differences_of_generating_function() {
        let model = AtomModel::two_level(0.0, 0.25);
        let state = evolve(&model, 0.95, &model.initial_density(), 10.0, 0.02).unwrap();
        let h = 1e-3;
        for s in [-0.5, 0.0, 0.8] {
            let f = |z: f64| state.finite_time_generating(z);
            let d1 = (f(s + h) - f(s - h)) / (2.0 * h);
            let d1h = (f(s + h / 2.0) - f(s - h / 2.0)) / h;
            let fd1 = (4.0 * d1h - d1) / 3.0;
            let d2 = (f(s + h) - 2.0 * f(s) + f(s - h)) / (h * h);
            let d2h = (f(s + h / 2.0) - 2.0 * f(s) + f(s - h / 2.0)) / (h * h / 4.0);
            let fd2 = (4.0 * d2h - d2) / 3.0;
            assert_abs_diff_eq!(state.finite_time_cumulants(s, 1).unwrap(), fd1, epsilon = 1e-6);
            assert_abs_diff_eq!(state.finite_time_cumulants(s, 2).unwrap(), fd2, epsilon = 1e-6);
        }
    }

    #[test]
    fn ladder_sum_matches_unconditional_master_equation() {
        // Independent route: exponentiate the s = 0 superoperator directly.
        let model = AtomModel::two_level(0.3, 0.25);
        let g = 0.7;
        let t = 4.0;
        let state = evolve(&model, g, &model.initial_density(), t, 0.01).unwrap();
        let summed = state.total_density();

        let gen = build_tilted_generator(&model, g, 0.0);
        let propagator = mat_exp(gen.matrix(), t, ExpMode::General).unwrap();
        let rho_t = propagator.matvec(&vec_matrix(&model.initial_density()).view());
        let direct = crate::linalg::unvec_matrix(&rho_t.view(), 2);

        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (summed.get(i, j) - direct.get(i, j)).norm() < 1e-8,
                    "entry ({i},{j}): {} vs {}",
                    summed.get(i, j),
                    direct.get(i, j)
                );
            }
        }
    }

    #[test]
    fn recorded_snapshots_are_monotone_in_time() {
        let model = AtomModel::two_level(0.0, 0.25);
        let states = evolve_recorded(
            &model,
            0.95,
            &model.initial_density(),
            6.0,
            0.02,
            &[0.0, 3.0, 6.0],
        )
        .unwrap();
        assert_eq!(states.len(), 3);
        assert!(states.windows(2).all(|w| w[0].t() < w[1].t()));
        assert_abs_diff_eq!(states[2].t(), 6.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_oversized_step() {
        let model = AtomModel::two_level(0.0, 5.0);
        let err = evolve(&model, 1.0, &model.initial_density(), 1.0, 0.05);
        assert!(matches!(err, Err(CountingError::StepTooLarge { .. })));
    }

    #[test]
    fn rejects_invalid_initial_state() {
        let model = AtomModel::two_level(0.0, 0.3);
        let mut bad = CMatrix::zeros(2, 2);
        bad.set(0, 0, C64::new(2.0, 0.0));
        assert!(matches!(
            evolve(&model, 0.9, &bad, 1.0, 0.01),
            Err(CountingError::InvalidInitialState { .. })
        ));
    }

    #[test]
    fn stable_step_respects_bound() {
        let model = AtomModel::two_level(0.4, 0.25);
        let g = 0.95;
        let dt = stable_step(&model, g);
        let norm = model.hamiltonian().spectral_norm_hermitian().unwrap();
        assert!(dt * (norm + g) < STEP_BOUND);
    }
}
