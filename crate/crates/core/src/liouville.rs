//! The s-tilted generator and the long-time large-deviation analysis.
//!
//! Biasing trajectories by `e^{-s n}` turns the count-resolved master
//! equation into a single deformed generator
//!
//! ```text
//! L_s vec(rho) = vec( -i[H, rho]
//!                     + gamma_eff (e^{-s} sigma^- rho sigma^+
//!                                  - 1/2 {sigma^+ sigma^-, rho}) )
//! ```
//!
//! whose dominant eigenvalue `theta(s)` carries the whole long-time counting
//! statistics: the generating function grows as `t * lambda(s)` with
//! `lambda(s) = -theta(s)`, the flux is `lambda'(s)`, and the second
//! derivative gives shot noise, Fano and Mandel factors. Derivatives are
//! central finite differences with one Richardson refinement.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use thiserror::Error;

use crate::atom::AtomModel;
use crate::detection::DetectionParams;
use crate::linalg::{
    eigen_spectrum, null_vector, unvec_matrix, vectorize_superop, CMatrix, LinalgError,
};

/// Default finite-difference step in `s`.
pub const DEFAULT_FD_STEP: f64 = 1e-3;
/// Below this flux the Fano and Mandel ratios are reported as undefined.
pub const FLUX_FLOOR: f64 = 1e-12;
/// Spectral gaps below this raise the degenerate-dominance flag.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum LdError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("s grid must be strictly increasing and finite")]
    GridNotIncreasing,
    #[error("tilted generator has an empty spectrum")]
    EmptySpectrum,
}

type Result<T> = std::result::Result<T, LdError>;

/// The deformed generator at one value of the conjugate field.
#[derive(Debug, Clone)]
pub struct TiltedGenerator {
    s: f64,
    gamma_eff: f64,
    matrix: CMatrix,
    model: AtomModel,
}

impl TiltedGenerator {
    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn gamma_eff(&self) -> f64 {
        self.gamma_eff
    }

    /// The d^2 x d^2 generator matrix (column-stacking convention).
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn model(&self) -> &AtomModel {
        &self.model
    }
}

/// Assemble `L_s` for a model and effective rate.
///
/// The conjugate field enters only through the factor `e^{-s}` on the
/// recycling term; `s = 0` is the ordinary Lindblad generator.
pub fn build_tilted_generator(model: &AtomModel, gamma_eff: f64, s: f64) -> TiltedGenerator {
    assert!(
        gamma_eff >= 0.0 && gamma_eff.is_finite(),
        "gamma_eff must be a nonnegative rate"
    );
    let d = model.dim();
    let id = CMatrix::identity(d);
    let h = model.hamiltonian();
    let lower = model.jump_op();
    let raise = lower.dagger();
    let raise_lower = raise.dot(lower);

    let left_h = vectorize_superop(h, &id).expect("consistent dims");
    let right_h = vectorize_superop(&id, h).expect("consistent dims");
    let recycle = vectorize_superop(lower, &raise).expect("consistent dims");
    let left_rl = vectorize_superop(&raise_lower, &id).expect("consistent dims");
    let right_rl = vectorize_superop(&id, &raise_lower).expect("consistent dims");

    let i = C64::i();
    let weight = C64::new(gamma_eff * (-s).exp(), 0.0);
    let half = C64::new(gamma_eff * 0.5, 0.0);
    let data = left_h.array().mapv(|z| -i * z)
        + right_h.array().mapv(|z| i * z)
        + recycle.array().mapv(|z| weight * z)
        + left_rl.array().mapv(|z| -half * z)
        + right_rl.array().mapv(|z| -half * z);

    TiltedGenerator {
        s,
        gamma_eff,
        matrix: CMatrix::from_array(data).expect("finite generator"),
        model: model.clone(),
    }
}

/// Dominant-eigenvalue summary of one tilted generator.
#[derive(Debug, Clone, Copy)]
pub struct CharacteristicPoint {
    /// `lambda(s) = -Re theta(s)`, the long-time rate of the generating function.
    pub lambda: f64,
    /// The dominant eigenvalue itself (diagnostics; imaginary part should be tiny).
    pub theta: C64,
    /// `Re theta_1 - Re theta_2` between the two largest-real-part eigenvalues.
    pub gap: f64,
    /// Set when the gap closes below [`DEGENERACY_TOL`] (near phase coexistence)
    /// instead of silently picking one of the near-degenerate branches.
    pub degenerate: bool,
}

/// Dominant eigenvalue of `L_s` and the spectral gap below it.
pub fn characteristic_function(gen: &TiltedGenerator) -> Result<CharacteristicPoint> {
    let pairs = eigen_spectrum(gen.matrix())?;
    let first = pairs.first().ok_or(LdError::EmptySpectrum)?;
    let gap = match pairs.get(1) {
        Some(second) => first.value.re - second.value.re,
        None => f64::INFINITY,
    };
    Ok(CharacteristicPoint {
        lambda: -first.value.re,
        theta: first.value,
        gap,
        degenerate: gap < DEGENERACY_TOL,
    })
}

/// One point of the large-deviation sweep.
#[derive(Debug, Clone, Copy)]
pub struct LdPoint {
    pub s: f64,
    /// Characteristic function `lambda(s)`; zero at `s = 0`.
    pub lambda: f64,
    /// Photon flux `I(s) = lambda'(s)`.
    pub flux: f64,
    /// Per-time second cumulant `lambda''(s)` (nonpositive for a concave `lambda`).
    pub lambda2: f64,
    /// Shot noise `S(s) = 2 |lambda''(s)|`.
    pub shot_noise: f64,
    /// Fano ratio `lambda''/lambda'`; undefined when the flux vanishes.
    pub fano: Option<f64>,
    /// Mandel factor `Q(s) = -lambda''/lambda' - 1`; undefined when the flux vanishes.
    pub mandel_q: Option<f64>,
    /// Spectral gap of `L_s` at this point.
    pub spectral_gap: f64,
    /// Degenerate-dominance warning from the eigenvalue selection.
    pub degenerate: bool,
}

/// Evaluate `lambda(s)` alone (one eigendecomposition).
pub fn lambda_at(model: &AtomModel, gamma_eff: f64, s: f64) -> Result<f64> {
    Ok(characteristic_function(&build_tilted_generator(model, gamma_eff, s))?.lambda)
}

/// Full large-deviation point with flux and fluctuation factors, using the
/// default finite-difference step.
pub fn ld_point(model: &AtomModel, det: &DetectionParams, s: f64) -> Result<LdPoint> {
    ld_point_with_step(model, det, s, DEFAULT_FD_STEP)
}

/// As [`ld_point`] with an explicit central-difference step `h`; the
/// derivatives use one level of Richardson extrapolation (stencil
/// `s, s +/- h/2, s +/- h`).
pub fn ld_point_with_step(
    model: &AtomModel,
    det: &DetectionParams,
    s: f64,
    h: f64,
) -> Result<LdPoint> {
    let gamma_eff = det.effective_rate();
    let center = characteristic_function(&build_tilted_generator(model, gamma_eff, s))?;
    let lam = |ds: f64| lambda_at(model, gamma_eff, s + ds);
    let (lm, lmh, lph, lp) = (lam(-h)?, lam(-h / 2.0)?, lam(h / 2.0)?, lam(h)?);

    let d1_full = (lp - lm) / (2.0 * h);
    let d1_half = (lph - lmh) / h;
    let flux = (4.0 * d1_half - d1_full) / 3.0;

    let d2_full = (lp - 2.0 * center.lambda + lm) / (h * h);
    let d2_half = (lph - 2.0 * center.lambda + lmh) / (h * h / 4.0);
    let lambda2 = (4.0 * d2_half - d2_full) / 3.0;

    let (fano, mandel_q) = if flux.abs() < FLUX_FLOOR {
        (None, None)
    } else {
        (Some(lambda2 / flux), Some(-lambda2 / flux - 1.0))
    };

    Ok(LdPoint {
        s,
        lambda: center.lambda,
        flux,
        lambda2,
        shot_noise: 2.0 * lambda2.abs(),
        fano,
        mandel_q,
        spectral_gap: center.gap,
        degenerate: center.degenerate,
    })
}

/// Evaluate [`ld_point`] over a strictly increasing grid.
///
/// Points are independent and evaluated in parallel; the output order is the
/// grid order, and per-point failures are carried through without aborting
/// the rest of the sweep.
pub fn sweep(
    model: &AtomModel,
    det: &DetectionParams,
    s_grid: &[f64],
) -> Result<Vec<Result<LdPoint>>> {
    if s_grid.iter().any(|s| !s.is_finite())
        || s_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(LdError::GridNotIncreasing);
    }
    Ok(s_grid
        .par_iter()
        .map(|&s| ld_point(model, det, s))
        .collect())
}

/// Stationary density matrix of the untilted generator, renormalized by trace.
pub fn steady_state(model: &AtomModel, gamma_eff: f64) -> Result<CMatrix> {
    let gen = build_tilted_generator(model, gamma_eff, 0.0);
    let v = null_vector(gen.matrix())?;
    let rho = unvec_matrix(&v.view(), model.dim());
    let tr = rho.trace();
    let d = model.dim();
    let mut out = CMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            // hermitize and normalize in one pass
            let z = (rho.get(i, j) / tr + (rho.get(j, i) / tr).conj()) / 2.0;
            out.set(i, j, z);
        }
    }
    Ok(out)
}

/// Stationary photon flux `gamma_eff * <sigma^+ sigma^->_ss`, the independent
/// route to `I(0)`.
pub fn stationary_flux(model: &AtomModel, gamma_eff: f64) -> Result<f64> {
    let rho = steady_state(model, gamma_eff)?;
    let raise_lower = model.jump_op().dagger().dot(model.jump_op());
    Ok(gamma_eff * raise_lower.dot(&rho).trace().re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vec_matrix;
    use approx::assert_abs_diff_eq;

    fn detector_x(x: f64) -> DetectionParams {
        DetectionParams::from_x(1.0, 1.0, 0.0, x).unwrap()
    }

    /// Two-level model with the drive pinned by gamma_eff(x = 20) = 4 omega.
    fn reference_two_level() -> (AtomModel, DetectionParams) {
        let det = detector_x(20.0);
        let omega = det.effective_rate() / 4.0;
        (AtomModel::two_level(0.0, omega), det)
    }

    #[test]
    fn trace_is_left_null_vector_at_s_zero() {
        let (model, det) = reference_two_level();
        let gen = build_tilted_generator(&model, det.effective_rate(), 0.0);
        let d = model.dim();
        // row vector of vec(I) applied from the left
        let m = gen.matrix().array();
        for col in 0..d * d {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..d {
                acc += m[(i + d * i, col)];
            }
            assert!(acc.norm() < 1e-10, "column {col}: {acc}");
        }
    }

    #[test]
    fn no_jump_limit_annihilates_dark_state() {
        // e^{-s} underflows to exactly zero at s = 800.
        let model = AtomModel::two_level(0.0, 0.0);
        let gen = build_tilted_generator(&model, 0.9, 800.0);
        let rho_g = model.initial_density();
        let out = gen.matrix().matvec(&vec_matrix(&rho_g).view());
        assert!(out.iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn generator_matches_hand_computed_four_by_four() {
        // H = 0 two-level: basis of vec(rho) is (rho_ee, rho_ge, rho_eg, rho_gg).
        let model = AtomModel::two_level(0.0, 0.0);
        let g = 0.7;
        let s = 0.3;
        let gen = build_tilted_generator(&model, g, s);
        let m = gen.matrix();
        let w = g * (-s).exp();
        let expected = [
            [-g, 0.0, 0.0, 0.0],
            [0.0, -g / 2.0, 0.0, 0.0],
            [0.0, 0.0, -g / 2.0, 0.0],
            [w, 0.0, 0.0, 0.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_abs_diff_eq!(m.get(i, j).re, expected[i][j], epsilon = 1e-14);
                assert_abs_diff_eq!(m.get(i, j).im, 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn recycling_term_scales_with_exp_minus_s() {
        let model = AtomModel::two_level(0.0, 0.0);
        for s in [-1.0f64, 0.0, 2.5] {
            let gen = build_tilted_generator(&model, 1.3, s);
            assert_abs_diff_eq!(gen.matrix().get(3, 0).re, 1.3 * (-s).exp(), epsilon = 1e-13);
        }
    }

    #[test]
    fn lambda_vanishes_at_s_zero() {
        let (model, det) = reference_two_level();
        let p = characteristic_function(&build_tilted_generator(
            &model,
            det.effective_rate(),
            0.0,
        ))
        .unwrap();
        assert!(p.lambda.abs() < 1e-9, "lambda(0) = {}", p.lambda);
    }

    #[test]
    fn undriven_ground_state_atom_never_emits() {
        let model = AtomModel::two_level(0.0, 0.0);
        for s in [-1.0, -0.2, 0.0, 0.4, 1.5] {
            let lam = lambda_at(&model, 0.95, s).unwrap();
            assert!(lam.abs() < 1e-10, "lambda({s}) = {lam}");
        }
    }

    #[test]
    fn driven_steady_state_population_is_one_sixth() {
        // Resonant drive with gamma = 4 omega: rho_ee = 4w^2/(g^2 + 8w^2) = 1/6.
        let model = AtomModel::two_level(0.0, 0.25);
        let rho = steady_state(&model, 1.0).unwrap();
        assert_abs_diff_eq!(rho.get(0, 0).re, 1.0 / 6.0, epsilon = 1e-9);
        assert_abs_diff_eq!(rho.trace().re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn steady_state_matches_brute_force_integration() {
        // Independent oracle: long-time RK4 of the unvectorized master
        // equation, never touching the eigensolver.
        let omega = 0.25;
        let g = 1.0;
        let model = AtomModel::two_level(0.0, omega);
        let h = model.hamiltonian();
        let lower = model.jump_op();
        let raise = lower.dagger();
        let rl = raise.dot(lower);
        let rhs = |rho: &CMatrix| -> CMatrix {
            let comm = h.dot(rho).array() - rho.dot(h).array();
            let recycle = lower.dot(rho).dot(&raise);
            let anti = rl.dot(rho).array() + rho.dot(&rl).array();
            CMatrix::from_array(
                comm.mapv(|z| -C64::i() * z)
                    + recycle.array().mapv(|z| z * g)
                    + anti.mapv(|z| z * (-0.5 * g)),
            )
            .unwrap()
        };
        let mut rho = model.initial_density();
        let dt = 0.02;
        for _ in 0..(60.0f64 / dt) as usize {
            let k1 = rhs(&rho);
            let k2 = rhs(&CMatrix::from_array(rho.array() + k1.array().mapv(|z| z * (dt / 2.0))).unwrap());
            let k3 = rhs(&CMatrix::from_array(rho.array() + k2.array().mapv(|z| z * (dt / 2.0))).unwrap());
            let k4 = rhs(&CMatrix::from_array(rho.array() + k3.array().mapv(|z| z * dt)).unwrap());
            let step = (k1.array() + k2.array().mapv(|z| z * 2.0) + k3.array().mapv(|z| z * 2.0) + k4.array())
                .mapv(|z| z * (dt / 6.0));
            rho = CMatrix::from_array(rho.array() + step).unwrap();
        }
        let spectral = steady_state(&model, g).unwrap();
        assert_abs_diff_eq!(rho.get(0, 0).re, spectral.get(0, 0).re, epsilon = 1e-9);
        assert_abs_diff_eq!(rho.get(0, 0).re, 1.0 / 6.0, epsilon = 1e-9);
    }

    #[test]
    fn flux_at_zero_matches_steady_state_oracle() {
        let (model, det) = reference_two_level();
        let point = ld_point(&model, &det, 0.0).unwrap();
        // gamma_eff * rho_ee^ss = gamma_eff / 6
        assert_abs_diff_eq!(point.flux, 0.15833, epsilon = 1e-4);
        let oracle = stationary_flux(&model, det.effective_rate()).unwrap();
        assert!((point.flux - oracle).abs() / oracle < 1e-6);
        assert!(point.lambda.abs() < 1e-9);
    }

    #[test]
    fn mandel_q_is_sub_poissonian_at_s_zero() {
        let (model, det) = reference_two_level();
        let point = ld_point(&model, &det, 0.0).unwrap();
        assert!(point.mandel_q.unwrap() < 0.0, "Q = {:?}", point.mandel_q);
    }

    #[test]
    fn undriven_flux_is_zero_and_q_undefined() {
        let model = AtomModel::two_level(0.0, 0.0);
        let det = detector_x(20.0);
        let point = ld_point(&model, &det, 0.2).unwrap();
        assert!(point.flux.abs() < 1e-10);
        assert!(point.mandel_q.is_none());
        assert!(point.fano.is_none());
    }

    #[test]
    fn sweep_is_ordered_and_zero_at_origin() {
        let (model, det) = reference_two_level();
        let grid = [-1.0, 0.0, 1.0];
        let points = sweep(&model, &det, &grid).unwrap();
        assert_eq!(points.len(), 3);
        let middle = points[1].as_ref().unwrap();
        assert!(middle.lambda.abs() < 1e-9);
        for (p, s) in points.iter().zip(grid.iter()) {
            assert_eq!(p.as_ref().unwrap().s, *s);
        }
    }

    #[test]
    fn sweep_rejects_unordered_grid() {
        let (model, det) = reference_two_level();
        assert!(matches!(
            sweep(&model, &det, &[0.0, 0.0]),
            Err(LdError::GridNotIncreasing)
        ));
        assert!(matches!(
            sweep(&model, &det, &[1.0, -1.0]),
            Err(LdError::GridNotIncreasing)
        ));
    }

    #[test]
    fn zero_jump_generator_raises_degenerate_flag() {
        // No dissipation at all: the spectrum is purely imaginary and the
        // dominance gap closes.
        let model = AtomModel::new(
            ndarray::Array2::zeros((2, 2)),
            ndarray::Array2::zeros((2, 2)),
            vec![],
            ndarray::array![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        )
        .unwrap();
        let gen = build_tilted_generator(&model, 0.0, 0.0);
        let p = characteristic_function(&gen).unwrap();
        assert!(p.degenerate);
        assert!(p.gap < DEGENERACY_TOL);
    }

    #[test]
    fn q_step_halving_is_stable() {
        let (model, det) = reference_two_level();
        for s in [-0.5, 0.0, 0.7] {
            let q1 = ld_point_with_step(&model, &det, s, DEFAULT_FD_STEP)
                .unwrap()
                .mandel_q
                .unwrap();
            let q2 = ld_point_with_step(&model, &det, s, DEFAULT_FD_STEP / 2.0)
                .unwrap()
                .mandel_q
                .unwrap();
            assert!((q1 - q2).abs() < 1e-4, "s = {s}: {q1} vs {q2}");
        }
    }
}
