//! Driven few-level atoms with a single radiative channel.
//!
//! Basis ordering is fixed crate-wide: excited levels first, ground level
//! last. The null-result damping operator `diag{abar, 1, ..., 1}` acts on the
//! amplitude of the emitting excited level, which this ordering puts at
//! index 0.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::linalg::{CMatrix, LinalgError};

#[derive(Debug, Error)]
pub enum AtomError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("initial state norm {norm} is not 1 within 1e-12")]
    InitialStateNotNormalized { norm: f64 },
    #[error("dimension mismatch between Hamiltonian ({h}), jump operator ({jump}) and initial state ({state})")]
    InconsistentDims { h: usize, jump: usize, state: usize },
    #[error("jump operator is not a single radiative channel |g><e| with unit amplitude")]
    NoSingleChannel,
}

type Result<T> = std::result::Result<T, AtomError>;

/// A driven atom: Hermitian Hamiltonian, lowering operator, level labels and
/// a normalized initial state. Immutable after construction.
#[derive(Debug, Clone)]
pub struct AtomModel {
    dim: usize,
    hamiltonian: CMatrix,
    jump_op: CMatrix,
    level_labels: Vec<String>,
    initial_state: Array1<C64>,
}

impl AtomModel {
    /// Build a user-defined model. The Hamiltonian must be Hermitian within
    /// 1e-12 and the initial state normalized within 1e-12.
    pub fn new(
        hamiltonian: Array2<C64>,
        jump_op: Array2<C64>,
        level_labels: Vec<String>,
        initial_state: Array1<C64>,
    ) -> Result<Self> {
        let h = CMatrix::hermitian(hamiltonian)?;
        let jump = CMatrix::from_array(jump_op)?;
        let dim = h.nrows();
        if jump.nrows() != dim || jump.ncols() != dim || initial_state.len() != dim {
            return Err(AtomError::InconsistentDims {
                h: dim,
                jump: jump.nrows(),
                state: initial_state.len(),
            });
        }
        let norm = initial_state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() >= 1e-12 {
            return Err(AtomError::InitialStateNotNormalized { norm });
        }
        let labels = if level_labels.len() == dim {
            level_labels
        } else {
            (0..dim).map(|i| format!("level{i}")).collect()
        };
        Ok(Self {
            dim,
            hamiltonian: h,
            jump_op: jump,
            level_labels: labels,
            initial_state,
        })
    }

    /// Driven two-level atom: `H = (delta/2) sigma_z + omega sigma_x`,
    /// basis `(|e>, |g>)`, decay `|e> -> |g>`, initial state `|g>`.
    pub fn two_level(delta: f64, omega: f64) -> Self {
        let z = C64::new(0.0, 0.0);
        let h = ndarray::array![
            [C64::new(delta / 2.0, 0.0), C64::new(omega, 0.0)],
            [C64::new(omega, 0.0), C64::new(-delta / 2.0, 0.0)]
        ];
        let mut jump = Array2::zeros((2, 2));
        jump[(1, 0)] = C64::new(1.0, 0.0);
        let initial = ndarray::array![z, C64::new(1.0, 0.0)];
        Self::new(
            h,
            jump,
            vec!["e".into(), "g".into()],
            initial,
        )
        .expect("two-level constructor is always valid")
    }

    /// Driven three-level atom with two Rabi couplings and one radiative
    /// channel `|e1> -> |g>`. Basis `(|e1>, |e2>, |g>)`, initial state `|g>`.
    ///
    /// `H = sum_j [(delta_j/2)(|e_j><e_j| - |g><g|) + omega_j(|e_j><g| + |g><e_j|)]`.
    pub fn three_level(delta1: f64, delta2: f64, omega1: f64, omega2: f64) -> Self {
        let z = C64::new(0.0, 0.0);
        let h = ndarray::array![
            [C64::new(delta1 / 2.0, 0.0), z, C64::new(omega1, 0.0)],
            [z, C64::new(delta2 / 2.0, 0.0), C64::new(omega2, 0.0)],
            [
                C64::new(omega1, 0.0),
                C64::new(omega2, 0.0),
                C64::new(-(delta1 + delta2) / 2.0, 0.0)
            ]
        ];
        let mut jump = Array2::zeros((3, 3));
        jump[(2, 0)] = C64::new(1.0, 0.0);
        let initial = ndarray::array![z, z, C64::new(1.0, 0.0)];
        Self::new(
            h,
            jump,
            vec!["e1".into(), "e2".into(), "g".into()],
            initial,
        )
        .expect("three-level constructor is always valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn jump_op(&self) -> &CMatrix {
        &self.jump_op
    }

    pub fn level_labels(&self) -> &[String] {
        &self.level_labels
    }

    pub fn initial_state(&self) -> &Array1<C64> {
        &self.initial_state
    }

    /// Initial state as a density matrix |psi><psi|.
    pub fn initial_density(&self) -> CMatrix {
        let d = self.dim;
        let mut rho = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                rho.set(i, j, self.initial_state[i] * self.initial_state[j].conj());
            }
        }
        rho
    }

    /// The single radiative channel `(excited index, ground index)` when the
    /// jump operator is exactly one unit entry `|g><e|`; the click protocol
    /// requires this structure.
    pub fn emission_channel(&self) -> Result<(usize, usize)> {
        let mut channel = None;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let v = self.jump_op.get(i, j);
                if v.norm() > 1e-14 {
                    if channel.is_some() || (v - C64::new(1.0, 0.0)).norm() > 1e-12 {
                        return Err(AtomError::NoSingleChannel);
                    }
                    channel = Some((j, i)); // |i><j| lowers j into i
                }
            }
        }
        channel.ok_or(AtomError::NoSingleChannel)
    }
}
