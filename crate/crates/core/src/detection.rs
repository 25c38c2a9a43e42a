//! Closed-form quantities of the finite-response-time detection model.
//!
//! A Lorentzian reservoir of half-width `lambda_bw` centered at offset
//! `d * lambda_bw` from the atomic line, checked by a detector every `tau`,
//! enters all dynamics through two numbers: the scaling variable
//! `x = lambda_bw * tau` and the complex offset factor `c = 1 - i d`.
//!
//! The null-result survival amplitude over a window `dt` is
//!
//! ```text
//! abar(dt) = exp{ -[1/c - (1 - e^{-c x}) / (c^2 x)] * gamma * dt / 2 }
//! ```
//!
//! and the measurement-renormalized decay rate is its squared-modulus rate,
//!
//! ```text
//! gamma_eff(x) = Re{ [1 - (c x)^{-1} (1 - e^{-c x})] / c } * gamma ,
//! ```
//!
//! so `|abar(dt)|^2 = exp(-gamma_eff dt)` holds identically. `x -> infinity`
//! recovers the ordinary Markovian rate `gamma`; `x = 0` freezes the atom
//! (Zeno limit) and is handled as an explicit analytic branch because the
//! formula is 0/0 there.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DetectionError {
    #[error("invalid detection parameter {name} = {value}: {reason}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("negative window duration dt = {dt}")]
    NegativeDuration { dt: f64 },
}

type Result<T> = std::result::Result<T, DetectionError>;

/// Environment and detector parameters.
///
/// Units: `gamma` and `lambda_bw` are rates (1/time), `tau` is a time, and
/// `d` is the dimensionless offset of the atomic transition from the
/// spectral center in units of the bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionParams {
    gamma: f64,
    lambda_bw: f64,
    d: f64,
    tau: f64,
}

impl DetectionParams {
    pub fn new(gamma: f64, lambda_bw: f64, d: f64, tau: f64) -> Result<Self> {
        let check = |name: &'static str, value: f64, ok: bool, reason: &'static str| {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(DetectionError::InvalidParam {
                    name,
                    value,
                    reason,
                })
            }
        };
        check("gamma", gamma, gamma > 0.0, "must be a positive rate")?;
        check("lambda_bw", lambda_bw, lambda_bw > 0.0, "must be a positive rate")?;
        check("d", d, true, "must be finite")?;
        check("tau", tau, tau >= 0.0, "must be nonnegative")?;
        Ok(Self {
            gamma,
            lambda_bw,
            d,
            tau,
        })
    }

    /// Same parameters addressed through the scaling variable: `tau = x / lambda_bw`.
    pub fn from_x(gamma: f64, lambda_bw: f64, d: f64, x: f64) -> Result<Self> {
        if !x.is_finite() || x < 0.0 {
            return Err(DetectionError::InvalidParam {
                name: "x",
                value: x,
                reason: "must be nonnegative and finite",
            });
        }
        Self::new(gamma, lambda_bw, d, x / lambda_bw)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda_bw(&self) -> f64 {
        self.lambda_bw
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Scaling variable `x = lambda_bw * tau`.
    pub fn x(&self) -> f64 {
        self.lambda_bw * self.tau
    }

    /// Complex offset factor `c = 1 - i d`.
    pub fn c(&self) -> C64 {
        C64::new(1.0, -self.d)
    }

    /// The complex exponent coefficient `k = [1 - (cx)^{-1}(1 - e^{-cx})] / c`,
    /// so that `abar(dt) = exp(-k gamma dt / 2)` and `gamma_eff = Re(k) gamma`.
    ///
    /// `x = 0` returns 0 exactly (Zeno branch).
    pub fn decay_exponent(&self) -> C64 {
        let x = self.x();
        if x == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let c = self.c();
        (C64::new(1.0, 0.0) - one_minus_exp_neg_over(c * x)) / c
    }

    /// Null-result survival amplitude `abar(dt)` over a window of length `dt`.
    pub fn survival_amplitude(&self, dt: f64) -> Result<C64> {
        if !dt.is_finite() || dt < 0.0 {
            return Err(DetectionError::NegativeDuration { dt });
        }
        if self.x() == 0.0 || dt == 0.0 {
            return Ok(C64::new(1.0, 0.0));
        }
        Ok((-self.decay_exponent() * self.gamma * dt / 2.0).exp())
    }

    /// Measurement-renormalized decay rate `gamma_eff(x)`.
    ///
    /// Zero at `x = 0` (frozen atom), `gamma` as `x -> infinity`.
    pub fn effective_rate(&self) -> f64 {
        self.decay_exponent().re * self.gamma
    }

    /// Click-probability weight `q(dt) = 1 - |abar(dt)|^2` of the jump branch.
    ///
    /// Together with the squared survival amplitude this completes the
    /// two-outcome measurement: `q(dt) + |abar(dt)|^2 = 1` for any window.
    pub fn jump_weight(&self, dt: f64) -> Result<f64> {
        let abar = self.survival_amplitude(dt)?;
        Ok(1.0 - abar.norm_sqr())
    }
}

/// `(1 - e^{-z}) / z`, series-expanded near zero to avoid cancellation.
fn one_minus_exp_neg_over(z: C64) -> C64 {
    if z.norm() < 0.25 {
        // sum_{k>=0} (-1)^k z^k / (k+1)!
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for k in 1..=14 {
            term = -term * z / (k as f64 + 1.0);
            sum += term;
        }
        sum
    } else {
        (C64::new(1.0, 0.0) - (-z).exp()) / z
    }
}
