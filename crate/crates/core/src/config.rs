//! Run configuration: TOML file schema, validation and resolution.
//!
//! All rates (`gamma`, `lambda`, `delta*`, `omega*`) share one unit system
//! (1/time); `tau`, `t_final` and `dt` are times in the same system; `d`,
//! `x` and `s` are dimensionless. Exactly one of `detection.tau` or
//! `detection.x` must be given; together with `lambda` they pin the same
//! scaling variable `x = lambda * tau`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atom::AtomModel;
use crate::detection::{DetectionError, DetectionParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config key `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
    #[error(transparent)]
    Detection(#[from] DetectionError),
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    TwoLevel,
    ThreeLevel,
}

/// Rule deriving a Rabi coupling from the detection parameters:
/// `omega = gamma_eff(x) / ratio`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaRule {
    /// Scaling variable at which the effective rate is evaluated.
    pub x: f64,
    /// Divisor applied to that rate.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    /// Two-level detuning (rate units). Default 0 (resonant drive).
    #[serde(default)]
    pub delta: f64,
    /// First / only Rabi coupling (rate units); alternative to `omega_rule`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    /// Derive the first coupling from `(gamma, d, x)` instead of giving it directly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_rule: Option<OmegaRule>,
    /// Three-level detunings (rate units). Default 0 (resonant lasers).
    #[serde(default)]
    pub delta1: f64,
    #[serde(default)]
    pub delta2: f64,
    /// Second Rabi coupling (rate units); alternative to `omega2_ratio`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega2: Option<f64>,
    /// Second coupling as a fraction of the first: `omega2 = omega2_ratio * omega1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega2_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSection {
    /// Natural emission rate Gamma (1/time).
    pub gamma: f64,
    /// Lorentzian bandwidth Lambda (1/time).
    pub lambda: f64,
    /// Dimensionless frequency offset. Default 0 (resonant spectral center).
    #[serde(default)]
    pub d: f64,
    /// Detector response time (time units). Give this or `x`, not both.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// Scaling variable `x = lambda * tau`. Give this or `tau`, not both.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XGridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    /// Logarithmic spacing (default true).
    #[serde(default = "default_true")]
    pub log: bool,
}

fn default_true() -> bool {
    true
}

impl Default for XGridSpec {
    fn default() -> Self {
        Self {
            min: 0.01,
            max: 100.0,
            points: 50,
            log: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// Conjugate-field grid, either explicit values...
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_values: Option<Vec<f64>>,
    /// ...or an even grid over [s_min, s_max].
    #[serde(default = "default_s_min")]
    pub s_min: f64,
    #[serde(default = "default_s_max")]
    pub s_max: f64,
    #[serde(default = "default_s_points")]
    pub s_points: usize,
    /// Scaling variables for the sweep command (default: the detection x).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_values: Option<Vec<f64>>,
    /// Grid for the rate-curve command.
    #[serde(default)]
    pub x_grid: XGridSpec,
    /// Evolution horizon (time units).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    /// Integrator step / trajectory window (time units); engine default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Ensemble size for the trajectory command.
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    /// Master RNG seed; every trajectory derives its own stream from it.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Number of ladder snapshots written by the count-evolution command.
    #[serde(default = "default_record_points")]
    pub record_points: usize,
}

fn default_s_min() -> f64 {
    -1.0
}
fn default_s_max() -> f64 {
    1.5
}
fn default_s_points() -> usize {
    101
}
fn default_trajectories() -> usize {
    1000
}
fn default_seed() -> u64 {
    12345
}
fn default_record_points() -> usize {
    11
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            s_values: None,
            s_min: default_s_min(),
            s_max: default_s_max(),
            s_points: default_s_points(),
            x_values: None,
            x_grid: XGridSpec::default(),
            t_final: None,
            dt: None,
            trajectories: default_trajectories(),
            seed: default_seed(),
            record_points: default_record_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Output directory; flag `--out` overrides.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub detection: DetectionSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_str(&text)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        match (self.detection.tau, self.detection.x) {
            (Some(_), Some(_)) => Err(ConfigError::Invalid {
                key: "detection",
                reason: "give exactly one of `tau` or `x`, not both".into(),
            }),
            (None, None) => Err(ConfigError::Invalid {
                key: "detection",
                reason: "give exactly one of `tau` or `x`".into(),
            }),
            _ => Ok(()),
        }?;
        if self.model.omega.is_none() && self.model.omega_rule.is_none() {
            return Err(ConfigError::Invalid {
                key: "model.omega",
                reason: "give `omega` or `omega_rule`".into(),
            });
        }
        if self.model.omega.is_some() && self.model.omega_rule.is_some() {
            return Err(ConfigError::Invalid {
                key: "model.omega",
                reason: "give `omega` or `omega_rule`, not both".into(),
            });
        }
        if self.model.kind == ModelKind::ThreeLevel
            && self.model.omega2.is_none()
            && self.model.omega2_ratio.is_none()
        {
            return Err(ConfigError::Invalid {
                key: "model.omega2",
                reason: "three-level models need `omega2` or `omega2_ratio`".into(),
            });
        }
        let grid = self.s_grid();
        if grid.is_empty()
            || grid.iter().any(|s| !s.is_finite())
            || grid.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(ConfigError::Invalid {
                key: "analysis.s_values",
                reason: "s grid must be nonempty, finite and strictly increasing".into(),
            });
        }
        if let Some(xs) = &self.analysis.x_values {
            if xs.is_empty() || xs.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(ConfigError::Invalid {
                    key: "analysis.x_values",
                    reason: "x values must be nonnegative and finite".into(),
                });
            }
        }
        Ok(())
    }

    /// Detector parameters at the configured (or overridden) scaling variable.
    pub fn detection_params(&self, x_override: Option<f64>) -> Result<DetectionParams> {
        let det = &self.detection;
        let params = match (x_override, det.x, det.tau) {
            (Some(x), _, _) | (None, Some(x), _) => {
                DetectionParams::from_x(det.gamma, det.lambda, det.d, x)?
            }
            (None, None, Some(tau)) => DetectionParams::new(det.gamma, det.lambda, det.d, tau)?,
            (None, None, None) => unreachable!("validated"),
        };
        Ok(params)
    }

    /// First Rabi coupling, resolving the derivation rule if present.
    pub fn resolved_omega(&self) -> Result<f64> {
        match (self.model.omega, self.model.omega_rule) {
            (Some(w), None) => Ok(w),
            (None, Some(rule)) => {
                if !rule.ratio.is_finite() || rule.ratio == 0.0 {
                    return Err(ConfigError::Invalid {
                        key: "model.omega_rule.ratio",
                        reason: "must be finite and nonzero".into(),
                    });
                }
                let at_x = DetectionParams::from_x(
                    self.detection.gamma,
                    self.detection.lambda,
                    self.detection.d,
                    rule.x,
                )?;
                Ok(at_x.effective_rate() / rule.ratio)
            }
            _ => unreachable!("validated"),
        }
    }

    /// Second Rabi coupling for three-level models.
    pub fn resolved_omega2(&self) -> Result<f64> {
        let omega1 = self.resolved_omega()?;
        match (self.model.omega2, self.model.omega2_ratio) {
            (Some(w), _) => Ok(w),
            (None, Some(r)) => Ok(r * omega1),
            (None, None) => unreachable!("validated for three-level"),
        }
    }

    pub fn atom_model(&self) -> Result<AtomModel> {
        let omega = self.resolved_omega()?;
        Ok(match self.model.kind {
            ModelKind::TwoLevel => AtomModel::two_level(self.model.delta, omega),
            ModelKind::ThreeLevel => AtomModel::three_level(
                self.model.delta1,
                self.model.delta2,
                omega,
                self.resolved_omega2()?,
            ),
        })
    }

    /// The conjugate-field grid.
    pub fn s_grid(&self) -> Vec<f64> {
        if let Some(values) = &self.analysis.s_values {
            return values.clone();
        }
        let a = &self.analysis;
        if a.s_points <= 1 {
            return vec![a.s_min];
        }
        (0..a.s_points)
            .map(|i| a.s_min + (a.s_max - a.s_min) * i as f64 / (a.s_points - 1) as f64)
            .collect()
    }

    /// Scaling variables for the sweep command.
    pub fn x_values(&self) -> Result<Vec<f64>> {
        match &self.analysis.x_values {
            Some(xs) => Ok(xs.clone()),
            None => Ok(vec![self.detection_params(None)?.x()]),
        }
    }

    /// The x grid for the rate-curve command.
    pub fn x_grid(&self) -> Vec<f64> {
        let g = self.analysis.x_grid;
        if g.points <= 1 {
            return vec![g.min];
        }
        (0..g.points)
            .map(|i| {
                let t = i as f64 / (g.points - 1) as f64;
                if g.log {
                    (g.min.ln() + (g.max.ln() - g.min.ln()) * t).exp()
                } else {
                    g.min + (g.max - g.min) * t
                }
            })
            .collect()
    }

    /// Fully resolved configuration for output metadata: the parsed sections
    /// plus every derived quantity after defaulting.
    pub fn resolved_json(&self) -> Result<serde_json::Value> {
        let det = self.detection_params(None)?;
        let mut root = serde_json::to_value(self).expect("config serializes");
        let derived = serde_json::json!({
            "x": det.x(),
            "tau": det.tau(),
            "gamma_eff": det.effective_rate(),
            "omega": self.resolved_omega()?,
            "omega2": match self.model.kind {
                ModelKind::ThreeLevel => Some(self.resolved_omega2()?),
                ModelKind::TwoLevel => None,
            },
            "s_grid_len": self.s_grid().len(),
        });
        root.as_object_mut()
            .expect("config is a table")
            .insert("resolved".into(), derived);
        Ok(root)
    }
}
