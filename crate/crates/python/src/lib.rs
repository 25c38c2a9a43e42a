//! Python bindings: the detection model, the two atom models, and the three
//! engines (spectral large-deviation sweep, count-resolved ladder, click
//! trajectories) exposed as plain Python types.
//!
//! Build with `cargo build --release -p clickstat-python`; the resulting
//! `libclickstat.so` imports as the module `clickstat` (see
//! `python/smoke_test.py`).

use num_complex::Complex64 as C64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use clickstat_core::atom::AtomModel;
use clickstat_core::counting;
use clickstat_core::detection::DetectionParams;
use clickstat_core::liouville;
use clickstat_core::trajectory::{self, TrajectorySeed};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Environment and detector parameters (gamma, bandwidth, offset d, and
/// either the response time tau or the scaling variable x = bandwidth * tau).
#[pyclass(name = "DetectionParams", frozen)]
struct PyDetectionParams {
    inner: DetectionParams,
}

#[pymethods]
impl PyDetectionParams {
    #[new]
    #[pyo3(signature = (gamma, bandwidth, d = 0.0, tau = None, x = None))]
    fn new(gamma: f64, bandwidth: f64, d: f64, tau: Option<f64>, x: Option<f64>) -> PyResult<Self> {
        let inner = match (tau, x) {
            (Some(tau), None) => DetectionParams::new(gamma, bandwidth, d, tau),
            (None, Some(x)) => DetectionParams::from_x(gamma, bandwidth, d, x),
            _ => {
                return Err(PyValueError::new_err(
                    "give exactly one of tau= or x=",
                ))
            }
        }
        .map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma()
    }

    #[getter]
    fn bandwidth(&self) -> f64 {
        self.inner.lambda_bw()
    }

    #[getter]
    fn d(&self) -> f64 {
        self.inner.d()
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau()
    }

    /// Scaling variable x = bandwidth * tau.
    #[getter]
    fn x(&self) -> f64 {
        self.inner.x()
    }

    /// Measurement-renormalized decay rate gamma_eff(x).
    #[getter]
    fn gamma_eff(&self) -> f64 {
        self.inner.effective_rate()
    }

    /// Null-result survival amplitude abar(dt) as a Python complex.
    fn survival_amplitude(&self, dt: f64) -> PyResult<C64> {
        self.inner.survival_amplitude(dt).map_err(value_err)
    }

    /// Click-probability weight q(dt) = 1 - |abar(dt)|^2.
    fn jump_weight(&self, dt: f64) -> PyResult<f64> {
        self.inner.jump_weight(dt).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "DetectionParams(gamma={}, bandwidth={}, d={}, tau={})",
            self.inner.gamma(),
            self.inner.lambda_bw(),
            self.inner.d(),
            self.inner.tau()
        )
    }
}

/// A driven few-level atom with a single radiative channel.
#[pyclass(name = "AtomModel", frozen)]
struct PyAtomModel {
    inner: AtomModel,
}

#[pymethods]
impl PyAtomModel {
    /// Two-level atom with detuning delta and Rabi coupling omega.
    #[staticmethod]
    #[pyo3(signature = (delta = 0.0, omega = 0.0))]
    fn two_level(delta: f64, omega: f64) -> Self {
        Self {
            inner: AtomModel::two_level(delta, omega),
        }
    }

    /// Three-level atom with two couplings; emission only from level 1.
    #[staticmethod]
    #[pyo3(signature = (delta1 = 0.0, delta2 = 0.0, omega1 = 0.0, omega2 = 0.0))]
    fn three_level(delta1: f64, delta2: f64, omega1: f64, omega2: f64) -> Self {
        Self {
            inner: AtomModel::three_level(delta1, delta2, omega1, omega2),
        }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn levels(&self) -> Vec<String> {
        self.inner.level_labels().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("AtomModel(dim={}, levels={:?})", self.inner.dim(), self.inner.level_labels())
    }
}

fn point_to_dict<'py>(py: Python<'py>, p: &liouville::LdPoint) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("s", p.s)?;
    d.set_item("lambda", p.lambda)?;
    d.set_item("flux", p.flux)?;
    d.set_item("shot_noise", p.shot_noise)?;
    d.set_item("fano", p.fano)?;
    d.set_item("mandel_q", p.mandel_q)?;
    d.set_item("gap", p.spectral_gap)?;
    d.set_item("degenerate", p.degenerate)?;
    Ok(d)
}

/// One large-deviation point: lambda(s), flux, shot noise, Fano, Mandel Q
/// and the spectral gap of the tilted generator.
#[pyfunction]
fn ld_point<'py>(
    py: Python<'py>,
    model: &PyAtomModel,
    det: &PyDetectionParams,
    s: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = liouville::ld_point(&model.inner, &det.inner, s).map_err(value_err)?;
    point_to_dict(py, &p)
}

/// Evaluate `ld_point` over a strictly increasing grid.
#[pyfunction]
fn ld_sweep<'py>(
    py: Python<'py>,
    model: &PyAtomModel,
    det: &PyDetectionParams,
    s_grid: Vec<f64>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let points = liouville::sweep(&model.inner, &det.inner, &s_grid).map_err(value_err)?;
    points
        .into_iter()
        .map(|p| point_to_dict(py, &p.map_err(value_err)?))
        .collect()
}

/// Stationary flux gamma_eff * <sigma^+ sigma^->_ss (the independent route
/// to the s = 0 flux).
#[pyfunction]
fn stationary_flux(model: &PyAtomModel, det: &PyDetectionParams) -> PyResult<f64> {
    liouville::stationary_flux(&model.inner, det.inner.effective_rate()).map_err(value_err)
}

/// Integrate the count-resolved master equation from the model's initial
/// state and return [(n, P(n, t_final)), ...].
#[pyfunction]
#[pyo3(signature = (model, det, t_final, dt = None))]
fn pn_distribution(
    model: &PyAtomModel,
    det: &PyDetectionParams,
    t_final: f64,
    dt: Option<f64>,
) -> PyResult<Vec<(usize, f64)>> {
    let gamma_eff = det.inner.effective_rate();
    let dt = dt.unwrap_or_else(|| counting::stable_step(&model.inner, gamma_eff));
    let state = counting::evolve(
        &model.inner,
        gamma_eff,
        &model.inner.initial_density(),
        t_final,
        dt,
    )
    .map_err(value_err)?;
    Ok(state.pn_distribution())
}

/// Finite-time generating function F(s, t_final) from the same evolution.
#[pyfunction]
#[pyo3(signature = (model, det, t_final, s, dt = None))]
fn finite_time_generating(
    model: &PyAtomModel,
    det: &PyDetectionParams,
    t_final: f64,
    s: f64,
    dt: Option<f64>,
) -> PyResult<f64> {
    let gamma_eff = det.inner.effective_rate();
    let dt = dt.unwrap_or_else(|| counting::stable_step(&model.inner, gamma_eff));
    let state = counting::evolve(
        &model.inner,
        gamma_eff,
        &model.inner.initial_density(),
        t_final,
        dt,
    )
    .map_err(value_err)?;
    Ok(state.finite_time_generating(s))
}

/// Simulate one click trajectory; returns the click times.
#[pyfunction]
#[pyo3(signature = (model, det, horizon, dt, seed, stream = 0))]
fn simulate_trajectory(
    model: &PyAtomModel,
    det: &PyDetectionParams,
    horizon: f64,
    dt: f64,
    seed: u64,
    stream: u64,
) -> PyResult<Vec<f64>> {
    let record = trajectory::simulate(
        &model.inner,
        &det.inner,
        horizon,
        dt,
        TrajectorySeed {
            master: seed,
            stream,
        },
    )
    .map_err(value_err)?;
    Ok(record.click_times().to_vec())
}

/// Simulate an ensemble and return its count statistics as a dict.
#[pyfunction]
fn ensemble_statistics<'py>(
    py: Python<'py>,
    model: &PyAtomModel,
    det: &PyDetectionParams,
    horizon: f64,
    dt: f64,
    count: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let records =
        trajectory::simulate_ensemble(&model.inner, &det.inner, horizon, dt, count, seed)
            .map_err(value_err)?;
    let stats = trajectory::ensemble_statistics(&records).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("n_records", stats.n_records)?;
    d.set_item("horizon", stats.horizon)?;
    d.set_item("mean_count", stats.mean_count)?;
    d.set_item("var_count", stats.var_count)?;
    d.set_item("rate", stats.rate)?;
    d.set_item("rate_std_error", stats.rate_std_error)?;
    d.set_item("fano", stats.fano)?;
    d.set_item("mandel_q", stats.mandel_q)?;
    Ok(d)
}

#[pymodule]
fn clickstat(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyDetectionParams>()?;
    m.add_class::<PyAtomModel>()?;
    m.add_function(wrap_pyfunction!(ld_point, m)?)?;
    m.add_function(wrap_pyfunction!(ld_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_flux, m)?)?;
    m.add_function(wrap_pyfunction!(pn_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(finite_time_generating, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble_statistics, m)?)?;
    Ok(())
}
