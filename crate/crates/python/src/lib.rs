//! Python bindings for the control-variate estimators, the exact Gibbs
//! random field oracles and the experiment runner.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use rvcv_core::cv::{self, CvOptions, MomentForm, MonomialVector, SampleSplit};
use rvcv_core::experiments::{run_experiment, ExperimentConfig};
use rvcv_core::grf::ergm::ergm_log_partition_bruteforce;
use rvcv_core::grf::ising::{
    ising_log_partition_exact, ising_posterior_mean_grid_with, ising_suff_stat_with, IsingLattice,
    PairCounting,
};
use rvcv_core::grf::ExponentialModel;
use rvcv_core::{parallel, score, Error};

create_exception!(rvcv, RvcvError, PyException);
create_exception!(rvcv, DegenerateDesignError, RvcvError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_) | Error::Config(_) | Error::Parse(_) => {
            PyValueError::new_err(e.to_string())
        }
        Error::DegenerateDesign { .. } => DegenerateDesignError::new_err(e.to_string()),
        other => RvcvError::new_err(other.to_string()),
    }
}

fn moments(name: &str) -> PyResult<MomentForm> {
    match name {
        "centered" => Ok(MomentForm::Centered),
        "raw" => Ok(MomentForm::Raw),
        _ => Err(PyValueError::new_err(format!(
            "moments must be 'centered' or 'raw', got '{name}'"
        ))),
    }
}

fn counting(name: &str) -> PyResult<PairCounting> {
    match name {
        "single" => Ok(PairCounting::Single),
        "double" => Ok(PairCounting::Double),
        _ => Err(PyValueError::new_err(format!(
            "counting must be 'single' or 'double', got '{name}'"
        ))),
    }
}

fn design(ms: Vec<Vec<f64>>) -> Vec<MonomialVector> {
    ms.into_iter().map(MonomialVector).collect()
}

/// Polynomial basis of a given dimension and degree (1 to 3).
#[pyclass(name = "PolynomialSpec", frozen)]
struct PyPolynomialSpec {
    inner: cv::PolynomialSpec,
}

#[pymethods]
impl PyPolynomialSpec {
    #[new]
    fn new(dim: usize, degree: u8) -> PyResult<Self> {
        let inner = cv::PolynomialSpec::new(dim, degree).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn degree(&self) -> u8 {
        self.inner.degree()
    }

    fn coefficient_count(&self) -> usize {
        self.inner.coefficient_count()
    }

    fn labels(&self) -> Vec<String> {
        self.inner.labels()
    }

    /// Monomial control-variate vector `m(θ, û)`.
    fn monomials(&self, theta: Vec<f64>, u_hat: Vec<f64>) -> PyResult<Vec<f64>> {
        let m = cv::monomial_map(&theta, &u_hat, &self.inner).map_err(to_py)?;
        Ok(m.0)
    }

    fn __repr__(&self) -> String {
        format!(
            "PolynomialSpec(dim={}, degree={})",
            self.inner.dim(),
            self.inner.degree()
        )
    }
}

/// Result of `rv_estimate`.
#[pyclass(name = "RvEstimate", frozen, get_all)]
struct PyRvEstimate {
    phi: Vec<f64>,
    controlled: Vec<f64>,
    mu_uncontrolled: f64,
    mu_controlled: f64,
    r: f64,
    rho: f64,
    perfect: bool,
}

#[pymethods]
impl PyRvEstimate {
    fn __repr__(&self) -> String {
        format!(
            "RvEstimate(mu_controlled={}, mu_uncontrolled={}, r={}, rho={})",
            self.mu_controlled, self.mu_uncontrolled, self.r, self.rho
        )
    }
}

#[pyfunction]
#[pyo3(signature = (g, ms, moments="centered"))]
fn estimate_optimal_coeffs(g: Vec<f64>, ms: Vec<Vec<f64>>, moments: &str) -> PyResult<Vec<f64>> {
    cv::estimate_optimal_coeffs(&g, &design(ms), self::moments(moments)?).map_err(to_py)
}

/// Fit the coefficients and return the controlled estimator with its
/// variance-reduction diagnostics.
#[pyfunction]
#[pyo3(signature = (g, ms, moments="centered", split=false))]
fn rv_estimate(g: Vec<f64>, ms: Vec<Vec<f64>>, moments: &str, split: bool) -> PyResult<PyRvEstimate> {
    let opts = CvOptions {
        moments: self::moments(moments)?,
        split: if split { SampleSplit::Half } else { SampleSplit::None },
    };
    let est = cv::rv_estimate(&g, &design(ms), &opts).map_err(to_py)?;
    Ok(PyRvEstimate {
        phi: est.phi,
        controlled: est.controlled,
        mu_uncontrolled: est.mu_uncontrolled,
        mu_controlled: est.mu_controlled,
        r: est.diagnostics.r,
        rho: est.diagnostics.rho,
        perfect: est.diagnostics.perfect,
    })
}

/// Least-squares fit of `1/ρ(K)² = 1/ρ∞² + C/K`; returns `(rho_inf, c, residual)`.
#[pyfunction]
fn fit_rho_curve(k_values: Vec<usize>, rho_values: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    let fit = cv::fit_rho_curve(&k_values, &rho_values).map_err(to_py)?;
    Ok((fit.rho_inf, fit.c, fit.residual))
}

#[pyfunction]
fn cost_normalized_ratio(k: usize, k0: usize, cost: f64, rho_inf: f64, c: f64) -> PyResult<f64> {
    cv::cost_normalized_ratio(k, k0, cost, rho_inf, c).map_err(to_py)
}

#[pyfunction]
fn argmin_r(k_max: usize, k0: usize, cost: f64, rho_inf: f64, c: f64) -> PyResult<usize> {
    cv::argmin_r(k_max, k0, cost, rho_inf, c).map_err(to_py)
}

/// Score estimate from observed and simulated sufficient statistics.
#[pyfunction]
fn score_type1(
    theta: Vec<f64>,
    s_obs: Vec<f64>,
    s_sims: Vec<Vec<f64>>,
    grad_log_prior: Vec<f64>,
) -> PyResult<Vec<f64>> {
    let est = score::score_type1(&theta, &s_obs, &s_sims, &grad_log_prior).map_err(to_py)?;
    Ok(est.u_hat)
}

/// Score estimate as the mean of per-draw complete-data scores.
#[pyfunction]
fn score_type2(theta: Vec<f64>, u_values: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    let est = score::score_type2(&theta, &u_values).map_err(to_py)?;
    Ok(est.u_hat)
}

fn lattice(rows: usize, cols: usize, spins: Vec<i8>) -> PyResult<IsingLattice> {
    IsingLattice::new(rows, cols, spins).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (rows, cols, spins, counting="single"))]
fn ising_suff_stat(rows: usize, cols: usize, spins: Vec<i8>, counting: &str) -> PyResult<f64> {
    Ok(ising_suff_stat_with(&lattice(rows, cols, spins)?, self::counting(counting)?))
}

#[pyfunction]
fn ising_log_partition(theta: f64, rows: usize, cols: usize) -> PyResult<f64> {
    ising_log_partition_exact(theta, rows, cols).map_err(to_py)
}

/// Posterior mean and sd of `θ` by grid quadrature; returns `(mean, sd, truncated)`.
#[pyfunction]
#[pyo3(signature = (rows, cols, spins, grid, prior_sd=5.0, counting="single"))]
fn ising_posterior_mean(
    rows: usize,
    cols: usize,
    spins: Vec<i8>,
    grid: Vec<f64>,
    prior_sd: f64,
    counting: &str,
) -> PyResult<(f64, f64, bool)> {
    let data = lattice(rows, cols, spins)?;
    let post = ising_posterior_mean_grid_with(&data, self::counting(counting)?, prior_sd, &grid)
        .map_err(to_py)?;
    Ok((post.mean, post.sd, post.truncated))
}

#[pyfunction]
fn ergm_log_partition(theta: (f64, f64), nodes: usize) -> PyResult<f64> {
    ergm_log_partition_bruteforce([theta.0, theta.1], nodes).map_err(to_py)
}

/// Exact score `1/θ − y` of the exponential toy model.
#[pyfunction]
fn exponential_score(y: f64, theta: f64) -> PyResult<f64> {
    ExponentialModel::new(y).and_then(|m| m.score(theta)).map_err(to_py)
}

#[pyfunction]
fn derive_seed(master: u64, iterate: u64, replicate: u64) -> u64 {
    parallel::derive_seed(master, iterate, replicate)
}

/// Run an experiment from TOML text and return the summary as JSON text.
#[pyfunction]
#[pyo3(signature = (config_toml, cores=None))]
fn run_experiment_toml(py: Python<'_>, config_toml: &str, cores: Option<usize>) -> PyResult<String> {
    let mut cfg = ExperimentConfig::from_toml(config_toml).map_err(to_py)?;
    if cores.is_some() {
        cfg.cores = cores;
    }
    let report = py.detach(|| run_experiment(&cfg)).map_err(to_py)?;
    report.to_json().map_err(to_py)
}

#[pymodule]
fn rvcv(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RvcvError", m.py().get_type::<RvcvError>())?;
    m.add("DegenerateDesignError", m.py().get_type::<DegenerateDesignError>())?;
    m.add_class::<PyPolynomialSpec>()?;
    m.add_class::<PyRvEstimate>()?;
    m.add_function(wrap_pyfunction!(estimate_optimal_coeffs, m)?)?;
    m.add_function(wrap_pyfunction!(rv_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(fit_rho_curve, m)?)?;
    m.add_function(wrap_pyfunction!(cost_normalized_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(argmin_r, m)?)?;
    m.add_function(wrap_pyfunction!(score_type1, m)?)?;
    m.add_function(wrap_pyfunction!(score_type2, m)?)?;
    m.add_function(wrap_pyfunction!(ising_suff_stat, m)?)?;
    m.add_function(wrap_pyfunction!(ising_log_partition, m)?)?;
    m.add_function(wrap_pyfunction!(ising_posterior_mean, m)?)?;
    m.add_function(wrap_pyfunction!(ergm_log_partition, m)?)?;
    m.add_function(wrap_pyfunction!(exponential_score, m)?)?;
    m.add_function(wrap_pyfunction!(derive_seed, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment_toml, m)?)?;
    Ok(())
}
