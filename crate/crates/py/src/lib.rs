//! Python bindings: bandit instances, beliefs, agents, information metrics,
//! bound formulas, the experiment runner, and the verification suites.

use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use esbandit::agents;
use esbandit::bandit::LinearBanditInstance;
use esbandit::bounds;
use esbandit::harness::output::{render_csv, render_json};
use esbandit::harness::runner::run_experiment;
use esbandit::harness::verify;
use esbandit::harness::ExperimentConfig;
use esbandit::infometrics;
use esbandit::posterior::GaussianBelief;
use esbandit::rng::{derive_stream, Role};
use esbandit::DiscreteDistribution;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_dvector(v: Vec<f64>) -> DVector<f64> {
    DVector::from_vec(v)
}

fn to_dmatrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(value_err("ragged matrix rows"));
    }
    Ok(DMatrix::from_row_slice(nrows, ncols, &rows.concat()))
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn dist(p: Vec<f64>) -> PyResult<DiscreteDistribution> {
    DiscreteDistribution::new(p).map_err(value_err)
}

/// Validated linear-Gaussian bandit instance.
#[pyclass(name = "Instance", skip_from_py_object)]
#[derive(Clone)]
struct PyInstance {
    inner: LinearBanditInstance,
}

#[pymethods]
impl PyInstance {
    #[new]
    #[pyo3(signature = (actions, prior_mean=None, prior_cov=None, noise_var=1.0))]
    fn new(
        actions: Vec<Vec<f64>>,
        prior_mean: Option<Vec<f64>>,
        prior_cov: Option<Vec<Vec<f64>>>,
        noise_var: f64,
    ) -> PyResult<Self> {
        let a = to_dmatrix(&actions)?;
        let d = a.ncols();
        let mean = prior_mean.map(to_dvector).unwrap_or_else(|| DVector::zeros(d));
        let cov = match prior_cov {
            Some(rows) => to_dmatrix(&rows)?,
            None => DMatrix::identity(d, d),
        };
        Ok(PyInstance {
            inner: LinearBanditInstance::new(a, mean, cov, noise_var).map_err(value_err)?,
        })
    }

    #[getter]
    fn num_actions(&self) -> usize {
        self.inner.num_actions()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn noise_var(&self) -> f64 {
        self.inner.noise_var()
    }

    /// One coefficient draw from the prior.
    fn sample_theta(&self, seed: u64) -> Vec<f64> {
        let mut rng = derive_stream(seed, 0, Role::Environment);
        self.inner.sample_coefficient(&mut rng).iter().copied().collect()
    }

    fn mean_rewards(&self, theta: Vec<f64>) -> Vec<f64> {
        self.inner.mean_rewards(&to_dvector(theta)).iter().copied().collect()
    }

    /// Greedy action for `theta`; exact ties broken uniformly from `seed`.
    fn best_action(&self, theta: Vec<f64>, seed: u64) -> usize {
        let mut rng = derive_stream(seed, 0, Role::AgentSelection);
        self.inner.best_action(&to_dvector(theta), &mut rng)
    }

    fn iota(&self) -> f64 {
        bounds::compute_iota(&self.inner)
    }

    fn kappa(&self) -> f64 {
        bounds::compute_kappa(&self.inner)
    }

    /// Monte Carlo (eta_hat, standard_error) over `n` prior draws.
    fn estimate_eta(&self, n: usize, seed: u64) -> PyResult<(f64, f64)> {
        let mut rng = derive_stream(seed, 0, Role::BoundEval);
        bounds::estimate_eta(&self.inner, n, &mut rng).map_err(value_err)
    }

    /// Monte Carlo (entropy_of_optimum, standard_error) over `n` prior draws.
    fn estimate_opt_entropy(&self, n: usize, seed: u64) -> PyResult<(f64, f64)> {
        let mut rng = derive_stream(seed, 0, Role::BoundEval);
        bounds::estimate_opt_entropy(&self.inner, n, &mut rng).map_err(value_err)
    }

    fn theorem1_bound(&self, horizon: usize, m: usize, entropy_opt: f64) -> f64 {
        bounds::theorem1_bound(&self.inner, horizon, m, entropy_opt)
    }
}

/// Conjugate Gaussian posterior state.
#[pyclass(name = "Belief", skip_from_py_object)]
#[derive(Clone)]
struct PyBelief {
    inner: GaussianBelief,
}

#[pymethods]
impl PyBelief {
    #[staticmethod]
    fn prior(instance: &PyInstance) -> Self {
        PyBelief {
            inner: GaussianBelief::prior(&instance.inner),
        }
    }

    #[getter]
    fn t(&self) -> usize {
        self.inner.t()
    }

    fn mean(&self) -> Vec<f64> {
        self.inner.mean().iter().copied().collect()
    }

    fn cov(&self) -> Vec<Vec<f64>> {
        matrix_rows(self.inner.cov())
    }

    /// Rank-1 conjugate update with feature vector `action`.
    fn update(&self, action: Vec<f64>, reward: f64, noise_var: f64) -> PyResult<Self> {
        Ok(PyBelief {
            inner: self
                .inner
                .update(&to_dvector(action), reward, noise_var)
                .map_err(value_err)?,
        })
    }

    fn sample(&self, n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        let mut rng = derive_stream(seed, 0, Role::PosteriorSampling);
        Ok(self
            .inner
            .sample(&mut rng, n)
            .map_err(value_err)?
            .into_iter()
            .map(|v| v.iter().copied().collect())
            .collect())
    }
}

/// Ensemble-sampling agent state: M perturbed models.
#[pyclass(name = "Ensemble", skip_from_py_object)]
#[derive(Clone)]
struct PyEnsemble {
    inner: agents::Ensemble,
}

#[pymethods]
impl PyEnsemble {
    /// M independent prior draws.
    #[staticmethod]
    fn init(instance: &PyInstance, m: usize, seed: u64) -> PyResult<Self> {
        let mut rng = derive_stream(seed, 0, Role::Perturbation);
        Ok(PyEnsemble {
            inner: agents::es_init(&instance.inner, m, &mut rng).map_err(value_err)?,
        })
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.model_count()
    }

    #[getter]
    fn t(&self) -> usize {
        self.inner.t()
    }

    fn models(&self) -> Vec<Vec<f64>> {
        matrix_rows(self.inner.models())
    }

    /// (model_index, action_index) for one uniform model pick.
    fn select(&self, instance: &PyInstance, seed: u64) -> (usize, usize) {
        let mut rng = derive_stream(seed, 0, Role::AgentSelection);
        agents::es_select(&self.inner, &instance.inner, &mut rng)
    }

    /// Perturbed rank-1 update of every model; `sigma_prev` is the posterior
    /// covariance before this observation.
    fn update(
        &self,
        sigma_prev: Vec<Vec<f64>>,
        action: Vec<f64>,
        reward: f64,
        noise_var: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let mut rng = derive_stream(seed, 0, Role::Perturbation);
        Ok(PyEnsemble {
            inner: agents::es_update(
                &self.inner,
                &to_dmatrix(&sigma_prev)?,
                &to_dvector(action),
                reward,
                noise_var,
                &mut rng,
            )
            .map_err(value_err)?,
        })
    }

    /// The induced action distribution h_t.
    fn action_dist(&self, instance: &PyInstance) -> Vec<f64> {
        bounds::ensemble_action_dist(&self.inner, &instance.inner)
            .probs()
            .to_vec()
    }
}

/// One exact Thompson-sampling action: posterior draw, then greedy.
#[pyfunction]
fn ts_select(belief: &PyBelief, instance: &PyInstance, seed: u64) -> PyResult<usize> {
    let mut rng = derive_stream(seed, 0, Role::AgentSelection);
    agents::ts_select(&belief.inner, &instance.inner, &mut rng).map_err(value_err)
}

#[pyfunction]
fn kl_divergence(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    infometrics::kl_divergence(&dist(p)?, &dist(q)?).map_err(value_err)
}

#[pyfunction]
fn hellinger(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    infometrics::hellinger(&dist(p)?, &dist(q)?).map_err(value_err)
}

#[pyfunction]
fn entropy(p: Vec<f64>) -> PyResult<f64> {
    Ok(infometrics::entropy(&dist(p)?))
}

#[pyfunction]
fn mutual_information(joint: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(infometrics::mutual_information(
        &infometrics::JointTable::new(joint).map_err(value_err)?,
    ))
}

#[pyfunction]
fn lemma5_bound(k: usize, t: usize, m: usize) -> f64 {
    bounds::lemma5_bound(k, t, m)
}

#[pyfunction]
fn sanov_tail(k: usize, m: usize, t: usize, epsilon: f64) -> f64 {
    bounds::sanov_tail(k, m, t, epsilon)
}

#[pyfunction]
fn subgaussian_maxsq_bound(k: usize, max_var_proxy: f64, max_sq_mean: f64) -> f64 {
    bounds::subgaussian_maxsq_bound(k, max_var_proxy, max_sq_mean)
}

/// Runs a full experiment from config text (flat key=value or JSON) and
/// returns {"csv": ..., "json": ..., "mean_cum_regret": [...], "se_cum_regret": [...]}.
#[pyfunction]
fn run_experiment_from_config(py: Python<'_>, config_text: &str) -> PyResult<Py<PyDict>> {
    let cfg = ExperimentConfig::parse(config_text).map_err(value_err)?;
    let result = run_experiment(&cfg).map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item("csv", render_csv(&result.trace))?;
    out.set_item("json", render_json(&result.report, &cfg).map_err(value_err)?)?;
    out.set_item("mean_cum_regret", result.trace.mean_cum.clone())?;
    out.set_item("se_cum_regret", result.trace.se_cum.clone())?;
    Ok(out.into())
}

/// Runs a verification suite ("all" for every suite); returns a list of
/// {"suite", "pass", "checks": [{"name", "measured", "bound", "pass"}]}.
#[pyfunction]
fn run_verify(py: Python<'_>, suite: &str) -> PyResult<Py<PyAny>> {
    let reports = verify::verify(suite).map_err(value_err)?;
    let json = serde_json::to_string(&reports).map_err(value_err)?;
    let loads = py.import("json")?.getattr("loads")?;
    Ok(loads.call1((json,))?.unbind())
}

#[pymodule]
fn esbandit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PyBelief>()?;
    m.add_class::<PyEnsemble>()?;
    m.add_function(wrap_pyfunction!(ts_select, m)?)?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(hellinger, m)?)?;
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    m.add_function(wrap_pyfunction!(mutual_information, m)?)?;
    m.add_function(wrap_pyfunction!(lemma5_bound, m)?)?;
    m.add_function(wrap_pyfunction!(sanov_tail, m)?)?;
    m.add_function(wrap_pyfunction!(subgaussian_maxsq_bound, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment_from_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    Ok(())
}
