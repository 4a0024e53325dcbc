//! Python bindings: radix systems, transforms, kernels, norms and the
//! sharpness construction.
use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use vilenkin_core::counterexample::{self as cx, SelectionRule, WeightSequence};
use vilenkin_core::harness::{self, Experiment, ExperimentConfig};
use vilenkin_core::{hardy, kernels, transform};
use vilenkin_core::{Complex64, GridFunction, MartingaleView, Spectrum, VilenkinError};

fn py_err(e: VilenkinError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Finite prefix `m_0, ..., m_{A-1}` of a bounded radix sequence.
#[pyclass(name = "RadixSystem", frozen)]
struct PyRadixSystem {
    inner: Arc<vilenkin_core::RadixSystem>,
}

#[pymethods]
impl PyRadixSystem {
    #[new]
    fn new(radices: Vec<u32>) -> PyResult<Self> {
        let inner = vilenkin_core::RadixSystem::new(radices).map_err(py_err)?;
        Ok(Self {
            inner: Arc::new(inner),
        })
    }

    /// Cyclic spec such as `"2,3,4"` repeated to `resolution` positions.
    #[staticmethod]
    fn parse(spec: &str, resolution: usize) -> PyResult<Self> {
        let inner = vilenkin_core::RadixSystem::parse(spec, resolution).map_err(py_err)?;
        Ok(Self {
            inner: Arc::new(inner),
        })
    }

    #[staticmethod]
    fn dyadic(resolution: usize) -> PyResult<Self> {
        let inner = vilenkin_core::RadixSystem::dyadic(resolution).map_err(py_err)?;
        Ok(Self {
            inner: Arc::new(inner),
        })
    }

    #[getter]
    fn resolution(&self) -> usize {
        self.inner.resolution()
    }

    #[getter]
    fn size(&self) -> u64 {
        self.inner.size()
    }

    #[getter]
    fn radices(&self) -> Vec<u32> {
        self.inner.radices().to_vec()
    }

    #[getter]
    fn bound(&self) -> u32 {
        self.inner.bound()
    }

    fn m_pow(&self, k: usize) -> PyResult<u64> {
        if k > self.inner.resolution() {
            return Err(py_err(VilenkinError::RankOutOfRange {
                rank: k,
                resolution: self.inner.resolution(),
            }));
        }
        Ok(self.inner.m_pow(k))
    }

    fn digits(&self, n: u64) -> PyResult<Vec<u32>> {
        Ok(self.inner.decompose(n).map_err(py_err)?.digits().to_vec())
    }

    fn is_n0_member(&self, n: u64) -> PyResult<bool> {
        Ok(self.inner.decompose(n).map_err(py_err)?.is_n0_member())
    }

    fn count_n0_band(&self, k: usize) -> PyResult<u64> {
        self.inner.count_n0_band(k).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("RadixSystem({})", self.inner)
    }
}

fn grid(sys: &PyRadixSystem, values: Vec<Complex64>) -> PyResult<GridFunction> {
    GridFunction::new(sys.inner.clone(), values).map_err(py_err)
}

fn spectrum(sys: &PyRadixSystem, coeffs: Vec<Complex64>) -> PyResult<Spectrum> {
    Spectrum::new(sys.inner.clone(), coeffs).map_err(py_err)
}

/// Character `ψ_n` on the grid.
#[pyfunction]
fn character(sys: &PyRadixSystem, n: u64) -> PyResult<Vec<Complex64>> {
    Ok(GridFunction::character(sys.inner.clone(), n)
        .map_err(py_err)?
        .into_values())
}

#[pyfunction]
fn fast_transform(sys: &PyRadixSystem, values: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    Ok(transform::fast_transform(&grid(sys, values)?)
        .coeffs()
        .to_vec())
}

#[pyfunction]
fn naive_transform(sys: &PyRadixSystem, values: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    Ok(transform::naive_transform(&grid(sys, values)?)
        .coeffs()
        .to_vec())
}

#[pyfunction]
fn inverse_transform(sys: &PyRadixSystem, coeffs: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    Ok(transform::inverse_transform(&spectrum(sys, coeffs)?).into_values())
}

#[pyfunction]
fn dirichlet_kernel(sys: &PyRadixSystem, n: u64) -> PyResult<Vec<Complex64>> {
    Ok(kernels::dirichlet_kernel(sys.inner.clone(), n)
        .map_err(py_err)?
        .into_values())
}

#[pyfunction]
fn partial_sum(sys: &PyRadixSystem, values: Vec<Complex64>, n: u64) -> PyResult<Vec<Complex64>> {
    Ok(kernels::partial_sum(&grid(sys, values)?, n)
        .map_err(py_err)?
        .into_values())
}

#[pyfunction]
fn conditional_expectation(
    sys: &PyRadixSystem,
    values: Vec<Complex64>,
    n: usize,
) -> PyResult<Vec<Complex64>> {
    Ok(kernels::conditional_expectation(&grid(sys, values)?, n)
        .map_err(py_err)?
        .into_values())
}

#[pyfunction]
fn maximal_function(sys: &PyRadixSystem, values: Vec<Complex64>) -> PyResult<Vec<f64>> {
    let mv = MartingaleView::new(grid(sys, values)?);
    Ok(mv
        .maximal_function()
        .values()
        .iter()
        .map(|v| v.re)
        .collect())
}

#[pyfunction]
fn lp_norm(sys: &PyRadixSystem, values: Vec<Complex64>, p: f64) -> PyResult<f64> {
    hardy::lp_norm(&grid(sys, values)?, p).map_err(py_err)
}

#[pyfunction]
fn weak_lp_norm(sys: &PyRadixSystem, values: Vec<Complex64>, p: f64) -> PyResult<f64> {
    hardy::weak_lp_norm(&grid(sys, values)?, p).map_err(py_err)
}

#[pyfunction]
fn hardy_quasinorm(sys: &PyRadixSystem, values: Vec<Complex64>, p: f64) -> PyResult<f64> {
    hardy::hardy_quasinorm(&MartingaleView::new(grid(sys, values)?), p).map_err(py_err)
}

/// Blocks, weights and martingale of the sharpness construction.
#[pyclass(name = "BlockPlan", frozen)]
struct PyBlockPlan {
    inner: cx::BlockPlan,
}

#[pymethods]
impl PyBlockPlan {
    #[getter]
    fn alphas(&self) -> Vec<usize> {
        self.inner.alphas().to_vec()
    }

    #[getter]
    fn phis(&self) -> Vec<f64> {
        self.inner.phis().to_vec()
    }

    #[getter]
    fn lambdas(&self) -> Vec<f64> {
        self.inner.lambdas().to_vec()
    }

    #[getter]
    fn tail_bound(&self) -> f64 {
        self.inner.tail_bound()
    }

    fn coefficient(&self, j: u64) -> PyResult<f64> {
        self.inner.closed_form_coefficient(j).map_err(py_err)
    }

    fn partial_sum_closed_form(&self, j: u64) -> PyResult<f64> {
        self.inner.partial_sum_closed_form(j).map_err(py_err)
    }

    fn atom(&self, k: usize) -> PyResult<Vec<Complex64>> {
        Ok(self.inner.build_atom(k).map_err(py_err)?.0.into_values())
    }

    fn martingale(&self) -> PyResult<Vec<Complex64>> {
        Ok(self
            .inner
            .build_martingale()
            .map_err(py_err)?
            .base()
            .values()
            .to_vec())
    }

    /// Divergence report as a JSON string.
    #[pyo3(signature = (upto=None))]
    fn divergence_json(&self, upto: Option<usize>) -> PyResult<String> {
        let report =
            cx::divergence_sums(&self.inner, upto.unwrap_or(usize::MAX)).map_err(py_err)?;
        serde_json::to_string(&report).map_err(json_err)
    }

    /// Grid checks of the construction as a JSON string.
    #[pyo3(signature = (weak_stride=1))]
    fn verify_json(&self, weak_stride: u64) -> PyResult<String> {
        let checks = cx::verify_construction(&self.inner, weak_stride).map_err(py_err)?;
        serde_json::to_string(&checks).map_err(json_err)
    }
}

/// Greedy block selection for the weight `phi` (`log`, `loglog`, `pow:β`,
/// `file:PATH`).
#[pyfunction]
#[pyo3(signature = (sys, phi, p, rule="doubling"))]
fn select_alphas(sys: &PyRadixSystem, phi: &str, p: f64, rule: &str) -> PyResult<PyBlockPlan> {
    let rule = match rule {
        "doubling" => SelectionRule::Doubling,
        "scaled-doubling" => SelectionRule::ScaledDoubling,
        other => return Err(PyValueError::new_err(format!("unknown rule {other:?}"))),
    };
    let phi = WeightSequence::parse(phi).map_err(py_err)?;
    let inner = cx::select_alphas(&phi, p, sys.inner.clone(), rule).map_err(py_err)?;
    Ok(PyBlockPlan { inner })
}

/// Runs one experiment and returns its JSON report.
#[pyfunction]
#[pyo3(signature = (experiment, radix="2", resolution=10, p=0.5, phi="log", trials=200, seed=0))]
#[allow(clippy::too_many_arguments)]
fn run_experiment(
    experiment: &str,
    radix: &str,
    resolution: usize,
    p: f64,
    phi: &str,
    trials: usize,
    seed: u64,
) -> PyResult<String> {
    let exp = match experiment {
        "hardy" => Experiment::Hardy,
        "paley" => Experiment::Paley,
        "strong" => Experiment::Strong,
        "counterexample" => Experiment::Counterexample,
        "identities" => Experiment::Identities,
        "bench" => Experiment::Bench,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown experiment {other:?}"
            )))
        }
    };
    let cfg = ExperimentConfig::new(exp, radix, resolution, p)
        .with_phi(phi)
        .with_trials(trials)
        .with_seed(seed);
    let json = match exp {
        Experiment::Hardy => {
            serde_json::to_string(&harness::run_hardy_littlewood(&cfg).map_err(py_err)?)
        }
        Experiment::Paley => serde_json::to_string(&harness::run_paley(&cfg).map_err(py_err)?),
        Experiment::Strong => {
            serde_json::to_string(&harness::run_strong_convergence(&cfg).map_err(py_err)?)
        }
        Experiment::Counterexample => {
            serde_json::to_string(&harness::run_counterexample(&cfg).map_err(py_err)?)
        }
        Experiment::Identities => {
            serde_json::to_string(&harness::run_identities(&cfg).map_err(py_err)?)
        }
        Experiment::Bench => serde_json::to_string(&harness::run_bench(&cfg).map_err(py_err)?),
    };
    json.map_err(json_err)
}

#[pymodule]
fn vilenkin(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRadixSystem>()?;
    m.add_class::<PyBlockPlan>()?;
    m.add_function(wrap_pyfunction!(character, m)?)?;
    m.add_function(wrap_pyfunction!(fast_transform, m)?)?;
    m.add_function(wrap_pyfunction!(naive_transform, m)?)?;
    m.add_function(wrap_pyfunction!(inverse_transform, m)?)?;
    m.add_function(wrap_pyfunction!(dirichlet_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(partial_sum, m)?)?;
    m.add_function(wrap_pyfunction!(conditional_expectation, m)?)?;
    m.add_function(wrap_pyfunction!(maximal_function, m)?)?;
    m.add_function(wrap_pyfunction!(lp_norm, m)?)?;
    m.add_function(wrap_pyfunction!(weak_lp_norm, m)?)?;
    m.add_function(wrap_pyfunction!(hardy_quasinorm, m)?)?;
    m.add_function(wrap_pyfunction!(select_alphas, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
