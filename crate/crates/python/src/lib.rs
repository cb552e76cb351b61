use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pottslab_core::diag;
use pottslab_core::graph::{self, Multigraph};
use pottslab_core::oracle;
use pottslab_core::phase::{self, Phase};
use pottslab_core::planted::{self, PlantedSpec};
use pottslab_core::rcdyn::{ChainState, ConnectivityMode, Init, RcParams, Restriction};
use pottslab_core::rng;

fn err(e: pottslab_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_phase(s: &str) -> PyResult<Phase> {
    match s {
        "dis" | "disordered" => Ok(Phase::Disordered),
        "ord" | "ordered" => Ok(Phase::Ordered),
        _ => Err(PyValueError::new_err(format!("unknown phase {s:?}, expected 'dis' or 'ord'"))),
    }
}

fn parse_init(s: &str) -> PyResult<Init> {
    match s {
        "all-in" => Ok(Init::AllIn),
        "all-out" => Ok(Init::AllOut),
        _ => Err(PyValueError::new_err(format!("unknown init {s:?}, expected 'all-in' or 'all-out'"))),
    }
}

/// Configuration-model multigraph.
#[pyclass(name = "Graph", module = "pottslab", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGraph {
    inner: Arc<Multigraph>,
}

#[pymethods]
impl PyGraph {
    #[staticmethod]
    #[pyo3(signature = (n, d, seed=0))]
    fn configuration_model(n: usize, d: usize, seed: u64) -> PyResult<Self> {
        let mut r = rng::stream(seed, "graph", 0);
        let g = graph::sample_configuration_model(n, d, &mut r).map_err(err)?;
        Ok(PyGraph { inner: Arc::new(g) })
    }

    #[staticmethod]
    fn from_edges(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(PyGraph { inner: Arc::new(Multigraph::from_pairs(n, &edges).map_err(err)?) })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyGraph { inner: Arc::new(Multigraph::from_text(text).map_err(err)?) })
    }

    #[staticmethod]
    fn fixture(name: &str) -> PyResult<Self> {
        oracle::fixture(name)
            .map(|g| PyGraph { inner: Arc::new(g) })
            .ok_or_else(|| PyValueError::new_err(format!("no fixture named {name:?}")))
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().iter().map(|e| (e.u, e.v)).collect()
    }

    fn self_loops(&self) -> usize {
        self.inner.self_loops()
    }

    fn multi_edges(&self) -> usize {
        self.inner.multi_edges()
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    /// (vertices, sphere, edge ids) of the ball of radius `r` around `v`.
    fn ball(&self, v: usize, r: usize) -> PyResult<(Vec<usize>, Vec<usize>, Vec<usize>)> {
        let b = graph::ball(&self.inner, v, r).map_err(err)?;
        Ok((b.vertices, b.sphere, b.edges))
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, d={}, m={})", self.inner.n(), self.inner.d(), self.inner.m())
    }
}

/// Single-edge heat-bath random-cluster chain.
#[pyclass(name = "Chain", module = "pottslab")]
struct PyChain {
    inner: ChainState,
}

#[pymethods]
impl PyChain {
    #[new]
    #[pyo3(signature = (graph, q, beta, init="all-out", seed=0))]
    fn new(graph: &PyGraph, q: u32, beta: f64, init: &str, seed: u64) -> PyResult<Self> {
        let params = RcParams::from_beta(q, beta).map_err(err)?;
        let inner = ChainState::new(
            graph.inner.clone(),
            parse_init(init)?,
            params,
            Restriction::None,
            ConnectivityMode::OnDemand,
            rng::derive_seed(seed, "chain", 0),
        )
        .map_err(err)?;
        Ok(PyChain { inner })
    }

    fn run(&mut self, steps: u64) {
        self.inner.run(steps);
    }

    /// Run `steps` updates and return |F| every `stride` steps.
    #[pyo3(signature = (steps, stride=1))]
    fn trace(&mut self, steps: u64, stride: u64) -> Vec<usize> {
        let stride = stride.max(1);
        let mut out = Vec::new();
        for t in 1..=steps {
            self.inner.step();
            if t % stride == 0 {
                out.push(self.inner.config().len());
            }
        }
        out
    }

    #[getter]
    fn steps(&self) -> u64 {
        self.inner.steps()
    }

    #[getter]
    fn size(&self) -> usize {
        self.inner.config().len()
    }

    fn edges(&self) -> Vec<usize> {
        self.inner.config().edge_ids()
    }

    /// (number of components, largest component size)
    fn components(&self) -> (usize, usize) {
        self.inner.config().component_stats(self.inner.graph())
    }

    fn shatter_report<'py>(&self, py: Python<'py>, v: usize, radius: usize) -> PyResult<Bound<'py, PyDict>> {
        let r = diag::shatter_report(self.inner.graph(), self.inner.config(), v, radius).map_err(err)?;
        let out = PyDict::new(py);
        out.set_item("sphere_size", r.sphere_size)?;
        out.set_item("components_hit", r.components_hit)?;
        out.set_item("k_min", r.k_min)?;
        Ok(out)
    }

    fn wired_boundary<'py>(&self, py: Python<'py>, v: usize, radius: usize) -> PyResult<Bound<'py, PyDict>> {
        let r = diag::wired_boundary(self.inner.graph(), self.inner.config(), v, radius, diag::DEFAULT_PATH_BUDGET)
            .map_err(err)?;
        let out = PyDict::new(py);
        out.set_item("exists", r.exists)?;
        out.set_item("via_path_criterion", r.via_path_criterion)?;
        out.set_item("direct_ok", r.direct_ok)?;
        out.set_item("boundary", r.boundary)?;
        out.set_item("counter_path", r.counter_path)?;
        Ok(out)
    }
}

/// Colour and edge statistics of a planted pair.
#[pyclass(name = "PlantedSpec", module = "pottslab", frozen)]
struct PyPlantedSpec {
    inner: PlantedSpec,
}

#[pymethods]
impl PyPlantedSpec {
    #[new]
    #[pyo3(signature = (q, d, n, beta, phase="dis"))]
    fn new(q: u32, d: u32, n: usize, beta: f64, phase: &str) -> PyResult<Self> {
        let inner = planted::make_planted_spec(q, d, n, beta, parse_phase(phase)?).map_err(err)?;
        Ok(PyPlantedSpec { inner })
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(PyPlantedSpec { inner: PlantedSpec::from_json(s).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn counts(&self) -> Vec<usize> {
        self.inner.counts.clone()
    }

    #[getter]
    fn buckets(&self) -> Vec<Vec<usize>> {
        self.inner.buckets.clone()
    }

    /// (nu error, rho error) of the rounded statistics.
    fn rounding_errors(&self) -> (f64, f64) {
        self.inner.rounding_errors()
    }

    /// Draw a planted (graph, colours) pair; colours are 0-based.
    #[pyo3(signature = (seed=0))]
    fn sample(&self, seed: u64) -> PyResult<(PyGraph, Vec<u32>)> {
        let mut r = rng::stream(seed, "planted", 0);
        let (g, sigma) = planted::sample_planted(&self.inner, &mut r).map_err(err)?;
        Ok((PyGraph { inner: Arc::new(g) }, sigma.colours().to_vec()))
    }

    /// Lazy exploration from the sphere of `B_radius(v)`; returns a dict summary.
    #[pyo3(signature = (v, radius, t_cap, k_cap, seed=0))]
    fn explore<'py>(
        &self,
        py: Python<'py>,
        v: usize,
        radius: usize,
        t_cap: usize,
        k_cap: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let mut r = rng::stream(seed, "explore", 0);
        let p = phase::p_of_beta(self.inner.beta);
        let tr = planted::run_exploration(&self.inner, v, radius, p, t_cap, k_cap, &mut r).map_err(err)?;
        let out = PyDict::new(py);
        out.set_item("sphere_size", tr.sphere_size)?;
        out.set_item("k_observed", tr.k_observed)?;
        out.set_item("active_at_cap", tr.active_at_cap)?;
        out.set_item("explored_at", tr.explored_at)?;
        out.set_item("shattered", tr.shattered)?;
        out.set_item("steps", tr.steps.len())?;
        Ok(out)
    }
}

#[pyfunction]
fn beta_c(q: u32, d: u32) -> PyResult<f64> {
    phase::beta_c(q, d).map_err(err)
}

#[pyfunction]
fn beta_u(q: u32, d: u32) -> PyResult<f64> {
    phase::beta_u(q, d).map_err(err)
}

/// Returns `(ln(1+q/(d-1)), ln(1+q/(d-2)))`.
#[pyfunction]
fn beta_u_prime(q: u32, d: u32) -> PyResult<(f64, f64)> {
    Ok((phase::beta_u_prime(q, d).map_err(err)?, phase::beta_u_prime_alt(q, d).map_err(err)?))
}

#[pyfunction]
fn solve_t(q: u32, d: u32, beta: f64) -> PyResult<f64> {
    phase::solve_t(q, d, beta).map_err(err)
}

#[pyfunction]
fn phase_profile(q: u32, d: u32, beta: f64) -> PyResult<String> {
    let p = phase::PhaseProfile::compute(q, d, beta).map_err(err)?;
    Ok(serde_json::to_string(&p).expect("profile serializes"))
}

/// `(phi, chi, phi_hat)` for bond percolation with retention `p`.
#[pyfunction]
fn gw_solution(d: u32, p: f64) -> PyResult<(f64, f64, f64)> {
    let s = phase::gw_solution(d, p).map_err(err)?;
    Ok((s.phi, s.chi, s.phi_hat))
}

/// `(holds, lhs, bound)`.
#[pyfunction]
fn check_lemma54(q: u32, d: u32, beta: f64) -> PyResult<(bool, f64, f64)> {
    let r = phase::check_lemma54(q, d, beta).map_err(err)?;
    Ok((r.holds, r.lhs, r.bound))
}

/// Exact RC law indexed by edge bitmask.
#[pyfunction]
fn exact_rc(graph: &PyGraph, q: u32, p: f64) -> PyResult<Vec<f64>> {
    Ok(oracle::exact_rc(&graph.inner, q, p).map_err(err)?.probs)
}

#[pyfunction]
fn exact_tv(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    oracle::exact_tv(&a, &b).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (graph, q, beta, max_steps, seed=0))]
fn coupling_time(graph: &PyGraph, q: u32, beta: f64, max_steps: u64, seed: u64) -> PyResult<Option<u64>> {
    let params = RcParams::from_beta(q, beta).map_err(err)?;
    diag::coupling_time(graph.inner.clone(), params, max_steps, rng::derive_seed(seed, "coupling", 0)).map_err(err)
}

#[pymodule]
fn pottslab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyGraph>()?;
    m.add_class::<PyChain>()?;
    m.add_class::<PyPlantedSpec>()?;
    m.add_function(wrap_pyfunction!(beta_c, m)?)?;
    m.add_function(wrap_pyfunction!(beta_u, m)?)?;
    m.add_function(wrap_pyfunction!(beta_u_prime, m)?)?;
    m.add_function(wrap_pyfunction!(solve_t, m)?)?;
    m.add_function(wrap_pyfunction!(phase_profile, m)?)?;
    m.add_function(wrap_pyfunction!(gw_solution, m)?)?;
    m.add_function(wrap_pyfunction!(check_lemma54, m)?)?;
    m.add_function(wrap_pyfunction!(exact_rc, m)?)?;
    m.add_function(wrap_pyfunction!(exact_tv, m)?)?;
    m.add_function(wrap_pyfunction!(coupling_time, m)?)?;
    Ok(())
}
