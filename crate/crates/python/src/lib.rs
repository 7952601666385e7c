//! Python bindings. Matrices cross the boundary as lists of rows.

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

use sonnmf::data::{gen_rank_one, gen_swimmer_toy, gen_synthetic, Synthetic, SyntheticSpec};
use sonnmf::{objective, prox, rank, Error, Matrix, SolverConfig};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Numerical(_) => PyArithmeticError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_rows(&rows).map_err(to_py)
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// Outcome of one solver run.
#[pyclass(name = "SolveResult", frozen)]
pub struct PySolveResult {
    inner: sonnmf::SolveResult,
}

#[pymethods]
impl PySolveResult {
    #[getter]
    fn w(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.w)
    }
    #[getter]
    fn h(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.h)
    }
    #[getter]
    fn status(&self) -> String {
        serde_json::to_value(self.inner.status).expect("enum").as_str().expect("string").to_string()
    }
    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }
    #[getter]
    fn wall_time(&self) -> f64 {
        self.inner.wall_time
    }
    /// Total cost per iteration, starting with the initial point.
    #[getter]
    fn totals(&self) -> Vec<f64> {
        self.inner.trace.iter().map(|t| t.total).collect()
    }
    /// `(fit, son, hinge, total)` at the final iterate.
    #[getter]
    fn final_objective(&self) -> (f64, f64, f64, f64) {
        let f = self.inner.final_objective();
        (f.fit, f.son, f.hinge, f.total)
    }
    fn __repr__(&self) -> String {
        format!("SolveResult(status={}, iterations={})", self.status(), self.inner.iterations)
    }
}

/// Reduced factorization read off a solution.
#[pyclass(name = "RankReport", frozen)]
pub struct PyRankReport {
    inner: sonnmf::RankReport,
}

#[pymethods]
impl PyRankReport {
    #[getter]
    fn estimated_rank(&self) -> usize {
        self.inner.estimated_rank
    }
    #[getter]
    fn labels(&self) -> Vec<usize> {
        self.inner.clusters.labels.clone()
    }
    #[getter]
    fn kept_clusters(&self) -> Vec<usize> {
        self.inner.kept_clusters.clone()
    }
    #[getter]
    fn relative_energies(&self) -> Vec<f64> {
        self.inner.relative_energies.clone()
    }
    #[getter]
    fn reduced_w(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.reduced_w)
    }
    #[getter]
    fn reduced_h(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.reduced_h)
    }
    #[getter]
    fn reconstruction_error(&self) -> f64 {
        self.inner.reconstruction_error
    }
    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("serializable")
    }
    fn __repr__(&self) -> String {
        format!("RankReport(estimated_rank={})", self.inner.estimated_rank)
    }
}

#[pyfunction]
#[pyo3(signature = (m, r, lam, gamma, max_iter=1000, tol=1e-6, w_sweeps=10, h_inner=1, seed=0))]
#[allow(clippy::too_many_arguments)]
fn solve(
    m: Vec<Vec<f64>>,
    r: usize,
    lam: f64,
    gamma: f64,
    max_iter: usize,
    tol: f64,
    w_sweeps: usize,
    h_inner: usize,
    seed: u64,
) -> PyResult<PySolveResult> {
    let cfg = SolverConfig {
        max_iter,
        tol,
        w_sweeps,
        h_inner,
        seed,
        ..SolverConfig::new(r, lam, gamma)
    };
    let inner = sonnmf::solve(&matrix(m)?, &cfg, None).map_err(to_py)?;
    Ok(PySolveResult { inner })
}

#[pyfunction]
#[pyo3(signature = (w, h, tau=None, energy_floor=rank::DEFAULT_ENERGY_FLOOR))]
fn extract_rank(w: Vec<Vec<f64>>, h: Vec<Vec<f64>>, tau: Option<f64>, energy_floor: f64) -> PyResult<PyRankReport> {
    let inner = rank::extract_rank(&matrix(w)?, &matrix(h)?, tau, energy_floor).map_err(to_py)?;
    Ok(PyRankReport { inner })
}

/// `(fit, son, hinge, total)` of the cost at `(W, H)`.
#[pyfunction]
fn evaluate(m: Vec<Vec<f64>>, w: Vec<Vec<f64>>, h: Vec<Vec<f64>>, lam: f64, gamma: f64) -> PyResult<(f64, f64, f64, f64)> {
    let b = objective::evaluate(&matrix(m)?, &matrix(w)?, &matrix(h)?, lam, gamma).map_err(to_py)?;
    Ok((b.fit, b.son, b.hinge, b.total))
}

#[pyfunction]
fn son21(w: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(objective::son21(&matrix(w)?))
}

#[pyfunction]
#[pyo3(signature = (w, tau=0.0))]
fn son_upper_bound(w: Vec<Vec<f64>>, tau: f64) -> PyResult<f64> {
    Ok(objective::son_upper_bound(&matrix(w)?, tau))
}

#[pyfunction]
fn prox_distance(v: Vec<f64>, c: Vec<f64>, mu: f64) -> PyResult<Vec<f64>> {
    prox::prox_distance(&v, &c, mu).map_err(to_py)
}

#[pyfunction]
fn prox_neg_hinge(v: Vec<f64>, mu: f64) -> PyResult<Vec<f64>> {
    prox::prox_neg_hinge(&v, mu).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (x, radius=1.0))]
fn project_capped_simplex(x: Vec<f64>, radius: f64) -> PyResult<Vec<f64>> {
    prox::project_capped_simplex(&x, radius).map_err(to_py)
}

/// Lower bound on the number of nonzero pairwise terms, as `(numer, denom)`.
#[pyfunction]
fn min_edges_lower_bound(r: u64, r_star: u64) -> PyResult<(u64, u64)> {
    let q = rank::min_edges_lower_bound(r, r_star).map_err(to_py)?;
    Ok((q.numer, q.denom))
}

#[pyfunction]
fn reduction_factor(r: u64, r_star: u64) -> PyResult<f64> {
    rank::reduction_factor(r, r_star).map_err(to_py)
}

type Problem = (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>);

fn problem(s: Synthetic) -> Problem {
    (rows(&s.m), rows(&s.w_true), rows(&s.h_true))
}

/// `(M, W_true, H_true)` for the four-source mixture.
#[pyfunction]
#[pyo3(signature = (n=500, alpha=0.05, noise=0.01, seed=0))]
fn gen_mixture(n: usize, alpha: f64, noise: f64, seed: u64) -> PyResult<Problem> {
    let spec = SyntheticSpec {
        n_samples: n,
        dirichlet_alpha: alpha,
        noise_scale: noise,
        seed,
    };
    gen_synthetic(&spec).map(problem).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (m, n, noise=0.005, seed=0))]
fn gen_rank_one_problem(m: usize, n: usize, noise: f64, seed: u64) -> PyResult<Problem> {
    gen_rank_one(m, n, noise, seed).map(problem).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (n=500, seed=0))]
fn gen_swimmer(n: usize, seed: u64) -> PyResult<Problem> {
    gen_swimmer_toy(n, seed).map(problem).map_err(to_py)
}

#[pymodule]
fn pysonnmf(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySolveResult>()?;
    m.add_class::<PyRankReport>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(extract_rank, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(son21, m)?)?;
    m.add_function(wrap_pyfunction!(son_upper_bound, m)?)?;
    m.add_function(wrap_pyfunction!(prox_distance, m)?)?;
    m.add_function(wrap_pyfunction!(prox_neg_hinge, m)?)?;
    m.add_function(wrap_pyfunction!(project_capped_simplex, m)?)?;
    m.add_function(wrap_pyfunction!(min_edges_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(reduction_factor, m)?)?;
    m.add_function(wrap_pyfunction!(gen_mixture, m)?)?;
    m.add_function(wrap_pyfunction!(gen_rank_one_problem, m)?)?;
    m.add_function(wrap_pyfunction!(gen_swimmer, m)?)?;
    Ok(())
}
