//! Inexact block coordinate descent: one projected-gradient step on `H`, then
//! a few proximal-averaging sweeps on `W`, until the relative change of the
//! cost falls below the tolerance.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hsolver::update_h;
use crate::matrix::Matrix;
use crate::objective::{evaluate, ObjectiveBreakdown};
use crate::prox::project_capped_simplex;
use crate::rng::seeded;
use crate::wsolver::sweep_w;

/// Guard for the relative-change denominator.
pub const DIVISION_FLOOR: f64 = 1e-300;
/// Most negative data entry accepted without failing.
pub const NEGATIVE_DATA_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Uniform `[0, 1)` entries, `H` columns then projected onto the simplex.
    #[default]
    Uniform01,
    /// Caller supplies `(W₀, H₀)`.
    Provided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub r: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub w_sweeps: usize,
    pub h_inner: usize,
    pub seed: u64,
    pub init: Init,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            r: 1,
            lambda: 0.0,
            gamma: 0.0,
            max_iter: 1000,
            tol: 1e-6,
            w_sweeps: 10,
            h_inner: 1,
            seed: 0,
            init: Init::Uniform01,
        }
    }
}

impl SolverConfig {
    pub fn new(r: usize, lambda: f64, gamma: f64) -> Self {
        Self {
            r,
            lambda,
            gamma,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.r == 0 {
            return bad("r must be positive".into());
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be finite and nonnegative, got {}", self.lambda));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be finite and nonnegative, got {}", self.gamma));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_iter == 0 || self.w_sweeps == 0 || self.h_inner == 0 {
            return bad("max_iter, w_sweeps and h_inner must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIter,
    /// `W` collapsed to zero, leaving the `H` step size undefined.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub w: Matrix,
    pub h: Matrix,
    /// Cost at the initial point and after every outer iteration.
    pub trace: Vec<ObjectiveBreakdown>,
    /// Seconds since the start of the solve, aligned with `trace`.
    pub elapsed: Vec<f64>,
    pub iterations: usize,
    pub status: Status,
    pub wall_time: f64,
}

impl SolveResult {
    pub fn final_objective(&self) -> &ObjectiveBreakdown {
        self.trace.last().expect("trace holds the initial point")
    }
}

/// Draws `(W₀, H₀)` for an `m × n` problem from the seeded generator.
pub fn initialize(m: usize, n: usize, r: usize, seed: u64) -> (Matrix, Matrix) {
    let mut rng = seeded(seed);
    let w = Matrix::from_vec(m, r, (0..m * r).map(|_| rng.random::<f64>()).collect())
        .expect("uniform draws are finite");
    let mut h = Matrix::from_vec(r, n, (0..r * n).map(|_| rng.random::<f64>()).collect())
        .expect("uniform draws are finite");
    for j in 0..n {
        let col = project_capped_simplex(&h.col(j), 1.0).expect("r > 0");
        h.set_col(j, &col);
    }
    (w, h)
}

pub(crate) fn check_data(m: &Matrix) -> Result<()> {
    m.check_finite()?;
    let min = m.min();
    if min < -NEGATIVE_DATA_TOL {
        return Err(Error::InvalidArgument(format!(
            "data matrix has negative entry {min}"
        )));
    }
    if min < 0.0 {
        log::warn!("data matrix has tiny negative entries (min {min:e}); proceeding");
    }
    Ok(())
}

/// Runs the alternating scheme on `m`. `start` overrides the seeded
/// initialization and is required when `cfg.init` is [`Init::Provided`].
pub fn solve(m: &Matrix, cfg: &SolverConfig, start: Option<(Matrix, Matrix)>) -> Result<SolveResult> {
    cfg.validate()?;
    check_data(m)?;
    let (rows, n) = m.shape();
    let (w0, h0) = match (start, cfg.init) {
        (Some(pair), _) => pair,
        (None, Init::Uniform01) => initialize(rows, n, cfg.r, cfg.seed),
        (None, Init::Provided) => {
            return Err(Error::InvalidArgument("init = provided but no starting pair given".into()))
        }
    };
    if w0.shape() != (rows, cfg.r) || h0.shape() != (cfg.r, n) {
        return Err(Error::DimensionMismatch {
            left: w0.shape(),
            right: h0.shape(),
            context: "starting pair must be m x r and r x n",
        });
    }
    w0.check_finite()?;
    h0.check_finite()?;

    run_bcd(m, cfg, w0, h0, |w, h, m| sweep_w(w, h, m, cfg.lambda, cfg.gamma, cfg.w_sweeps))
}

/// Shared outer loop, parameterized by the W step so the baseline can reuse it.
pub(crate) fn run_bcd(
    m: &Matrix,
    cfg: &SolverConfig,
    mut w: Matrix,
    mut h: Matrix,
    w_step: impl Fn(&Matrix, &Matrix, &Matrix) -> Result<Matrix>,
) -> Result<SolveResult> {
    let start = Instant::now();
    let mut trace = vec![evaluate(m, &w, &h, cfg.lambda, cfg.gamma)?];
    let mut elapsed = vec![start.elapsed().as_secs_f64()];
    let mut status = Status::MaxIter;
    let mut iterations = 0;

    for k in 1..=cfg.max_iter {
        let h_next = match update_h(&w, &h, m, cfg.h_inner) {
            Ok(h_next) => h_next,
            Err(Error::ZeroBasis) => {
                // W shrank to nothing. That is the answer when the cost went with it.
                let first = trace[0].total;
                let last = trace.last().expect("nonempty").total;
                status = if last <= cfg.tol * first {
                    Status::Converged
                } else {
                    Status::Degenerate
                };
                break;
            }
            Err(e) => return Err(e),
        };
        h = h_next;
        w = w_step(&w, &h, m)?;
        if !w.is_finite() || !h.is_finite() {
            return Err(Error::Numerical(format!("non-finite factor at iteration {k}")));
        }
        let current = evaluate(m, &w, &h, cfg.lambda, cfg.gamma)?;
        if !current.total.is_finite() {
            return Err(Error::Numerical(format!("non-finite objective at iteration {k}")));
        }
        let prev = trace.last().expect("nonempty").total;
        trace.push(current);
        elapsed.push(start.elapsed().as_secs_f64());
        iterations = k;
        let change = (current.total - prev).abs() / prev.max(DIVISION_FLOOR);
        // a zero cost is the global minimum of a sum of nonnegative terms
        if change <= cfg.tol || current.total == 0.0 {
            status = Status::Converged;
            break;
        }
    }
    Ok(SolveResult {
        w,
        h,
        trace,
        elapsed,
        iterations,
        status,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults() {
        let cfg = SolverConfig::default();
        assert_eq!(cfg.tol, 1e-6);
        assert_eq!(cfg.w_sweeps, 10);
        assert_eq!(cfg.h_inner, 1);
        assert!(SolverConfig { tol: 0.0, ..cfg.clone() }.validate().is_err());
        assert!(SolverConfig { r: 0, ..cfg.clone() }.validate().is_err());
        assert!(SolverConfig { lambda: -1.0, ..cfg }.validate().is_err());
    }

    #[test]
    fn initial_h_is_feasible() {
        let (w, h) = initialize(4, 30, 6, 3);
        assert!(w.min() >= 0.0);
        for j in 0..30 {
            let c = h.col(j);
            assert!(c.iter().all(|&v| v >= 0.0));
            assert!(c.iter().sum::<f64>() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn zero_data_converges_quickly() {
        let m = Matrix::zeros(4, 20);
        let res = solve(&m, &SolverConfig::new(3, 1e-3, 1.0), None).unwrap();
        assert_eq!(res.status, Status::Converged);
        assert!(res.iterations <= 10, "{} iterations", res.iterations);
        assert_eq!(res.trace.len(), res.iterations + 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut m = Matrix::zeros(2, 2);
        m.set(0, 0, -0.5);
        assert!(solve(&m, &SolverConfig::new(1, 0.0, 1.0), None).is_err());
        let m = Matrix::zeros(2, 2);
        let cfg = SolverConfig {
            init: Init::Provided,
            ..SolverConfig::new(1, 0.0, 1.0)
        };
        assert!(solve(&m, &cfg, None).is_err());
        assert!(solve(&m, &SolverConfig::new(2, 0.0, 1.0), Some((Matrix::zeros(2, 3), Matrix::zeros(3, 2)))).is_err());
    }

    #[test]
    fn tiny_negative_entries_are_tolerated() {
        let mut m = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.2, 0.3]]).unwrap();
        m.set(1, 1, -1e-9);
        assert!(solve(&m, &SolverConfig { max_iter: 5, ..SolverConfig::new(2, 0.0, 1.0) }, None).is_ok());
    }
}
