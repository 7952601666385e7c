//! Reference methods: unregularized NMF on the same alternating skeleton, and
//! the exact rank-one basis from the leading eigenvector of `MMᵀ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{leading_eigvec, Matrix, POWER_TOL};
use crate::solver::{check_data, initialize, run_bcd, Init, SolveResult, SolverConfig};
use crate::wsolver::sweep_w;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub r: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl BaselineConfig {
    pub fn new(r: usize) -> Self {
        let d = SolverConfig::default();
        Self {
            r,
            max_iter: d.max_iter,
            tol: d.tol,
            seed: d.seed,
        }
    }

    fn as_solver_config(&self) -> SolverConfig {
        SolverConfig {
            r: self.r,
            lambda: 0.0,
            gamma: 0.0,
            max_iter: self.max_iter,
            tol: self.tol,
            seed: self.seed,
            init: Init::Uniform01,
            ..SolverConfig::default()
        }
    }
}

/// Alternating projected least squares: the `H` step of the main solver and a
/// `W` sweep whose column update is the least-squares anchor clipped at zero.
pub fn vanilla_nmf(m: &Matrix, cfg: &BaselineConfig) -> Result<SolveResult> {
    let solver_cfg = cfg.as_solver_config();
    solver_cfg.validate()?;
    check_data(m)?;
    let (w0, h0) = initialize(m.rows(), m.cols(), cfg.r, cfg.seed);
    run_bcd(m, &solver_cfg, w0, h0, |w, h, m| sweep_w(w, h, m, 0.0, 0.0, solver_cfg.w_sweeps))
}

/// Unit-norm leading eigenvector of `MMᵀ`, entrywise nonnegative for
/// nonnegative `M`.
pub fn rank1_oracle(m: &Matrix) -> Result<Vec<f64>> {
    if m.max_abs() == 0.0 {
        return Err(Error::InvalidArgument("rank-one oracle needs a nonzero matrix".into()));
    }
    let gram = m.matmul(&m.transpose())?;
    Ok(leading_eigvec(&gram, POWER_TOL, 100_000)?.vector)
}
