//! Nonnegative matrix factorization with a sum-of-norms penalty on the
//! columns of `W`, which pulls redundant columns together so the effective
//! rank can be read off after solving with an overestimated `r`.
//!
//! ```text
//! min_{W, H}  ½‖WH − M‖²_F + λ Σ_{i<j} ‖w_i − w_j‖₂ + γ Σ_j ‖max(−w_j, 0)‖₁
//! s.t.        every column of H in {h ≥ 0, Σ h ≤ 1}
//! ```
//!
//! The solver alternates a projected-gradient step on `H` with Gauss–Seidel
//! sweeps over the columns of `W`, each column update being one
//! proximal-averaging step. [`rank`] turns the result into a reduced
//! factorization.

pub mod baselines;
pub mod cli;
pub mod data;
pub mod error;
pub mod hsolver;
pub mod io;
pub mod matrix;
pub mod objective;
pub mod prox;
pub mod rank;
pub mod rng;
pub mod solver;
pub mod wsolver;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use objective::ObjectiveBreakdown;
pub use rank::{ClusterAssignment, RankReport};
pub use solver::{solve, Init, SolveResult, SolverConfig, Status};
