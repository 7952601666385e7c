//! Column sweep for the basis matrix `W`.
//!
//! For column `j` the subproblem is
//!
//! ```text
//! min_w  ½‖h‖² ‖w‖² − ⟨M_j hᵀ, w⟩ + λ Σ_{i≠j} ‖w − w_i‖₂ + γ ‖max(−w, 0)‖₁
//! ```
//!
//! with `h` the j-th row of `H` and `M_j = M − WH + w_j h`. One gradient step
//! lands on the least-squares anchor `w̄ = M_j hᵀ / ‖h‖²`; the nonsmooth part is
//! handled by averaging the individual proxes with weights `λ/σ` (one per
//! other column) and `γ/σ`, where `σ = (r − 1)λ + γ`.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::prox::{prox_distance, prox_neg_hinge, proximal_average, ProxWeight};

/// Data for the update of one column of `W`.
///
/// `target` holds the sufficient statistic `M_j hᵀ` rather than the full
/// `m × n` residual target.
#[derive(Debug, Clone)]
pub struct ColumnSubproblem {
    pub j: usize,
    pub h_row_sq: f64,
    pub target: Vec<f64>,
    pub sigma: f64,
    pub lambda: f64,
    pub gamma: f64,
}

impl ColumnSubproblem {
    /// Builds the subproblem from an explicit residual target `M_j`.
    pub fn new(
        j: usize,
        residual_target: &Matrix,
        h_row: &[f64],
        r: usize,
        lambda: f64,
        gamma: f64,
    ) -> Result<Self> {
        if residual_target.cols() != h_row.len() {
            return Err(Error::DimensionMismatch {
                left: residual_target.shape(),
                right: (1, h_row.len()),
                context: "residual target and H row",
            });
        }
        check_weights(lambda, gamma)?;
        let target = residual_target.mat_vec(h_row);
        Ok(Self {
            j,
            h_row_sq: h_row.iter().map(|x| x * x).sum(),
            target,
            sigma: (r as f64 - 1.0) * lambda + gamma,
            lambda,
            gamma,
        })
    }

    /// Builds the subproblem from the running residual `E = M − WH`, using
    /// `M_j hᵀ = E hᵀ + ‖h‖² w_j`.
    fn from_residual(j: usize, residual: &Matrix, w: &Matrix, h_row: &[f64], lambda: f64, gamma: f64) -> Self {
        let h_row_sq: f64 = h_row.iter().map(|x| x * x).sum();
        let mut target = residual.mat_vec(h_row);
        for (i, t) in target.iter_mut().enumerate() {
            *t += h_row_sq * w.get(i, j);
        }
        Self {
            j,
            h_row_sq,
            target,
            sigma: (w.cols() as f64 - 1.0) * lambda + gamma,
            lambda,
            gamma,
        }
    }

    pub fn lipschitz(&self) -> f64 {
        self.h_row_sq / self.sigma
    }
}

fn check_weights(lambda: f64, gamma: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) || !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lambda and gamma must be finite and nonnegative, got {lambda}, {gamma}"
        )));
    }
    Ok(())
}

/// Least-squares anchor `M_j hᵀ / ‖h‖²`. A zero row of `H` yields
/// [`Error::DegenerateRow`].
pub fn gradient_anchor(sub: &ColumnSubproblem) -> Result<Vec<f64>> {
    if !(sub.h_row_sq > 0.0) {
        return Err(Error::DegenerateRow(sub.j));
    }
    Ok(sub.target.iter().map(|t| t / sub.h_row_sq).collect())
}

/// One proximal-averaging update of column `sub.j`, reading the other
/// columns from `w` at their current values.
pub fn update_w_column(sub: &ColumnSubproblem, w: &Matrix) -> Result<Vec<f64>> {
    let r = w.cols();
    let j = sub.j;
    if j >= r || sub.target.len() != w.rows() {
        return Err(Error::DimensionMismatch {
            left: w.shape(),
            right: (sub.target.len(), j + 1),
            context: "column subproblem does not match W",
        });
    }
    let current = w.col(j);
    let lam_w = if sub.sigma > 0.0 { sub.lambda / sub.sigma } else { 0.0 };
    let gam_w = if sub.sigma > 0.0 { sub.gamma / sub.sigma } else { 0.0 };

    let anchor = match gradient_anchor(sub) {
        Ok(a) => a,
        Err(Error::DegenerateRow(_)) => {
            // limit of the average as the prox parameters go to infinity:
            // full shrink onto every other column and a full hinge clamp
            if sub.sigma == 0.0 {
                return Ok(current.iter().map(|v| v.max(0.0)).collect());
            }
            let mut out: Vec<f64> = current.iter().map(|v| gam_w * v.max(0.0)).collect();
            for i in (0..r).filter(|&i| i != j) {
                for (k, o) in out.iter_mut().enumerate() {
                    *o += lam_w * w.get(k, i);
                }
            }
            return Ok(out);
        }
        Err(e) => return Err(e),
    };

    if sub.sigma == 0.0 {
        return Ok(anchor.iter().map(|v| v.max(0.0)).collect());
    }

    let mut points = Vec::with_capacity(r);
    let mut weights = Vec::with_capacity(r);
    if sub.lambda > 0.0 {
        let mu = sub.lambda / sub.h_row_sq;
        let weight = ProxWeight::new(lam_w)?;
        for i in (0..r).filter(|&i| i != j) {
            points.push(prox_distance(&anchor, &w.col(i), mu)?);
            weights.push(weight);
        }
    }
    if sub.gamma > 0.0 {
        points.push(prox_neg_hinge(&anchor, sub.gamma / sub.h_row_sq)?);
        weights.push(ProxWeight::new(gam_w)?);
    }
    proximal_average(&points, &weights)
}

/// Runs `sweeps` Gauss–Seidel passes over the columns of `W`. The residual
/// `M − WH` is rebuilt at the start of each pass and updated incrementally
/// after each column.
pub fn sweep_w(w: &Matrix, h: &Matrix, m: &Matrix, lambda: f64, gamma: f64, sweeps: usize) -> Result<Matrix> {
    let (rows, r) = w.shape();
    if h.rows() != r || m.shape() != (rows, h.cols()) {
        return Err(Error::DimensionMismatch {
            left: w.shape(),
            right: h.shape(),
            context: "sweep_w requires W: m x r, H: r x n, M: m x n",
        });
    }
    check_weights(lambda, gamma)?;
    let mut w = w.clone();
    for _ in 0..sweeps {
        let mut residual = m.sub(&w.matmul(h)?)?;
        for j in 0..r {
            let h_row = h.row(j);
            let sub = ColumnSubproblem::from_residual(j, &residual, &w, h_row, lambda, gamma);
            let updated = update_w_column(&sub, &w)?;
            for (i, new) in updated.iter().enumerate() {
                let delta = w.get(i, j) - new;
                if delta != 0.0 {
                    for (e, hk) in residual.row_mut(i).iter_mut().zip(h_row) {
                        *e += delta * hk;
                    }
                }
            }
            w.set_col(j, &updated);
        }
    }
    Ok(w)
}
