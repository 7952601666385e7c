//! Projected-gradient update of the coefficient matrix `H`.
//!
//! Each column solves `min ½‖W h − m‖²` over the capped unit simplex with a
//! fixed step `1/‖WᵀW‖₂`. Columns are independent given the shared Gram
//! context.

use crate::error::{Error, Result};
use crate::matrix::{spectral_norm, Matrix, POWER_MAX_ITER, POWER_TOL};
use crate::prox::project_unit_capped_in_place;

/// Shared data for one H update: `WᵀW`, `WᵀM` and the step normalizer.
#[derive(Debug, Clone)]
pub struct HUpdateContext {
    pub gram: Matrix,
    pub cross: Matrix,
    pub spectral: f64,
}

impl HUpdateContext {
    pub fn new(w: &Matrix, m: &Matrix) -> Result<Self> {
        if w.rows() != m.rows() {
            return Err(Error::DimensionMismatch {
                left: w.shape(),
                right: m.shape(),
                context: "W and M must have the same number of rows",
            });
        }
        let gram = w.tr_matmul(w)?;
        let spectral = spectral_norm(&gram, POWER_TOL, POWER_MAX_ITER)?.value;
        if !(spectral > 0.0) {
            return Err(Error::ZeroBasis);
        }
        let cross = w.tr_matmul(m)?;
        Ok(Self {
            gram,
            cross,
            spectral,
        })
    }
}

/// Applies `inner_iters` projected-gradient steps to every column of `H`.
pub fn update_h(w: &Matrix, h: &Matrix, m: &Matrix, inner_iters: usize) -> Result<Matrix> {
    let r = w.cols();
    if h.rows() != r || h.cols() != m.cols() {
        return Err(Error::DimensionMismatch {
            left: h.shape(),
            right: (r, m.cols()),
            context: "H must be r x n",
        });
    }
    if inner_iters == 0 {
        return Err(Error::InvalidArgument("inner_iters must be positive".into()));
    }
    let ctx = HUpdateContext::new(w, m)?;
    Ok(update_h_with(&ctx, h, inner_iters))
}

/// As [`update_h`], reusing a prebuilt context.
pub fn update_h_with(ctx: &HUpdateContext, h: &Matrix, inner_iters: usize) -> Matrix {
    let (r, n) = h.shape();
    let step = 1.0 / ctx.spectral;
    // work column-major so each column is contiguous
    let mut cols = h.transpose();
    let cross_t = ctx.cross.transpose();
    let mut scratch = Vec::with_capacity(r);
    let mut grad = vec![0.0; r];
    for j in 0..n {
        let b = cross_t.row(j).to_vec();
        let x = cols.row_mut(j);
        for _ in 0..inner_iters {
            for (i, g) in grad.iter_mut().enumerate() {
                let ax: f64 = ctx.gram.row(i).iter().zip(x.iter()).map(|(a, xi)| a * xi).sum();
                *g = ax - b[i];
            }
            for (xi, g) in x.iter_mut().zip(&grad) {
                *xi -= step * g;
            }
            project_unit_capped_in_place(x, &mut scratch);
        }
    }
    let out = cols.transpose();
    debug_assert_eq!(out.shape(), (r, n));
    out
}
