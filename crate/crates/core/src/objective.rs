//! The regularized cost and the sum-of-norms diagnostics.
//!
//! Pairs are counted once: `SON₂,₁(W) = Σ_{i<j} ‖w_i − w_j‖₂`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dist2, frobenius_norm, Matrix};
use crate::rank::cluster_columns;

/// Tolerance for declaring an `H` column inside the capped simplex.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// The three terms of the cost, plus feasibility of `H` (reported instead of
/// an infinite indicator).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub fit: f64,
    pub son: f64,
    pub hinge: f64,
    pub feasible_h: bool,
    /// Largest violation of `h ≥ 0` or `Σ h ≤ 1` over the columns of `H`.
    pub h_violation: f64,
    pub total: f64,
}

pub fn son21(w: &Matrix) -> f64 {
    let cols = w.columns();
    let mut total = 0.0;
    for i in 0..cols.len() {
        for j in (i + 1)..cols.len() {
            total += dist2(&cols[i], &cols[j]);
        }
    }
    total
}

/// Number of unordered column pairs further apart than `tau`.
pub fn son20(w: &Matrix, tau: f64) -> usize {
    let cols = w.columns();
    let mut count = 0;
    for i in 0..cols.len() {
        for j in (i + 1)..cols.len() {
            if dist2(&cols[i], &cols[j]) > tau {
                count += 1;
            }
        }
    }
    count
}

/// `Σ_j ‖max(−w_j, 0)‖₁`.
pub fn negative_mass(w: &Matrix) -> f64 {
    w.as_slice().iter().map(|&v| (-v).max(0.0)).sum()
}

fn h_violation(h: &Matrix) -> f64 {
    let mut worst = 0.0_f64;
    for j in 0..h.cols() {
        let mut sum = 0.0;
        for i in 0..h.rows() {
            let v = h.get(i, j);
            if -v > worst {
                worst = -v;
            }
            sum += v;
        }
        if sum - 1.0 > worst {
            worst = sum - 1.0;
        }
    }
    worst
}

pub fn evaluate(m: &Matrix, w: &Matrix, h: &Matrix, lambda: f64, gamma: f64) -> Result<ObjectiveBreakdown> {
    if w.rows() != m.rows() || h.cols() != m.cols() || w.cols() != h.rows() {
        return Err(Error::DimensionMismatch {
            left: (w.rows(), h.cols()),
            right: m.shape(),
            context: "evaluate requires W: m x r, H: r x n, M: m x n",
        });
    }
    let residual = w.matmul(h)?.sub(m)?;
    let fit = 0.5 * frobenius_norm(&residual).powi(2);
    let son = lambda * son21(w);
    let hinge = gamma * negative_mass(w);
    let violation = h_violation(h);
    Ok(ObjectiveBreakdown {
        fit,
        son,
        hinge,
        feasible_h: violation <= FEASIBILITY_TOL,
        h_violation: violation,
        total: fit + son + hinge,
    })
}

/// `(max cluster size) · (max center distance) · Σ_{a<b} |C_b|`, clusters
/// taken at tolerance `tau` in label order. Bounds `son21(W)` from above when
/// `tau = 0`.
pub fn son_upper_bound(w: &Matrix, tau: f64) -> f64 {
    let clusters = cluster_columns(w, tau);
    let max_size = clusters.sizes.iter().copied().max().unwrap_or(0) as f64;
    let pair_weight: usize = clusters.sizes.iter().enumerate().map(|(b, &s)| b * s).sum();
    let mut max_dist = 0.0_f64;
    for a in 0..clusters.centers.len() {
        for b in (a + 1)..clusters.centers.len() {
            max_dist = max_dist.max(dist2(&clusters.centers[a], &clusters.centers[b]));
        }
    }
    max_size * max_dist * pair_weight as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn five_column_example() -> (Matrix, [Vec<f64>; 3]) {
        let c1 = vec![1.0, 0.0];
        let c2 = vec![0.0, 2.0];
        let c3 = vec![3.0, 3.0];
        let w = Matrix::from_columns(&[c1.clone(), c2.clone(), c3.clone(), c3.clone(), c3.clone()]).unwrap();
        (w, [c1, c2, c3])
    }

    #[test]
    fn son21_of_equal_columns_is_zero() {
        let w = Matrix::from_columns(&vec![vec![1.0, 2.0]; 4]).unwrap();
        assert_eq!(son21(&w), 0.0);
        assert_eq!(son20(&w, 0.0), 0);
        assert_eq!(son20(&w, 5.0), 0);
    }

    #[test]
    fn son21_cluster_weighted_identity() {
        let (w, [c1, c2, c3]) = five_column_example();
        let expected = dist2(&c1, &c2) + 3.0 * dist2(&c1, &c3) + 3.0 * dist2(&c2, &c3);
        assert!((son21(&w) - expected).abs() < 1e-12);
        assert_eq!(son20(&w, 0.0), 7);
    }

    #[test]
    fn son21_matches_pair_loop_with_compensated_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let w = Matrix::from_vec(3, 6, (0..18).map(|_| rng.random::<f64>()).collect()).unwrap();
        let (mut s, mut c) = (0.0_f64, 0.0_f64);
        for i in 0..6 {
            for j in 0..6 {
                if i < j {
                    let d = (0..3).map(|k| (w.get(k, i) - w.get(k, j)).powi(2)).sum::<f64>().sqrt();
                    let y = d - c;
                    let t = s + y;
                    c = (t - s) - y;
                    s = t;
                }
            }
        }
        assert!((son21(&w) - s).abs() < 1e-13);
        assert_eq!(son20(&w, 0.0), 15);
    }

    #[test]
    fn evaluate_exact_merged_solution_is_zero() {
        let w = Matrix::from_columns(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        let h = Matrix::from_rows(&[vec![0.2, 0.5], vec![0.3, 0.1]]).unwrap();
        let m = w.matmul(&h).unwrap();
        let b = evaluate(&m, &w, &h, 1.0, 1.0).unwrap();
        assert_eq!(b.total, 0.0);
        assert!(b.feasible_h);
    }

    #[test]
    fn evaluate_hand_computed_2x2() {
        // W = [[1, -1], [0, 2]], H = [[0.5, 0], [0.25, 0.5]], M = [[1, 0], [1, 1]]
        // WH = [[0.25, -0.5], [0.5, 1]]; residual = [[-0.75, -0.5], [-0.5, 0]]
        // fit = ½(0.5625 + 0.25 + 0.25) = 0.53125
        // son = λ ‖(2, −2)‖ = 0.1 · 2√2; hinge = γ · 1 = 0.5
        let w = Matrix::from_rows(&[vec![1.0, -1.0], vec![0.0, 2.0]]).unwrap();
        let h = Matrix::from_rows(&[vec![0.5, 0.0], vec![0.25, 0.5]]).unwrap();
        let m = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let b = evaluate(&m, &w, &h, 0.1, 0.5).unwrap();
        assert!((b.fit - 0.53125).abs() < 1e-15);
        assert!((b.son - 0.2 * 2f64.sqrt()).abs() < 1e-15);
        assert!((b.hinge - 0.5).abs() < 1e-15);
        assert!((b.total - (0.53125 + 0.2 * 2f64.sqrt() + 0.5)).abs() < 1e-14);
        let plain = evaluate(&m, &w, &h, 0.0, 0.0).unwrap();
        assert_eq!(plain.total, plain.fit);
    }

    #[test]
    fn infeasible_h_is_flagged() {
        let w = Matrix::identity(2);
        let h = Matrix::from_rows(&[vec![0.8], vec![0.7]]).unwrap();
        let b = evaluate(&h, &w, &h, 0.0, 0.0).unwrap();
        assert!(!b.feasible_h);
        assert!((b.h_violation - 0.5).abs() < 1e-12);
    }

    #[test]
    fn upper_bound_examples() {
        let single = Matrix::from_columns(&vec![vec![1.0, 1.0]; 3]).unwrap();
        assert_eq!(son_upper_bound(&single, 0.0), 0.0);
        let (w, [c1, c2, c3]) = five_column_example();
        let maxd = dist2(&c1, &c2).max(dist2(&c1, &c3)).max(dist2(&c2, &c3));
        let bound = son_upper_bound(&w, 0.0);
        // sizes 1, 1, 3 in label order: 0·1 + 1·1 + 2·3 = 7
        assert!((bound - 3.0 * maxd * 7.0).abs() < 1e-12);
        assert!(son21(&w) <= bound);
    }

    #[test]
    fn son_properties_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..100 {
            let r = rng.random_range(2..7);
            let w = Matrix::from_vec(3, r, (0..3 * r).map(|_| rng.random::<f64>()).collect()).unwrap();
            assert!(son21(&w) <= son_upper_bound(&w, 0.0) + 1e-12);

            let mut perm: Vec<usize> = (0..r).collect();
            perm.reverse();
            let permuted = Matrix::from_columns(&perm.iter().map(|&j| w.col(j)).collect::<Vec<_>>()).unwrap();
            assert!((son21(&w) - son21(&permuted)).abs() < 1e-12);

            let taus = [0.0, 0.2, 0.5, 1.0, 2.0];
            let counts: Vec<usize> = taus.iter().map(|&t| son20(&w, t)).collect();
            assert!(counts.windows(2).all(|p| p[0] >= p[1]));

            let mut w2 = w.clone();
            let j = rng.random_range(0..r);
            let shift: Vec<f64> = (0..3).map(|_| rng.random::<f64>() - 0.5).collect();
            let moved: Vec<f64> = w.col(j).iter().zip(&shift).map(|(a, b)| a + b).collect();
            w2.set_col(j, &moved);
            let lip = (r as f64 - 1.0) * crate::matrix::norm2(&shift);
            assert!((son21(&w) - son21(&w2)).abs() <= lip + 1e-12);
        }
    }

    #[test]
    fn zero_regularization_total_is_half_squared_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let w = Matrix::from_vec(4, 3, (0..12).map(|_| rng.random::<f64>()).collect()).unwrap();
        let h = Matrix::from_vec(3, 5, (0..15).map(|_| rng.random::<f64>()).collect()).unwrap();
        let m = Matrix::from_vec(4, 5, (0..20).map(|_| rng.random::<f64>()).collect()).unwrap();
        let b = evaluate(&m, &w, &h, 0.0, 0.0).unwrap();
        let direct = 0.5 * frobenius_norm(&w.matmul(&h).unwrap().sub(&m).unwrap()).powi(2);
        assert_eq!(b.total, direct);
    }
}
