//! Closed-form proximal operators, the capped-simplex projection, and the
//! proximal-average combinator.
//!
//! Conventions: `prox_f^mu(v) = argmin_x f(x) + ‖x − v‖² / (2 mu)`.

use crate::error::{Error, Result};
use crate::matrix::norm2;

/// Tolerance on the sum of a set of averaging weights.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Averaging coefficient in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ProxWeight(f64);

impl ProxWeight {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidArgument(format!(
                "averaging weight {value} outside [0, 1]"
            )));
        }
        Ok(Self(value))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Euclidean projection onto `{x : x ≥ 0, Σ x_i = radius}` by the
/// sort-and-threshold method. Entries at or below the threshold map to 0.
pub fn project_simplex(x: &[f64], radius: f64) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("cannot project an empty vector".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("simplex radius must be positive, got {radius}")));
    }
    let mut sorted = x.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - radius) / (k as f64 + 1.0);
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    Ok(x.iter().map(|&v| (v - theta).max(0.0)).collect())
}

/// Euclidean projection onto the capped simplex `{x ≥ 0, Σ x_i ≤ radius}`.
///
/// If clipping at zero already lands inside the cap the clipped vector is the
/// answer; otherwise the cap is active and the point goes to the equality
/// simplex.
pub fn project_capped_simplex(x: &[f64], radius: f64) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("cannot project an empty vector".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("simplex radius must be positive, got {radius}")));
    }
    let clipped: Vec<f64> = x.iter().map(|&v| v.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= radius {
        return Ok(clipped);
    }
    project_simplex(x, radius)
}

/// In-place capped-simplex projection with unit radius, used on the hot path
/// of the H update. `scratch` is reused across calls.
pub(crate) fn project_unit_capped_in_place(x: &mut [f64], scratch: &mut Vec<f64>) {
    let clipped_sum: f64 = x.iter().map(|v| v.max(0.0)).sum();
    if clipped_sum <= 1.0 {
        x.iter_mut().for_each(|v| *v = v.max(0.0));
        return;
    }
    scratch.clear();
    scratch.extend_from_slice(x);
    scratch.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in scratch.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (k as f64 + 1.0);
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    x.iter_mut().for_each(|v| *v = (*v - theta).max(0.0));
}

/// Proximal operator of `x ↦ ‖x − c‖₂` with parameter `mu`:
/// `v − (v − c) / max(1, ‖v − c‖₂ / mu)`.
///
/// Returns `c` when `v` is within `mu` of `c`, otherwise moves `v` a distance
/// `mu` toward `c`.
pub fn prox_distance(v: &[f64], c: &[f64], mu: f64) -> Result<Vec<f64>> {
    if v.len() != c.len() {
        return Err(Error::DimensionMismatch {
            left: (v.len(), 1),
            right: (c.len(), 1),
            context: "prox_distance",
        });
    }
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("prox parameter must be positive, got {mu}")));
    }
    let diff: Vec<f64> = v.iter().zip(c).map(|(a, b)| a - b).collect();
    let shrink = (norm2(&diff) / mu).max(1.0);
    Ok(v.iter().zip(&diff).map(|(vi, di)| vi - di / shrink).collect())
}

/// Proximal operator (unit parameter) of `x ↦ mu ‖max(−x, 0)‖₁`, i.e. the
/// componentwise median of `v + mu`, `0` and `v`.
pub fn prox_neg_hinge(v: &[f64], mu: f64) -> Result<Vec<f64>> {
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("prox parameter must be positive, got {mu}")));
    }
    Ok(v.iter()
        .map(|&vi| {
            if vi > 0.0 {
                vi
            } else if vi + mu < 0.0 {
                vi + mu
            } else {
                0.0
            }
        })
        .collect())
}

/// Convex combination `Σ αᵢ pᵢ` of prox outputs.
pub fn proximal_average<P: AsRef<[f64]>>(points: &[P], weights: &[ProxWeight]) -> Result<Vec<f64>> {
    if points.is_empty() || points.len() != weights.len() {
        return Err(Error::InvalidArgument(format!(
            "{} points but {} weights",
            points.len(),
            weights.len()
        )));
    }
    let total: f64 = weights.iter().map(|w| w.value()).sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::InvalidArgument(format!(
            "averaging weights sum to {total}, expected 1"
        )));
    }
    let dim = points[0].as_ref().len();
    let mut out = vec![0.0; dim];
    for (p, w) in points.iter().zip(weights) {
        let p = p.as_ref();
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                left: (dim, 1),
                right: (p.len(), 1),
                context: "proximal_average",
            });
        }
        for (o, &x) in out.iter_mut().zip(p) {
            *o += w.value() * x;
        }
    }
    Ok(out)
}
