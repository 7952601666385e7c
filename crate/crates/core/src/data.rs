//! Synthetic problem generators and the experiment presets.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{seeded, SeededRng};

/// 4 x 4 ground-truth basis with rank 3 but nonnegative rank 4.
pub const Z: [[f64; 4]; 4] = [
    [1.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 1.0],
    [0.0, 1.0, 1.0, 0.0],
    [1.0, 0.0, 0.0, 1.0],
];

pub fn z_matrix() -> Matrix {
    Matrix::from_rows(&Z.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).expect("constant")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub dirichlet_alpha: f64,
    pub noise_scale: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_samples: 500,
            dirichlet_alpha: 0.05,
            noise_scale: 0.01,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidArgument("n_samples must be positive".into()));
        }
        if !(self.dirichlet_alpha > 0.0 && self.dirichlet_alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "dirichlet_alpha must be positive, got {}",
                self.dirichlet_alpha
            )));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise_scale must be nonnegative, got {}",
                self.noise_scale
            )));
        }
        Ok(())
    }
}

/// A generated problem with its ground truth.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub m: Matrix,
    pub w_true: Matrix,
    pub h_true: Matrix,
}

/// One draw from the symmetric Dirichlet(alpha, ..., alpha) on `k` atoms.
///
/// Works in log space, `log G = log G' + log(U) / alpha` with
/// `G' ~ Gamma(alpha + 1)`, so tiny shapes do not underflow every component
/// to zero.
pub fn sample_dirichlet(rng: &mut SeededRng, k: usize, alpha: f64) -> Vec<f64> {
    let gamma = Gamma::new(alpha + 1.0, 1.0).expect("alpha > 0");
    let logs: Vec<f64> = (0..k)
        .map(|_| {
            let g: f64 = gamma.sample(rng);
            let u: f64 = 1.0 - rng.random::<f64>();
            g.ln() + u.ln() / alpha
        })
        .collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

/// `M = max(Z H + noise_scale · G, 0)` with Dirichlet columns in `H` and
/// standard normal `G`.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Synthetic> {
    spec.validate()?;
    let mut rng = seeded(spec.seed);
    let n = spec.n_samples;
    let w_true = z_matrix();
    let mut h_true = Matrix::zeros(4, n);
    for j in 0..n {
        h_true.set_col(j, &sample_dirichlet(&mut rng, 4, spec.dirichlet_alpha));
    }
    let mut m = w_true.matmul(&h_true)?;
    if spec.noise_scale > 0.0 {
        for v in m.as_mut_slice() {
            let g: f64 = rng.sample(StandardNormal);
            *v = (*v + spec.noise_scale * g).max(0.0);
        }
    }
    Ok(Synthetic { m, w_true, h_true })
}

/// Rank-one data `w hᵀ` plus Gaussian noise whose standard deviation is
/// `noise_fraction` of the RMS entry, clipped at zero. `w` and `h` have
/// uniform `[0, 1)` entries.
pub fn gen_rank_one(m: usize, n: usize, noise_fraction: f64, seed: u64) -> Result<Synthetic> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("dimensions must be positive".into()));
    }
    let mut rng = seeded(seed);
    let w: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
    let h: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let w_true = Matrix::from_vec(m, 1, w.clone())?;
    let h_true = Matrix::from_vec(1, n, h.clone())?;
    let mut data = w_true.matmul(&h_true)?;
    let rms = crate::matrix::frobenius_norm(&data) / ((m * n) as f64).sqrt();
    for v in data.as_mut_slice() {
        let g: f64 = rng.sample(StandardNormal);
        *v = (*v + noise_fraction * rms * g).max(0.0);
    }
    Ok(Synthetic { m: data, w_true, h_true })
}

/// Swimmer-like toy: five one-hot parts, a torso present in every sample and
/// four limbs each switched on with probability 1/4. Columns of `H` are
/// normalized to sum to one.
pub fn gen_swimmer_toy(n: usize, seed: u64) -> Result<Synthetic> {
    const PARTS: usize = 5;
    const LIMB_PROB: f64 = 0.25;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let w_true = Matrix::identity(PARTS);
    let mut rng = seeded(seed);
    let mut h_true = Matrix::zeros(PARTS, n);
    for j in 0..n {
        let mut coef = [0.0; PARTS];
        coef[0] = 1.0;
        for c in coef.iter_mut().skip(1) {
            if rng.random::<f64>() < LIMB_PROB {
                *c = 1.0;
            }
        }
        let s: f64 = coef.iter().sum();
        for (p, c) in coef.iter().enumerate() {
            h_true.set(p, j, c / s);
        }
    }
    let data = w_true.matmul(&h_true)?;
    Ok(Synthetic { m: data, w_true, h_true })
}

/// Named solver settings for the reported experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPreset {
    pub name: &'static str,
    pub r: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub max_iter: usize,
}

pub const PRESETS: [ExperimentPreset; 7] = [
    ExperimentPreset { name: "exp1", r: 4, lambda: 1e-6, gamma: 10.0, max_iter: 1000 },
    ExperimentPreset { name: "exp2", r: 8, lambda: 1e-6, gamma: 1.5, max_iter: 1000 },
    ExperimentPreset { name: "swimmer", r: 50, lambda: 0.5, gamma: 10.0, max_iter: 1000 },
    ExperimentPreset { name: "jasper1", r: 64, lambda: 40000.0, gamma: 10000.0, max_iter: 2000 },
    ExperimentPreset { name: "jasper2", r: 100, lambda: 1000.0, gamma: 0.001, max_iter: 1000 },
    ExperimentPreset { name: "jasper3", r: 20, lambda: 1e6, gamma: 1e6, max_iter: 1000 },
    ExperimentPreset { name: "urban", r: 20, lambda: 1e6, gamma: 1e6, max_iter: 1000 },
];

pub fn preset(name: &str) -> Option<&'static ExperimentPreset> {
    PRESETS.iter().find(|p| p.name == name)
}

/// Flattens a `p x q x b` cube stored as `cube[(row * q + col) * b + band]`
/// into the `b x (p q)` matrix whose column `row * q + col` is that pixel's
/// spectrum.
pub fn cube_to_matrix(cube: &[f64], p: usize, q: usize, b: usize) -> Result<Matrix> {
    if cube.len() != p * q * b {
        return Err(Error::InvalidArgument(format!(
            "cube has {} values, expected {p} x {q} x {b}",
            cube.len()
        )));
    }
    let mut m = Matrix::zeros(b, p * q);
    for pixel in 0..p * q {
        for band in 0..b {
            m.set(band, pixel, cube[pixel * b + band]);
        }
    }
    m.check_finite()?;
    Ok(m)
}
