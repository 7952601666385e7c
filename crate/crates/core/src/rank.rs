//! Rank extraction from an overparameterized factorization.
//!
//! Columns of `W` that the sum-of-norms penalty has pulled together are
//! grouped by single linkage, low-energy groups are discarded, and each
//! surviving group contributes one representative column with the summed
//! rows of `H`. Also hosts the pair-counting identities used to reason about
//! how many penalty terms a clustering needs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dist2, frobenius_norm, norm2, Matrix};
use crate::objective::son21;

/// Default merging tolerance relative to the largest column norm.
pub const DEFAULT_TAU_FRACTION: f64 = 0.02;
/// Default relative-energy floor for a cluster to count toward the rank.
pub const DEFAULT_ENERGY_FLOOR: f64 = 0.01;
/// Default knee fraction for the greedy column selection.
pub const DEFAULT_KNEE_FRACTION: f64 = 0.05;

/// `DEFAULT_TAU_FRACTION · max_j ‖w_j‖₂`.
pub fn default_tau(w: &Matrix) -> f64 {
    DEFAULT_TAU_FRACTION * w.columns().iter().map(|c| norm2(c)).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// Cluster id of each column; ids are ordered by smallest member index.
    pub labels: Vec<usize>,
    pub sizes: Vec<usize>,
    /// Mean of the member columns.
    pub centers: Vec<Vec<f64>>,
    /// `Σ ‖w_j‖‖h^j‖` over members. Empty until `H` is known.
    pub energies: Vec<f64>,
}

impl ClusterAssignment {
    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == cluster)
            .map(|(j, _)| j)
            .collect()
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Single-linkage clustering: columns within `tau` of each other are joined
/// and clusters are the connected components.
pub fn cluster_columns(w: &Matrix, tau: f64) -> ClusterAssignment {
    let cols = w.columns();
    let r = cols.len();
    let mut parent: Vec<usize> = (0..r).collect();
    for i in 0..r {
        for j in (i + 1)..r {
            if dist2(&cols[i], &cols[j]) <= tau {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut root_label = vec![usize::MAX; r];
    let mut labels = vec![0; r];
    let mut sizes = Vec::new();
    for j in 0..r {
        let root = find(&mut parent, j);
        if root_label[root] == usize::MAX {
            root_label[root] = sizes.len();
            sizes.push(0);
        }
        labels[j] = root_label[root];
        sizes[labels[j]] += 1;
    }
    let mut centers = vec![vec![0.0; w.rows()]; sizes.len()];
    for (j, col) in cols.iter().enumerate() {
        for (c, v) in centers[labels[j]].iter_mut().zip(col) {
            *c += v;
        }
    }
    for (center, &size) in centers.iter_mut().zip(&sizes) {
        center.iter_mut().for_each(|c| *c /= size as f64);
    }
    ClusterAssignment {
        labels,
        sizes,
        centers,
        energies: Vec::new(),
    }
}

/// `‖w_j‖₂ ‖h^j‖₂ = ‖w_j h^j‖_F` for every component.
pub fn component_energies(w: &Matrix, h: &Matrix) -> Vec<f64> {
    (0..w.cols())
        .map(|j| norm2(&w.col(j)) * norm2(h.row(j)))
        .collect()
}

/// How a cluster is collapsed to one column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representative {
    /// Members averaged with component-energy weights.
    #[default]
    EnergyMean,
    /// Member minimizing the summed distance to the other members.
    Medoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub clusters: ClusterAssignment,
    pub estimated_rank: usize,
    /// Cluster ids kept in the reduced factorization, in label order.
    pub kept_clusters: Vec<usize>,
    pub relative_energies: Vec<f64>,
    pub reduced_w: Matrix,
    pub reduced_h: Matrix,
    pub greedy_scores: Vec<(usize, f64)>,
    pub greedy_knee: Option<usize>,
    pub energy_threshold_used: f64,
    /// Merging tolerance, when the clustering was done by [`extract_rank`].
    pub tau_used: Option<f64>,
    /// `‖W'H' − WH‖_F` of the reduced pair.
    pub reconstruction_error: f64,
    /// Triangle-inequality bound on `reconstruction_error`.
    pub reconstruction_bound: f64,
}

/// Collapses each significant cluster to a single column and sums the
/// matching rows of `H`.
pub fn reduce_factorization(
    w: &Matrix,
    h: &Matrix,
    clusters: &ClusterAssignment,
    energy_floor: f64,
    representative: Representative,
) -> Result<RankReport> {
    let r = w.cols();
    if h.rows() != r || clusters.labels.len() != r {
        return Err(Error::DimensionMismatch {
            left: w.shape(),
            right: h.shape(),
            context: "cluster assignment, W and H disagree on r",
        });
    }
    if !(energy_floor >= 0.0) {
        return Err(Error::InvalidArgument(format!("energy floor must be nonnegative, got {energy_floor}")));
    }
    let energy = component_energies(w, h);
    let total: f64 = energy.iter().sum();
    let k = clusters.len();
    let mut cluster_energy = vec![0.0; k];
    for (j, &l) in clusters.labels.iter().enumerate() {
        cluster_energy[l] += energy[j];
    }
    let relative: Vec<f64> = cluster_energy
        .iter()
        .map(|e| if total > 0.0 { e / total } else { 0.0 })
        .collect();
    let kept: Vec<usize> = (0..k).filter(|&c| total > 0.0 && relative[c] >= energy_floor).collect();
    if kept.is_empty() {
        return Err(Error::NoSignificantComponent);
    }

    let m = w.rows();
    let n = h.cols();
    let cols = w.columns();
    let mut reduced_w = Matrix::zeros(m, kept.len());
    let mut reduced_h = Matrix::zeros(kept.len(), n);
    let mut bound = 0.0;
    for (slot, &c) in kept.iter().enumerate() {
        let members = clusters.members(c);
        let rep = match representative {
            Representative::EnergyMean => {
                let weight: f64 = members.iter().map(|&j| energy[j]).sum();
                let mut rep = vec![0.0; m];
                for &j in &members {
                    let a = if weight > 0.0 { energy[j] / weight } else { 1.0 / members.len() as f64 };
                    for (x, v) in rep.iter_mut().zip(&cols[j]) {
                        *x += a * v;
                    }
                }
                rep
            }
            Representative::Medoid => {
                let best = members
                    .iter()
                    .copied()
                    .min_by(|&a, &b| {
                        let da: f64 = members.iter().map(|&o| dist2(&cols[a], &cols[o])).sum();
                        let db: f64 = members.iter().map(|&o| dist2(&cols[b], &cols[o])).sum();
                        da.total_cmp(&db)
                    })
                    .expect("clusters are nonempty");
                cols[best].clone()
            }
        };
        for &j in &members {
            bound += dist2(&cols[j], &rep) * norm2(h.row(j));
            for (acc, v) in reduced_h.row_mut(slot).iter_mut().zip(h.row(j)) {
                *acc += v;
            }
        }
        reduced_w.set_col(slot, &rep);
    }
    bound += (0..k).filter(|c| !kept.contains(c)).map(|c| cluster_energy[c]).sum::<f64>();

    let error = frobenius_norm(&reduced_w.matmul(&reduced_h)?.sub(&w.matmul(h)?)?);
    let (greedy_scores, greedy_knee) = greedy_selection(w, h, DEFAULT_KNEE_FRACTION);
    let mut clusters = clusters.clone();
    clusters.energies = cluster_energy;
    Ok(RankReport {
        clusters,
        estimated_rank: kept.len(),
        kept_clusters: kept,
        relative_energies: relative,
        reduced_w,
        reduced_h,
        greedy_scores,
        greedy_knee,
        energy_threshold_used: energy_floor,
        tau_used: None,
        reconstruction_error: error,
        reconstruction_bound: bound,
    })
}

/// Clusters at `tau` (default relative tolerance when `None`) and reduces.
pub fn extract_rank(w: &Matrix, h: &Matrix, tau: Option<f64>, energy_floor: f64) -> Result<RankReport> {
    let tau = tau.unwrap_or_else(|| default_tau(w));
    let clusters = cluster_columns(w, tau);
    let mut report = reduce_factorization(w, h, &clusters, energy_floor, Representative::EnergyMean)?;
    report.tau_used = Some(tau);
    Ok(report)
}

/// Greedy column ordering and its SON prefix scores.
///
/// The first pick is the highest-energy component. Each later pick maximizes
/// `e_j · d_j`, its energy times its distance to the nearest selected column.
/// `score(k)` is `son21` of the first `k` picks. The knee is the prefix size
/// before the first pick whose normalized gain `e_j d_j / (e_max · max‖w‖)`
/// drops below `knee_fraction`; `None` when every score is zero.
pub fn greedy_selection(w: &Matrix, h: &Matrix, knee_fraction: f64) -> (Vec<(usize, f64)>, Option<usize>) {
    let r = w.cols();
    let cols = w.columns();
    let energy = component_energies(w, h);
    let e_max = energy.iter().cloned().fold(0.0, f64::max);
    let scale = cols.iter().map(|c| norm2(c)).fold(0.0, f64::max);
    let mut order = Vec::with_capacity(r);
    let mut remaining: Vec<usize> = (0..r).collect();
    let mut knee = None;
    while !remaining.is_empty() {
        let (pos, gain) = remaining
            .iter()
            .enumerate()
            .map(|(p, &j)| {
                let novelty = if order.is_empty() {
                    1.0
                } else {
                    order.iter().map(|&s: &usize| dist2(&cols[j], &cols[s])).fold(f64::INFINITY, f64::min)
                };
                (p, energy[j] * novelty)
            })
            // ties resolve to the lowest column index
            .fold((usize::MAX, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !order.is_empty() && knee.is_none() {
            let normalized = if e_max > 0.0 && scale > 0.0 { gain / (e_max * scale) } else { 0.0 };
            if normalized < knee_fraction {
                knee = Some(order.len());
            }
        }
        order.push(remaining.remove(pos));
    }
    let scores: Vec<(usize, f64)> = (1..=r)
        .map(|k| {
            let prefix = Matrix::from_columns(&order[..k].iter().map(|&j| cols[j].clone()).collect::<Vec<_>>())
                .expect("prefix of finite columns");
            (k, son21(&prefix))
        })
        .collect();
    if scores.iter().all(|&(_, s)| s == 0.0) {
        return (scores, None);
    }
    (scores, knee.or(Some(r)))
}

/// Greedy prefix scores `(k, son21(prefix_k))`; see [`greedy_selection`].
pub fn greedy_score(w: &Matrix, h: &Matrix) -> Vec<(usize, f64)> {
    greedy_selection(w, h, DEFAULT_KNEE_FRACTION).0
}

/// Exact rational `numer / denom` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub numer: u64,
    pub denom: u64,
}

impl Rational {
    pub fn to_f64(self) -> f64 {
        self.numer as f64 / self.denom as f64
    }
}

impl std::fmt::Display for Rational {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.denom == 1 {
            write!(f, "{}", self.numer)
        } else {
            write!(f, "{}/{}", self.numer, self.denom)
        }
    }
}

fn check_ranks(r: u64, r_star: u64) -> Result<()> {
    if r_star == 0 || r == 0 {
        return Err(Error::InvalidArgument("ranks must be positive".into()));
    }
    if r_star > r {
        return Err(Error::InvalidArgument(format!("r_star = {r_star} exceeds r = {r}")));
    }
    Ok(())
}

/// Fewest pairwise terms that still separate `r_star` balanced clusters of
/// `r` columns: `r (r − ⌈r / r_star⌉) / 2`.
pub fn min_edges_lower_bound(r: u64, r_star: u64) -> Result<Rational> {
    check_ranks(r, r_star)?;
    let numer = r * (r - r.div_ceil(r_star));
    Ok(if numer % 2 == 0 {
        Rational { numer: numer / 2, denom: 1 }
    } else {
        Rational { numer, denom: 2 }
    })
}

/// Fraction of the `r (r − 1) / 2` pairwise terms that can be dropped:
/// `(⌈r / r_star⌉ − 1) / (r − 1)`.
pub fn reduction_factor(r: u64, r_star: u64) -> Result<f64> {
    check_ranks(r, r_star)?;
    if r == 1 {
        return Err(Error::InvalidArgument("reduction factor undefined for r = 1".into()));
    }
    Ok((r.div_ceil(r_star) - 1) as f64 / (r - 1) as f64)
}

/// `Σ_{i<j} |C_i| |C_j|`: the number of cross-cluster pairs.
pub fn son20_partition_value(sizes: &[u64]) -> Result<u64> {
    if sizes.iter().any(|&s| s == 0) {
        return Err(Error::InvalidArgument("cluster sizes must be positive".into()));
    }
    let total: u64 = sizes.iter().sum();
    let squares: u64 = sizes.iter().map(|s| s * s).sum();
    Ok((total * total - squares) / 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equal_columns_form_one_cluster() {
        let w = Matrix::from_columns(&vec![vec![0.5, 0.5]; 5]).unwrap();
        let c = cluster_columns(&w, 0.0);
        assert_eq!(c.sizes, vec![5]);
        assert_eq!(c.labels, vec![0; 5]);
    }

    #[test]
    fn distant_columns_stay_singletons() {
        let w = Matrix::from_columns(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]]).unwrap();
        let c = cluster_columns(&w, 0.5);
        assert_eq!(c.len(), 3);
        assert!(c.sizes.iter().all(|&s| s == 1));
    }

    #[test]
    fn single_linkage_chains() {
        let w = Matrix::from_rows(&[vec![0.0, 0.4, 0.8]]).unwrap();
        // connected-component oracle: 0–1 and 1–2 are edges, 0–2 is not
        let c = cluster_columns(&w, 0.5);
        assert_eq!(c.sizes, vec![3]);
        assert!((c.centers[0][0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn labels_ordered_by_first_member() {
        let w = Matrix::from_rows(&[vec![5.0, 0.0, 5.0, 9.0, 0.0]]).unwrap();
        let c = cluster_columns(&w, 0.0);
        assert_eq!(c.labels, vec![0, 1, 0, 2, 1]);
        assert_eq!(c.sizes, vec![2, 2, 1]);
    }

    #[test]
    fn k_distinct_columns_give_k_clusters() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let k = rng.random_range(1..6);
            let distinct: Vec<Vec<f64>> = (0..k).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
            let picks: Vec<Vec<f64>> = (0..10).map(|i| distinct[if i < k { i } else { rng.random_range(0..k) }].clone()).collect();
            let c = cluster_columns(&Matrix::from_columns(&picks).unwrap(), 0.0);
            assert_eq!(c.len(), k);
            assert_eq!(c.sizes.iter().sum::<usize>(), 10);
            assert!(c.sizes.iter().all(|&s| s >= 1));
            assert!(c.labels.iter().all(|&l| l < c.len()));
        }
    }

    #[test]
    fn singletons_reduce_to_the_input() {
        let w = Matrix::from_columns(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let h = Matrix::from_rows(&[vec![0.5, 0.2], vec![0.1, 0.9]]).unwrap();
        let rep = extract_rank(&w, &h, Some(0.0), 0.01).unwrap();
        assert_eq!(rep.estimated_rank, 2);
        assert_eq!(rep.reduced_w, w);
        assert_eq!(rep.reduced_h, h);
        assert_eq!(rep.reconstruction_error, 0.0);
    }

    #[test]
    fn duplicates_merge_with_summed_rows() {
        let wcol = vec![0.3, 0.6, 0.1];
        let w = Matrix::from_columns(&[wcol.clone(), wcol.clone()]).unwrap();
        let h = Matrix::from_rows(&[vec![0.2, 0.0, 0.4], vec![0.1, 0.5, 0.3]]).unwrap();
        let rep = extract_rank(&w, &h, Some(0.0), 0.01).unwrap();
        assert_eq!(rep.estimated_rank, 1);
        for (a, b) in rep.reduced_w.col(0).iter().zip(&wcol) {
            assert!((a - b).abs() < 1e-15);
        }
        let summed: Vec<f64> = (0..3).map(|k| h.get(0, k) + h.get(1, k)).collect();
        assert_eq!(rep.reduced_h.row(0), summed.as_slice());
        assert!(rep.reconstruction_error < 1e-15);
    }

    #[test]
    fn low_energy_clusters_are_dropped_and_bounded() {
        let w = Matrix::from_columns(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.01, 0.01]]).unwrap();
        let h = Matrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.4], vec![0.1, 0.1]]).unwrap();
        let rep = extract_rank(&w, &h, Some(0.0), 0.01).unwrap();
        assert_eq!(rep.estimated_rank, 2);
        assert_eq!(rep.clusters.len(), 3);
        assert!(rep.reconstruction_error <= rep.reconstruction_bound + 1e-12);
        let err = extract_rank(&w, &h, Some(0.0), 0.9).unwrap_err();
        assert!(matches!(err, Error::NoSignificantComponent));
    }

    #[test]
    fn reconstruction_within_bound_on_random_merges() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..200 {
            let w = Matrix::from_vec(3, 6, (0..18).map(|_| rng.random::<f64>()).collect()).unwrap();
            let h = Matrix::from_vec(6, 4, (0..24).map(|_| rng.random::<f64>()).collect()).unwrap();
            let tau = rng.random::<f64>() * 0.6;
            let floor = rng.random::<f64>() * 0.2;
            for rep_kind in [Representative::EnergyMean, Representative::Medoid] {
                let c = cluster_columns(&w, tau);
                if let Ok(rep) = reduce_factorization(&w, &h, &c, floor, rep_kind) {
                    assert!(rep.reconstruction_error <= rep.reconstruction_bound + 1e-12);
                    assert!(rep.estimated_rank <= rep.clusters.len());
                }
            }
        }
    }

    #[test]
    fn greedy_scores_for_identical_columns_are_zero() {
        let w = Matrix::from_columns(&vec![vec![1.0, 2.0]; 4]).unwrap();
        let h = Matrix::from_rows(&[vec![0.1], vec![0.2], vec![0.3], vec![0.4]]).unwrap();
        let (scores, knee) = greedy_selection(&w, &h, DEFAULT_KNEE_FRACTION);
        assert!(scores.iter().all(|&(_, s)| s == 0.0));
        assert_eq!(scores[0], (1, 0.0));
        assert_eq!(knee, None);
    }

    #[test]
    fn greedy_knee_stops_at_distinct_components() {
        let a = vec![1.0, 0.0, 0.0];
        let b = vec![0.0, 1.0, 0.0];
        let c = vec![0.0, 0.0, 1.0];
        let w = Matrix::from_columns(&[a.clone(), b.clone(), a.clone(), c, b, vec![0.001, 0.0, 0.0]]).unwrap();
        let h = Matrix::from_rows(&[vec![0.5; 4], vec![0.4; 4], vec![0.3; 4], vec![0.6; 4], vec![0.2; 4], vec![0.01; 4]]).unwrap();
        let (scores, knee) = greedy_selection(&w, &h, DEFAULT_KNEE_FRACTION);
        assert_eq!(knee, Some(3));
        assert_eq!(scores.len(), 6);
        assert!(scores.windows(2).all(|p| p[1].1 >= p[0].1));
    }

    #[test]
    fn min_edges_examples() {
        let k6 = min_edges_lower_bound(6, 6).unwrap();
        assert_eq!(k6, Rational { numer: 15, denom: 1 });
        assert_eq!(min_edges_lower_bound(1000, 25).unwrap(), Rational { numer: 480_000, denom: 1 });
        assert_eq!(min_edges_lower_bound(6, 3).unwrap().numer, 12);
        // 5 · (5 − 2) = 15 is odd
        assert_eq!(min_edges_lower_bound(5, 3).unwrap(), Rational { numer: 15, denom: 2 });
        assert!(min_edges_lower_bound(3, 4).is_err());
    }

    #[test]
    fn reduction_factor_examples() {
        assert_eq!(reduction_factor(7, 7).unwrap(), 0.0);
        assert!((reduction_factor(1000, 25).unwrap() - 39.0 / 999.0).abs() < 1e-15);
        assert!((reduction_factor(1_000_000, 3).unwrap() - 1.0 / 3.0).abs() < 1e-5);
        assert!(reduction_factor(1, 1).is_err());
    }

    #[test]
    fn bounds_hold_over_a_grid() {
        for r in 2..60u64 {
            for rs in 1..=r {
                let full = r * (r - 1) / 2;
                assert!(min_edges_lower_bound(r, rs).unwrap().to_f64() <= full as f64);
                let rf = reduction_factor(r, rs).unwrap();
                assert!((0.0..=1.0).contains(&rf));
                assert!(rf <= 1.0 / rs as f64 + 1.0 / (r - 1) as f64 + 1e-15);
            }
        }
    }

    #[test]
    fn partition_value_examples() {
        assert_eq!(son20_partition_value(&[1, 1, 3]).unwrap(), 7);
        assert_eq!(son20_partition_value(&[9]).unwrap(), 0);
        assert!(son20_partition_value(&[2, 0]).is_err());
    }
}
