//! Exact t-SNE into two dimensions.
//!
//! Gaussian input affinities are calibrated per point to a target
//! perplexity, symmetrized into a joint distribution `P`, and matched by a
//! Student-t (one degree of freedom) distribution `Q` over the 2-D layout
//! by gradient descent on `KL(P || Q)` with momentum, per-coordinate gains,
//! and early exaggeration.
//!
//! All cross-row sums are reduced sequentially in row order, so results do
//! not depend on the size of the rayon pool.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::metric::{pairwise_distances, DistanceMatrix, Metric, MetricError};
use crate::quadtree::QuadTree;
use crate::rng;

/// Floor applied to joint affinities and to `q` inside the KL sum.
pub const AFFINITY_FLOOR: f64 = 1e-12;
const ENTROPY_TOL_BITS: f64 = 1e-5;
const BISECTION_STEPS: usize = 50;
const MIN_GAIN: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum TsneError {
    #[error("t-SNE needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("affinity matrix is {p}x{p} but the layout has {y} rows")]
    ShapeMismatch { p: usize, y: usize },
    #[error("layout must have 2 columns, got {0}")]
    NotTwoDimensional(usize),
    #[error("optimization raised KL divergence from {initial} to {final_kl}")]
    KlIncreased { initial: f64, final_kl: f64 },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub early_exaggeration_factor: f64,
    pub early_exaggeration_iters: usize,
    pub learning_rate: f64,
    pub momentum_initial: f64,
    pub momentum_final: f64,
    /// Iteration at which momentum switches from initial to final.
    pub momentum_switch_iter: usize,
    /// Standard deviation of the Gaussian initial layout.
    pub init_std: f64,
    /// Barnes-Hut opening angle for the repulsive forces; `0` runs the
    /// exact O(n²) gradient.
    pub theta: f64,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            early_exaggeration_factor: 12.0,
            early_exaggeration_iters: 250,
            learning_rate: 200.0,
            momentum_initial: 0.5,
            momentum_final: 0.8,
            momentum_switch_iter: 250,
            init_std: 1e-4,
            theta: 0.0,
            seed: 0,
        }
    }
}

/// Symmetric joint input affinities `P` with a zero diagonal, summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    values: Matrix,
}

impl AffinityMatrix {
    /// Wraps a precomputed joint distribution.
    pub fn from_matrix(values: Matrix) -> Self {
        assert_eq!(values.rows(), values.cols(), "affinity matrix must be square");
        AffinityMatrix { values }
    }

    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values.get(i, j)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    pub fn total(&self) -> f64 {
        (0..self.len()).map(|i| self.row(i).iter().sum::<f64>()).sum()
    }
}

/// The 2-D layout plus the objective before and after optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub coords: Matrix,
    pub initial_kl: f64,
    pub final_kl: f64,
}

/// Perplexity actually used for `n` points: capped at `(n - 1) / 3`.
pub fn effective_perplexity(n: usize, perplexity: f64) -> f64 {
    let cap = n.saturating_sub(1) as f64 / 3.0;
    perplexity.min(cap)
}

/// Fills `out` with the conditional distribution `p_{j|i}` for squared
/// distances `sq` (entry `i` ignored) at precision `beta`; returns the
/// entropy in nats.
fn conditional_row(sq: &[f64], i: usize, beta: f64, out: &mut [f64]) -> f64 {
    let shift = sq
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &v)| v)
        .fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    let mut weighted = 0.0;
    for (j, (o, &s)) in out.iter_mut().zip(sq).enumerate() {
        if j == i {
            *o = 0.0;
            continue;
        }
        let e = s - shift;
        let w = (-beta * e).exp();
        *o = w;
        sum += w;
        weighted += e * w;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
    sum.ln() + beta * weighted / sum
}

/// Per-point conditional distributions `p_{j|i}` (rows sum to 1), with
/// each row's Gaussian precision found by bisection on the entropy.
pub fn conditional_affinities(distances: &DistanceMatrix, perplexity: f64) -> Matrix {
    let n = distances.len();
    let target = perplexity.ln();
    let tol = ENTROPY_TOL_BITS * std::f64::consts::LN_2;
    let mut cond = Matrix::zeros(n, n);
    cond.as_mut_slice()
        .par_chunks_mut(n.max(1))
        .enumerate()
        .for_each(|(i, out)| {
            let sq: Vec<f64> = distances.row(i).iter().map(|d| d * d).collect();
            let mut beta = 1.0;
            let mut lo = f64::NEG_INFINITY;
            let mut hi = f64::INFINITY;
            for _ in 0..BISECTION_STEPS {
                let h = conditional_row(&sq, i, beta, out);
                let diff = h - target;
                if diff.abs() < tol {
                    return;
                }
                if diff > 0.0 {
                    lo = beta;
                    beta = if hi.is_infinite() { beta * 2.0 } else { (beta + hi) / 2.0 };
                } else {
                    hi = beta;
                    beta = if lo.is_infinite() { beta / 2.0 } else { (beta + lo) / 2.0 };
                }
            }
            conditional_row(&sq, i, beta, out);
        });
    cond
}

/// Joint affinities `(p_{j|i} + p_{i|j}) / 2n`, floored and renormalized.
pub fn calibrate_affinities(distances: &DistanceMatrix, perplexity: f64) -> AffinityMatrix {
    let n = distances.len();
    let cond = conditional_affinities(distances, perplexity);
    let denom = 2.0 * n as f64;
    let mut joint = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let p = (cond.get(i, j) + cond.get(j, i)) / denom;
                joint.set(i, j, p.max(AFFINITY_FLOOR));
            }
        }
    }
    let total: f64 = (0..n).map(|i| joint.row(i).iter().sum::<f64>()).sum();
    for v in joint.as_mut_slice() {
        *v /= total;
    }
    AffinityMatrix { values: joint }
}

fn check_shapes(p: &AffinityMatrix, y: &Matrix) -> Result<(), TsneError> {
    if y.cols() != 2 {
        return Err(TsneError::NotTwoDimensional(y.cols()));
    }
    if p.len() != y.rows() {
        return Err(TsneError::ShapeMismatch {
            p: p.len(),
            y: y.rows(),
        });
    }
    Ok(())
}

#[inline]
fn kernel(y: &[f64], i: usize, j: usize) -> (f64, f64, f64) {
    let dx = y[2 * i] - y[2 * j];
    let dy = y[2 * i + 1] - y[2 * j + 1];
    (dx, dy, 1.0 / (1.0 + dx * dx + dy * dy))
}

/// Sum of the unnormalized Student-t kernel over ordered pairs `i != j`.
fn normalizer(y: &[f64], n: usize) -> f64 {
    let row_sums: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| kernel(y, i, j).2)
                .sum::<f64>()
        })
        .collect();
    row_sums.iter().sum()
}

fn kl_raw(p: &AffinityMatrix, y: &[f64]) -> f64 {
    let n = p.len();
    let z = normalizer(y, n);
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for (j, &pij) in p.row(i).iter().enumerate() {
                if j == i || pij <= 0.0 {
                    continue;
                }
                let q = (kernel(y, i, j).2 / z).max(AFFINITY_FLOOR);
                acc += pij * (pij / q).ln();
            }
            acc
        })
        .collect();
    rows.iter().sum::<f64>().max(0.0)
}

/// `KL(P || Q)` for the layout `y`, with `q` floored at [`AFFINITY_FLOOR`].
pub fn kl_divergence(p: &AffinityMatrix, y: &Matrix) -> Result<f64, TsneError> {
    check_shapes(p, y)?;
    Ok(kl_raw(p, y.as_slice()))
}

/// Exact gradient with `P` scaled by `exaggeration`, written into `grad`
/// (row-major `n × 2`).
fn exact_gradient(p: &AffinityMatrix, y: &[f64], exaggeration: f64, grad: &mut [f64]) {
    let n = p.len();
    // Per row: attractive x/y, repulsive x/y, and the row's kernel sum.
    let parts: Vec<[f64; 5]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let prow = p.row(i);
            let mut acc = [0.0; 5];
            for j in 0..n {
                if j == i {
                    continue;
                }
                let (dx, dy, w) = kernel(y, i, j);
                let pw = exaggeration * prow[j] * w;
                acc[0] += pw * dx;
                acc[1] += pw * dy;
                let ww = w * w;
                acc[2] += ww * dx;
                acc[3] += ww * dy;
                acc[4] += w;
            }
            acc
        })
        .collect();
    let z: f64 = parts.iter().map(|a| a[4]).sum();
    for (g, a) in grad.chunks_exact_mut(2).zip(&parts) {
        g[0] = 4.0 * (a[0] - a[2] / z);
        g[1] = 4.0 * (a[1] - a[3] / z);
    }
}

/// Exact O(n²) gradient of [`kl_divergence`] with respect to the layout.
pub fn gradient(p: &AffinityMatrix, y: &Matrix) -> Result<Matrix, TsneError> {
    check_shapes(p, y)?;
    let mut grad = Matrix::zeros(y.rows(), 2);
    exact_gradient(p, y.as_slice(), 1.0, grad.as_mut_slice());
    Ok(grad)
}

/// Gradient with Barnes-Hut repulsion: attractive forces over the
/// non-floored affinities, repulsive forces summarized by a quadtree.
fn barnes_hut_gradient(
    neighbors: &[Vec<(usize, f64)>],
    y: &[f64],
    exaggeration: f64,
    theta: f64,
    grad: &mut [f64],
) {
    let n = neighbors.len();
    let tree = QuadTree::build(y);
    let parts: Vec<[f64; 5]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = [0.0; 5];
            for &(j, pij) in &neighbors[i] {
                let (dx, dy, w) = kernel(y, i, j);
                let pw = exaggeration * pij * w;
                acc[0] += pw * dx;
                acc[1] += pw * dy;
            }
            let (fx, fy, z) = tree.repulsion(y[2 * i], y[2 * i + 1], theta);
            acc[2] = fx;
            acc[3] = fy;
            acc[4] = z;
            acc
        })
        .collect();
    let z: f64 = parts.iter().map(|a| a[4]).sum();
    for (g, a) in grad.chunks_exact_mut(2).zip(&parts) {
        g[0] = 4.0 * (a[0] - a[2] / z);
        g[1] = 4.0 * (a[1] - a[3] / z);
    }
}

fn center(y: &mut [f64]) {
    let n = (y.len() / 2) as f64;
    let (mut mx, mut my) = (0.0, 0.0);
    for p in y.chunks_exact(2) {
        mx += p[0];
        my += p[1];
    }
    mx /= n;
    my /= n;
    for p in y.chunks_exact_mut(2) {
        p[0] -= mx;
        p[1] -= my;
    }
}

fn initial_layout(n: usize, cfg: &TsneConfig) -> Vec<f64> {
    let mut rng = rng::seeded(cfg.seed);
    let normal = Normal::new(0.0, cfg.init_std).expect("init_std must be positive and finite");
    (0..2 * n).map(|_| normal.sample(&mut rng)).collect()
}

/// Runs t-SNE from precomputed joint affinities.
pub fn optimize(p: &AffinityMatrix, cfg: &TsneConfig) -> Result<Projection, TsneError> {
    let n = p.len();
    if n < 2 {
        return Err(TsneError::TooFewPoints(n));
    }
    let mut y = initial_layout(n, cfg);
    center(&mut y);
    let initial_kl = kl_raw(p, &y);

    // Sparse view of P for the Barnes-Hut path: floored entries carry no
    // attraction worth computing.
    let neighbors: Vec<Vec<(usize, f64)>> = if cfg.theta > 0.0 {
        (0..n)
            .map(|i| {
                p.row(i)
                    .iter()
                    .enumerate()
                    .filter(|&(j, &v)| j != i && v > AFFINITY_FLOOR * 10.0)
                    .map(|(j, &v)| (j, v))
                    .collect()
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut grad = vec![0.0; 2 * n];
    let mut update = vec![0.0; 2 * n];
    let mut gains = vec![1.0; 2 * n];
    for iter in 0..cfg.iterations {
        let exaggeration = if iter < cfg.early_exaggeration_iters {
            cfg.early_exaggeration_factor
        } else {
            1.0
        };
        let momentum = if iter < cfg.momentum_switch_iter {
            cfg.momentum_initial
        } else {
            cfg.momentum_final
        };
        if cfg.theta > 0.0 {
            barnes_hut_gradient(&neighbors, &y, exaggeration, cfg.theta, &mut grad);
        } else {
            exact_gradient(p, &y, exaggeration, &mut grad);
        }
        for k in 0..2 * n {
            let g = grad[k];
            gains[k] = if (g > 0.0) != (update[k] > 0.0) {
                gains[k] + 0.2
            } else {
                gains[k] * 0.8
            };
            if gains[k] < MIN_GAIN {
                gains[k] = MIN_GAIN;
            }
            // The step drops the gradient's constant factor 4, so the
            // learning rate has the reference implementation's scale.
            update[k] = momentum * update[k] - cfg.learning_rate * gains[k] * g / 4.0;
            y[k] += update[k];
        }
        center(&mut y);
        if log::log_enabled!(log::Level::Debug) && (iter + 1) % 250 == 0 {
            log::debug!("t-SNE iteration {}: KL {:.6}", iter + 1, kl_raw(p, &y));
        }
    }
    let final_kl = kl_raw(p, &y);
    if final_kl > initial_kl {
        return Err(TsneError::KlIncreased {
            initial: initial_kl,
            final_kl,
        });
    }
    Ok(Projection {
        coords: Matrix::from_vec(n, 2, y),
        initial_kl,
        final_kl,
    })
}

/// Projects the rows of `points` to 2-D.
pub fn project(points: &Matrix, cfg: &TsneConfig) -> Result<Projection, TsneError> {
    let n = points.rows();
    if n < 2 {
        return Err(TsneError::TooFewPoints(n));
    }
    let distances = pairwise_distances(points, Metric::Euclidean)?;
    let p = calibrate_affinities(&distances, effective_perplexity(n, cfg.perplexity));
    optimize(&p, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_points(n: usize, d: usize, seed: u64) -> Matrix {
        let mut r = rng::seeded(seed);
        Matrix::from_vec(n, d, (0..n * d).map(|_| r.random_range(-3.0..3.0)).collect())
    }

    fn affinities(points: &Matrix, perplexity: f64) -> AffinityMatrix {
        let d = pairwise_distances(points, Metric::Euclidean).unwrap();
        calibrate_affinities(&d, perplexity)
    }

    /// Independent double-loop KL: explicit Q matrix, then the sum.
    fn kl_oracle(p: &AffinityMatrix, y: &Matrix) -> f64 {
        let n = p.len();
        let mut w = vec![vec![0.0; n]; n];
        let mut z = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let d2: f64 = (0..2).map(|c| (y.get(i, c) - y.get(j, c)).powi(2)).sum();
                    w[i][j] = (1.0 + d2).powi(-1);
                    z += w[i][j];
                }
            }
        }
        let mut kl = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let q = (w[i][j] / z).max(1e-12);
                    kl += p.get(i, j) * (p.get(i, j).ln() - q.ln());
                }
            }
        }
        kl
    }

    #[test]
    fn two_points_share_all_mass() {
        let pts = Matrix::from_rows(&[[0.0, 1.0], [2.0, 5.0]]);
        let p = affinities(&pts, effective_perplexity(2, 30.0));
        assert_eq!(p.get(0, 1), 0.5);
        assert_eq!(p.get(1, 0), 0.5);
        assert_eq!(p.get(0, 0), 0.0);
    }

    #[test]
    fn conditional_rows_are_distributions_with_target_entropy() {
        let pts = random_points(40, 5, 3);
        let d = pairwise_distances(&pts, Metric::Euclidean).unwrap();
        let perp = 8.0;
        let cond = conditional_affinities(&d, perp);
        for i in 0..40 {
            let row = cond.row(i);
            assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            let h_bits: f64 = row
                .iter()
                .filter(|&&v| v > 0.0)
                .map(|&v| -v * v.log2())
                .sum();
            assert!((h_bits - perp.log2()).abs() <= 1e-5, "row {i}: {h_bits}");
        }
    }

    #[test]
    fn joint_affinity_invariants() {
        let pts = random_points(30, 4, 11);
        let p = affinities(&pts, 5.0);
        assert!((p.total() - 1.0).abs() <= 1e-9);
        for i in 0..30 {
            assert_eq!(p.get(i, i), 0.0);
            for j in 0..30 {
                assert_eq!(p.get(i, j), p.get(j, i));
                if i != j {
                    assert!(p.get(i, j) >= 1e-12 * 0.999);
                }
            }
        }
    }

    #[test]
    fn equilateral_triangle_is_uniform() {
        let h = 3f64.sqrt() / 2.0;
        let pts = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.5, h]]);
        let p = affinities(&pts, 2.0);
        let v = p.get(0, 1);
        for (i, j) in [(0, 2), (1, 2), (1, 0), (2, 0), (2, 1)] {
            assert!((p.get(i, j) - v).abs() <= 1e-12);
        }
    }

    #[test]
    fn kl_of_matching_distributions_is_zero() {
        let pts = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0]]);
        let p = affinities(&pts, 1.0);
        let y = Matrix::from_rows(&[[3.0, -2.0], [0.5, 7.0]]);
        assert!(kl_divergence(&p, &y).unwrap().abs() <= 1e-9);
    }

    #[test]
    fn kl_matches_direct_summation() {
        let pts = random_points(10, 6, 5);
        let p = affinities(&pts, 3.0);
        let y = random_points(10, 2, 6);
        let fast = kl_divergence(&p, &y).unwrap();
        let slow = kl_oracle(&p, &y);
        assert!(fast >= 0.0);
        assert!((fast - slow).abs() <= 1e-10, "{fast} vs {slow}");
    }

    #[test]
    fn gradient_matches_central_differences() {
        let pts = random_points(10, 5, 21);
        let p = affinities(&pts, 3.0);
        let y = random_points(10, 2, 22);
        let g = gradient(&p, &y).unwrap();
        let h = 1e-5;
        for i in 0..10 {
            for c in 0..2 {
                let mut plus = y.clone();
                plus.set(i, c, y.get(i, c) + h);
                let mut minus = y.clone();
                minus.set(i, c, y.get(i, c) - h);
                let fd = (kl_oracle(&p, &plus) - kl_oracle(&p, &minus)) / (2.0 * h);
                let rel = (g.get(i, c) - fd).abs() / fd.abs().max(g.get(i, c).abs()).max(1e-8);
                assert!(rel <= 1e-4, "({i},{c}): {} vs {fd}", g.get(i, c));
            }
        }
    }

    #[test]
    fn gradient_is_translation_invariant() {
        let pts = random_points(12, 3, 1);
        let p = affinities(&pts, 3.0);
        let y = random_points(12, 2, 2);
        let mut shifted = y.clone();
        for i in 0..12 {
            shifted.set(i, 0, y.get(i, 0) + 4.25);
            shifted.set(i, 1, y.get(i, 1) - 1.5);
        }
        let a = gradient(&p, &y).unwrap();
        let b = gradient(&p, &shifted).unwrap();
        for (u, v) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((u - v).abs() <= 1e-9);
        }
    }

    #[test]
    fn optimizer_reaches_a_stationary_point() {
        let pts = random_points(10, 4, 8);
        let cfg = TsneConfig {
            perplexity: 3.0,
            iterations: 3000,
            seed: 4,
            ..TsneConfig::default()
        };
        let proj = project(&pts, &cfg).unwrap();
        let p = affinities(&pts, effective_perplexity(10, 3.0));
        let g = gradient(&p, &proj.coords).unwrap();
        let norm = g.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 1e-3, "gradient norm {norm}");
        assert!(proj.final_kl <= proj.initial_kl);
    }

    #[test]
    fn two_points_end_symmetric_about_origin() {
        let pts = Matrix::from_rows(&[[0.0, 0.0, 1.0], [4.0, 1.0, 0.0]]);
        let proj = project(&pts, &TsneConfig { seed: 9, ..TsneConfig::default() }).unwrap();
        let c = &proj.coords;
        assert!((c.get(0, 0) + c.get(1, 0)).abs() <= 1e-12);
        assert!((c.get(0, 1) + c.get(1, 1)).abs() <= 1e-12);
    }

    #[test]
    fn projection_is_reproducible_and_centered() {
        let pts = random_points(25, 6, 13);
        let cfg = TsneConfig {
            seed: 77,
            ..TsneConfig::default()
        };
        let a = project(&pts, &cfg).unwrap();
        let b = project(&pts, &cfg).unwrap();
        assert_eq!(a, b);
        for m in a.coords.column_means() {
            assert!(m.abs() <= 1e-6);
        }
        assert!(a.coords.as_slice().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn barnes_hut_lowers_kl() {
        let pts = random_points(60, 5, 17);
        let cfg = TsneConfig {
            perplexity: 10.0,
            iterations: 400,
            theta: 0.5,
            seed: 3,
            ..TsneConfig::default()
        };
        let proj = project(&pts, &cfg).unwrap();
        assert!(proj.final_kl < proj.initial_kl);
    }

    #[test]
    fn shape_errors() {
        let p = AffinityMatrix::from_matrix(Matrix::zeros(3, 3));
        assert_eq!(
            kl_divergence(&p, &Matrix::zeros(2, 2)),
            Err(TsneError::ShapeMismatch { p: 3, y: 2 })
        );
        assert_eq!(
            gradient(&p, &Matrix::zeros(3, 3)).unwrap_err(),
            TsneError::NotTwoDimensional(3)
        );
        assert_eq!(
            project(&Matrix::zeros(1, 4), &TsneConfig::default()).unwrap_err(),
            TsneError::TooFewPoints(1)
        );
    }
}
