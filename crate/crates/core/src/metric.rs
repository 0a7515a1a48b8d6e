//! Pairwise distances, core distances, mutual reachability, and the
//! distance-to-density conversion `λ = 1/d`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;

/// Distances at or below this value map to the λ cap `1 / LAMBDA_EPSILON`.
pub const LAMBDA_EPSILON: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("k = {k} is out of range for {n} points (need 1 <= k <= n - 1)")]
    KOutOfRange { k: usize, n: usize },
    #[error("core distance vector has {found} entries, matrix has {expected} rows")]
    LengthMismatch { expected: usize, found: usize },
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricConfig {
    /// Neighbor rank used for core distances.
    pub k: usize,
    pub metric: Metric,
}

/// Symmetric `n × n` distance matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    values: Matrix,
}

impl DistanceMatrix {
    /// Wraps a square matrix. Symmetry and the zero diagonal are the
    /// caller's responsibility.
    pub fn from_matrix(values: Matrix) -> Self {
        assert_eq!(values.rows(), values.cols(), "distance matrix must be square");
        DistanceMatrix { values }
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

    pub fn as_matrix(&self) -> &Matrix {
        &self.values
    }
}

/// Mutual-reachability distances together with the core distances they
/// were built from.
#[derive(Debug, Clone, PartialEq)]
pub struct MutualReachabilityMatrix {
    values: Matrix,
    core: Vec<f64>,
}

impl MutualReachabilityMatrix {
    pub fn len(&self) -> usize {
        self.core.len()
    }

    pub fn is_empty(&self) -> bool {
        self.core.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values.get(i, j)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    pub fn core(&self) -> &[f64] {
        &self.core
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Euclidean distances between all rows of `points`.
///
/// Each unordered pair is evaluated once and mirrored, so the result is
/// exactly symmetric.
pub fn pairwise_distances(points: &Matrix, metric: Metric) -> Result<DistanceMatrix, MetricError> {
    let n = points.rows();
    if n < 2 {
        return Err(MetricError::TooFewPoints(n));
    }
    match metric {
        Metric::Euclidean => {}
    }
    let mut values = Matrix::zeros(n, n);
    values
        .as_mut_slice()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, row)| {
            let pi = points.row(i);
            for (j, cell) in row.iter_mut().enumerate().skip(i + 1) {
                *cell = euclidean(pi, points.row(j));
            }
        });
    for i in 0..n {
        for j in 0..i {
            let v = values.get(j, i);
            values.set(i, j, v);
        }
    }
    Ok(DistanceMatrix { values })
}

/// Distance from each point to its `k`-th nearest other point.
pub fn core_distances(distances: &DistanceMatrix, k: usize) -> Result<Vec<f64>, MetricError> {
    let n = distances.len();
    if k == 0 || k + 1 > n {
        return Err(MetricError::KOutOfRange { k, n });
    }
    Ok((0..n)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(n - 1),
            |others, i| {
                others.clear();
                others.extend(
                    distances
                        .row(i)
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, &d)| d),
                );
                let (_, kth, _) = others.select_nth_unstable_by(k - 1, f64::total_cmp);
                *kth
            },
        )
        .collect())
}

/// `max(core[i], core[j], d(i, j))` off the diagonal, zero on it.
pub fn mutual_reachability(
    distances: &DistanceMatrix,
    core: &[f64],
) -> Result<MutualReachabilityMatrix, MetricError> {
    let n = distances.len();
    if core.len() != n {
        return Err(MetricError::LengthMismatch {
            expected: n,
            found: core.len(),
        });
    }
    let mut values = Matrix::zeros(n, n);
    values
        .as_mut_slice()
        .par_chunks_mut(n.max(1))
        .enumerate()
        .for_each(|(i, row)| {
            let ci = core[i];
            for (j, cell) in row.iter_mut().enumerate() {
                if j != i {
                    *cell = distances.get(i, j).max(ci).max(core[j]);
                }
            }
        });
    Ok(MutualReachabilityMatrix {
        values,
        core: core.to_vec(),
    })
}

/// `1/d`, capped at `1/LAMBDA_EPSILON` for `d <= LAMBDA_EPSILON`.
pub fn lambda_of(d: f64) -> f64 {
    if d <= LAMBDA_EPSILON {
        1.0 / LAMBDA_EPSILON
    } else {
        1.0 / d
    }
}
