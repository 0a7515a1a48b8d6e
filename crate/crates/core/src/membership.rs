//! Soft cluster membership.
//!
//! Each non-noise point gets two per-cluster signals: a distance signal
//! (λ of the smallest mutual-reachability distance to the cluster's
//! exemplars) and an outlier signal (a GLOSH-style score of that λ against
//! the cluster's death λ). Both go through a softmax, their product is
//! renormalized into a conditional distribution over clusters, and scaling
//! by the point's probability of belonging to any cluster gives the joint
//! membership.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::Document;
use crate::hierarchy::{ClusterSelection, CondensedTree, NOISE};
use crate::matrix::Matrix;
use crate::metric::{lambda_of, MutualReachabilityMatrix};

#[derive(Debug, Error, PartialEq)]
pub enum MembershipError {
    #[error("softmax of an empty vector")]
    EmptyVector,
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("no clusters were selected")]
    NoClusters,
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),
}

/// How the outlier signal enters the fused membership.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GloshSign {
    /// `softmax(1 − glosh)`: clusters the point is least outlying toward
    /// weigh most.
    #[default]
    Inverted,
    /// `softmax(glosh)` taken as written.
    Literal,
}

/// Density-peak points of each selected cluster, indexed like the
/// selection's clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExemplarSet {
    pub per_cluster: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipMatrix {
    /// `n × C`; non-noise rows lie on the simplex, noise rows are zero.
    pub conditional: Matrix,
    /// Probability of belonging to any cluster.
    pub p_any: Vec<f64>,
    /// `conditional` scaled row-wise by `p_any`.
    pub joint: Matrix,
}

impl MembershipMatrix {
    pub fn n_points(&self) -> usize {
        self.p_any.len()
    }

    pub fn n_clusters(&self) -> usize {
        self.joint.cols()
    }

    /// Cluster with the largest joint membership (lowest index on ties),
    /// or `None` for an all-zero row.
    pub fn argmax(&self, point: usize) -> Option<usize> {
        let row = self.joint.row(point);
        let mut best: Option<usize> = None;
        for (c, &v) in row.iter().enumerate() {
            if v > 0.0 && best.is_none_or(|b| v > row[b]) {
                best = Some(c);
            }
        }
        best
    }
}

pub fn softmax(v: &[f64]) -> Result<Vec<f64>, MembershipError> {
    let max = v
        .iter()
        .copied()
        .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))))
        .ok_or(MembershipError::EmptyVector)?;
    let exps: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// Points that persist to the death λ of a leaf below each selected cluster.
pub fn cluster_exemplars(
    tree: &CondensedTree,
    selection: &ClusterSelection,
) -> Result<ExemplarSet, MembershipError> {
    if selection.selected.is_empty() {
        return Err(MembershipError::NoClusters);
    }
    let per_cluster = selection
        .selected
        .iter()
        .map(|&c| {
            let leaves = tree.leaves_under(c);
            tree.points
                .iter()
                .enumerate()
                .filter(|(_, p)| {
                    leaves.binary_search(&p.cluster).is_ok()
                        && (tree.nodes[p.cluster].lambda_death - p.lambda).abs() <= 1e-12
                })
                .map(|(x, _)| x)
                .collect()
        })
        .collect();
    Ok(ExemplarSet { per_cluster })
}

/// λ of the smallest mutual-reachability distance from `x` to each
/// cluster's exemplars.
pub fn distance_membership(x: usize, exemplars: &ExemplarSet, m: &MutualReachabilityMatrix) -> Vec<f64> {
    let row = m.row(x);
    exemplars
        .per_cluster
        .iter()
        .map(|ex| {
            let d = ex.iter().map(|&e| row[e]).fold(f64::INFINITY, f64::min);
            lambda_of(d)
        })
        .collect()
}

/// Per-cluster outlier score of the λ values from [`distance_membership`]:
/// `(λ_death(c) − min(λ_c, λ_death(c))) / λ_death(c)`, or 1 when the
/// cluster's death λ is 0.
pub fn outlier_scores_from_lambdas(lambdas: &[f64], deaths: &[f64]) -> Vec<f64> {
    lambdas
        .iter()
        .zip(deaths)
        .map(|(&l, &death)| {
            if death > 0.0 {
                ((death - l.min(death)) / death).clamp(0.0, 1.0)
            } else {
                1.0
            }
        })
        .collect()
}

fn selected_deaths(tree: &CondensedTree, selection: &ClusterSelection) -> Vec<f64> {
    selection
        .selected
        .iter()
        .map(|&c| tree.nodes[c].lambda_death)
        .collect()
}

pub fn outlier_membership(
    x: usize,
    tree: &CondensedTree,
    selection: &ClusterSelection,
    exemplars: &ExemplarSet,
    m: &MutualReachabilityMatrix,
) -> Vec<f64> {
    let lambdas = distance_membership(x, exemplars, m);
    outlier_scores_from_lambdas(&lambdas, &selected_deaths(tree, selection))
}

/// `softmax(λ) ⊙ softmax(g)` renormalized, with `g = 1 − glosh` for
/// [`GloshSign::Inverted`] and `g = glosh` for [`GloshSign::Literal`].
pub fn fuse_membership(lambdas: &[f64], glosh: &[f64], sign: GloshSign) -> Result<Vec<f64>, MembershipError> {
    if lambdas.len() != glosh.len() {
        return Err(MembershipError::LengthMismatch(lambdas.len(), glosh.len()));
    }
    let g: Vec<f64> = match sign {
        GloshSign::Inverted => glosh.iter().map(|v| 1.0 - v).collect(),
        GloshSign::Literal => glosh.to_vec(),
    };
    let a = softmax(lambdas)?;
    let b = softmax(&g)?;
    let mut prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    let total: f64 = prod.iter().sum();
    for v in &mut prod {
        *v /= total;
    }
    Ok(prod)
}

pub fn joint_membership(conditional: &[f64], p_any: f64) -> Result<Vec<f64>, MembershipError> {
    if !(0.0..=1.0).contains(&p_any) {
        return Err(MembershipError::ProbabilityOutOfRange(p_any));
    }
    Ok(conditional.iter().map(|c| c * p_any).collect())
}

/// Membership for every point of a fitted hierarchy.
///
/// Hard-noise points get `p_any = 0` and all-zero rows; everyone else gets
/// `p_any` from the selection's probabilities.
pub fn membership_matrix(
    tree: &CondensedTree,
    selection: &ClusterSelection,
    exemplars: &ExemplarSet,
    m: &MutualReachabilityMatrix,
    sign: GloshSign,
) -> MembershipMatrix {
    let n = tree.points.len();
    let c = selection.n_clusters();
    let deaths = selected_deaths(tree, selection);
    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|x| {
            if selection.hard_labels[x] == NOISE || c == 0 {
                return (vec![0.0; c], 0.0);
            }
            let lambdas = distance_membership(x, exemplars, m);
            let glosh = outlier_scores_from_lambdas(&lambdas, &deaths);
            let cond = fuse_membership(&lambdas, &glosh, sign).expect("equal lengths, non-empty");
            (cond, selection.probabilities[x])
        })
        .collect();
    let mut conditional = Matrix::zeros(n, c);
    let mut joint = Matrix::zeros(n, c);
    let mut p_any = vec![0.0; n];
    for (x, (cond, p)) in rows.into_iter().enumerate() {
        p_any[x] = p;
        let j = joint_membership(&cond, p).expect("selection probabilities lie in [0, 1]");
        conditional.row_mut(x).copy_from_slice(&cond);
        joint.row_mut(x).copy_from_slice(&j);
    }
    MembershipMatrix {
        conditional,
        p_any,
        joint,
    }
}

/// A point ranked within its cluster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub point: usize,
    pub membership: f64,
}

/// Every point assigned (by joint argmax) to each cluster, sorted by
/// membership descending, then document id ascending.
pub fn ranked_members(membership: &MembershipMatrix, docs: &[Document]) -> Vec<Vec<Ranked>> {
    let mut out = vec![Vec::new(); membership.n_clusters()];
    for x in 0..membership.n_points() {
        if let Some(c) = membership.argmax(x) {
            out[c].push(Ranked {
                point: x,
                membership: membership.joint.get(x, c),
            });
        }
    }
    for list in &mut out {
        list.sort_by(|a, b| {
            b.membership
                .partial_cmp(&a.membership)
                .unwrap_or(Ordering::Equal)
                .then_with(|| docs[a.point].id.cmp(&docs[b.point].id))
        });
    }
    out
}

/// The `top_n` highest-membership members of each cluster.
pub fn representatives(membership: &MembershipMatrix, docs: &[Document], top_n: usize) -> Vec<Vec<Ranked>> {
    let mut lists = ranked_members(membership, docs);
    for l in &mut lists {
        l.truncate(top_n);
    }
    lists
}
