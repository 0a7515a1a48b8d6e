//! HDBSCAN hierarchy: minimum spanning tree over mutual-reachability
//! distances, single-linkage dendrogram, condensed tree, excess-of-mass
//! cluster selection, and GLOSH outlier scores.

mod condense;
mod linkage;
mod mst;
mod select;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use condense::{condense, ClusterNode, CondensedTree, PointRecord};
pub use linkage::{single_linkage, Dendrogram, Merge};
pub use mst::{build_mst, MstEdge};
pub use select::{select_clusters, stabilities, ClusterSelection};

use crate::metric::MutualReachabilityMatrix;

/// Hard label of a point that belongs to no selected cluster.
pub const NOISE: i32 = -1;

#[derive(Debug, Error, PartialEq)]
pub enum HierarchyError {
    #[error("min_cluster_size must be at least 2, got {0}")]
    MinClusterSizeTooSmall(usize),
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
}

/// Per-point GLOSH scores in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierScores {
    pub glosh: Vec<f64>,
}

/// Largest death λ in each node's subtree.
pub fn subtree_max_death(tree: &CondensedTree) -> Vec<f64> {
    let mut max_death: Vec<f64> = tree.nodes.iter().map(|c| c.lambda_death).collect();
    // Children have larger ids than parents.
    for c in (1..tree.nodes.len()).rev() {
        if let Some(p) = tree.nodes[c].parent {
            max_death[p] = max_death[p].max(max_death[c]);
        }
    }
    max_death
}

/// `(λ_max(x) − λ(x)) / λ_max(x)` with `λ_max(x)` the largest death λ in
/// the subtree of the cluster the point leaves from.
pub fn glosh_scores(tree: &CondensedTree) -> OutlierScores {
    let max_death = subtree_max_death(tree);
    let glosh = tree
        .points
        .iter()
        .map(|p| {
            let lmax = max_death[p.cluster];
            if lmax > 0.0 {
                ((lmax - p.lambda) / lmax).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    OutlierScores { glosh }
}

/// A fitted hierarchy and its flat clustering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hierarchy {
    pub tree: CondensedTree,
    pub selection: ClusterSelection,
    pub outliers: OutlierScores,
}

/// MST → single linkage → condense → select → GLOSH.
pub fn fit(m: &MutualReachabilityMatrix, min_cluster_size: usize) -> Result<Hierarchy, HierarchyError> {
    if m.len() < 2 {
        return Err(HierarchyError::TooFewPoints(m.len()));
    }
    let mst = build_mst(m);
    let dendrogram = single_linkage(&mst);
    let tree = condense(&dendrogram, min_cluster_size)?;
    let selection = select_clusters(&tree);
    let outliers = glosh_scores(&tree);
    Ok(Hierarchy {
        tree,
        selection,
        outliers,
    })
}

/// Writes one tab-separated line per node:
/// `node_id parent lambda_birth lambda_death size` (`-` for the root's parent).
pub fn write_tree_dump(tree: &CondensedTree, path: &Path) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "node_id\tparent\tlambda_birth\tlambda_death\tsize")?;
    for (id, node) in tree.nodes.iter().enumerate() {
        let parent = node.parent.map_or_else(|| "-".to_owned(), |p| p.to_string());
        writeln!(
            out,
            "{id}\t{parent}\t{}\t{}\t{}",
            node.lambda_birth, node.lambda_death, node.size
        )?;
    }
    out.flush()
}
