use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::linkage::Dendrogram;
use super::HierarchyError;
use crate::metric::lambda_of;

/// A cluster of the condensed tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterNode {
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub lambda_birth: f64,
    /// Largest λ at which anything leaves the cluster: the split λ for an
    /// internal node, the last point departure for a leaf.
    pub lambda_death: f64,
    /// Number of points alive at birth.
    pub size: usize,
}

/// Where a point leaves the hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub cluster: usize,
    pub lambda: f64,
}

/// Single-linkage hierarchy reduced to splits whose two sides both reach
/// `min_cluster_size`. Node 0 is the root; a child's id is always larger
/// than its parent's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensedTree {
    pub nodes: Vec<ClusterNode>,
    pub points: Vec<PointRecord>,
    pub min_cluster_size: usize,
}

impl CondensedTree {
    pub fn is_leaf(&self, node: usize) -> bool {
        self.nodes[node].children.is_empty()
    }

    pub fn leaf_count(&self) -> usize {
        (0..self.nodes.len()).filter(|&c| self.is_leaf(c)).count()
    }

    /// `node` and all of its descendants, in ascending id order.
    pub fn subtree(&self, node: usize) -> Vec<usize> {
        let mut out = vec![node];
        let mut i = 0;
        while i < out.len() {
            out.extend_from_slice(&self.nodes[out[i]].children);
            i += 1;
        }
        out.sort_unstable();
        out
    }

    pub fn leaves_under(&self, node: usize) -> Vec<usize> {
        self.subtree(node)
            .into_iter()
            .filter(|&c| self.is_leaf(c))
            .collect()
    }

    /// True when `ancestor` is `node` or lies on its path to the root.
    pub fn is_ancestor(&self, ancestor: usize, mut node: usize) -> bool {
        loop {
            if node == ancestor {
                return true;
            }
            match self.nodes[node].parent {
                Some(p) => node = p,
                None => return false,
            }
        }
    }
}

fn push_node(nodes: &mut Vec<ClusterNode>, parent: usize, lambda: f64, size: usize) -> usize {
    let id = nodes.len();
    nodes.push(ClusterNode {
        parent: Some(parent),
        children: Vec::new(),
        lambda_birth: lambda,
        lambda_death: lambda,
        size,
    });
    nodes[parent].children.push(id);
    id
}

/// Collects the points under a dendrogram node.
fn leaves_of(dendrogram: &Dendrogram, node: usize, out: &mut Vec<usize>) {
    let mut stack = vec![node];
    while let Some(v) = stack.pop() {
        match dendrogram.merge_of(v) {
            None => out.push(v),
            Some(m) => {
                stack.push(m.right);
                stack.push(m.left);
            }
        }
    }
}

/// Walks the dendrogram top-down (breadth first) at `λ = 1/height`.
///
/// A merge whose two sides both hold at least `min_cluster_size` points
/// becomes a split into two new clusters. Otherwise the undersized side's
/// points fall out of the current cluster at that λ and the other side (if
/// large enough) continues as the same cluster.
pub fn condense(dendrogram: &Dendrogram, min_cluster_size: usize) -> Result<CondensedTree, HierarchyError> {
    if min_cluster_size < 2 {
        return Err(HierarchyError::MinClusterSizeTooSmall(min_cluster_size));
    }
    let n = dendrogram.n_points;
    if n < 2 {
        return Err(HierarchyError::TooFewPoints(n));
    }
    let root = dendrogram.root();
    let mut nodes = vec![ClusterNode {
        parent: None,
        children: Vec::new(),
        lambda_birth: 0.0,
        lambda_death: 0.0,
        size: n,
    }];
    let mut points = vec![
        PointRecord {
            cluster: 0,
            lambda: 0.0,
        };
        n
    ];
    let mut label = vec![usize::MAX; root + 1];
    label[root] = 0;
    let mut fallen = Vec::new();

    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        // Only merges are queued: anything passing the size test has at
        // least two points.
        let Some(merge) = dendrogram.merge_of(v) else {
            continue;
        };
        let cluster = label[v];
        let lambda = lambda_of(merge.height);
        let (left, right) = (merge.left, merge.right);
        let big_left = dendrogram.size_of(left) >= min_cluster_size;
        let big_right = dendrogram.size_of(right) >= min_cluster_size;
        match (big_left, big_right) {
            (true, true) => {
                for child in [left, right] {
                    label[child] =
                        push_node(&mut nodes, cluster, lambda, dendrogram.size_of(child));
                    queue.push_back(child);
                }
                let death = &mut nodes[cluster].lambda_death;
                *death = death.max(lambda);
            }
            (false, false) => {
                fallen.clear();
                leaves_of(dendrogram, left, &mut fallen);
                leaves_of(dendrogram, right, &mut fallen);
                for &p in &fallen {
                    points[p] = PointRecord { cluster, lambda };
                }
                let death = &mut nodes[cluster].lambda_death;
                *death = death.max(lambda);
            }
            (left_is_big, _) => {
                let (small, big) = if left_is_big { (right, left) } else { (left, right) };
                fallen.clear();
                leaves_of(dendrogram, small, &mut fallen);
                for &p in &fallen {
                    points[p] = PointRecord { cluster, lambda };
                }
                let death = &mut nodes[cluster].lambda_death;
                *death = death.max(lambda);
                label[big] = cluster;
                queue.push_back(big);
            }
        }
    }
    Ok(CondensedTree {
        nodes,
        points,
        min_cluster_size,
    })
}

#[cfg(test)]
mod tests {
    use super::super::linkage::{single_linkage, Merge};
    use super::super::mst::MstEdge;
    use super::*;

    fn pairs_dendrogram() -> Dendrogram {
        single_linkage(&[
            MstEdge { a: 0, b: 1, weight: 0.1 },
            MstEdge { a: 1, b: 2, weight: 10.0 },
            MstEdge { a: 2, b: 3, weight: 0.1 },
        ])
    }

    #[test]
    fn two_tight_pairs_split_into_two_leaves() {
        let tree = condense(&pairs_dendrogram(), 2).unwrap();
        assert_eq!(tree.nodes.len(), 3);
        assert_eq!(tree.nodes[0].children, vec![1, 2]);
        assert_eq!(tree.leaf_count(), 2);
        for c in [1, 2] {
            assert_eq!(tree.nodes[c].lambda_birth, 0.1);
            assert_eq!(tree.nodes[c].lambda_death, 10.0);
            assert_eq!(tree.nodes[c].size, 2);
        }
        assert_eq!(tree.points[0], PointRecord { cluster: 1, lambda: 10.0 });
        assert_eq!(tree.points[3].cluster, 2);
    }

    #[test]
    fn oversized_minimum_leaves_only_the_root() {
        let tree = condense(&pairs_dendrogram(), 5).unwrap();
        assert_eq!(tree.nodes.len(), 1);
        assert!(tree.points.iter().all(|p| p.cluster == 0));
        // The pairs shed their points at the top merge.
        assert!(tree.points.iter().all(|p| p.lambda == 0.1));
    }

    #[test]
    fn undersized_side_falls_out_and_big_side_continues() {
        // Chain: 0-1-2 tight, 3 far away.
        let d = Dendrogram {
            n_points: 4,
            merges: vec![
                Merge { left: 0, right: 1, height: 1.0, size: 2 },
                Merge { left: 4, right: 2, height: 2.0, size: 3 },
                Merge { left: 5, right: 3, height: 8.0, size: 4 },
            ],
        };
        let tree = condense(&d, 2).unwrap();
        assert_eq!(tree.nodes.len(), 1);
        assert_eq!(tree.points[3], PointRecord { cluster: 0, lambda: 0.125 });
        assert_eq!(tree.points[2], PointRecord { cluster: 0, lambda: 0.5 });
        assert_eq!(tree.points[0], PointRecord { cluster: 0, lambda: 1.0 });
        assert_eq!(tree.nodes[0].lambda_death, 1.0);
    }

    #[test]
    fn rejects_tiny_min_cluster_size() {
        assert!(matches!(
            condense(&pairs_dendrogram(), 1),
            Err(HierarchyError::MinClusterSizeTooSmall(1))
        ));
    }
}
