use serde::{Deserialize, Serialize};

use super::condense::CondensedTree;
use super::NOISE;

/// Flat clustering extracted from a condensed tree.
///
/// Cluster index `k` refers to condensed-tree node `selected[k]`; the
/// per-cluster vectors are indexed the same way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSelection {
    pub selected: Vec<usize>,
    pub hard_labels: Vec<i32>,
    pub probabilities: Vec<f64>,
    pub stabilities: Vec<f64>,
    pub persistence: Vec<f64>,
}

impl ClusterSelection {
    pub fn n_clusters(&self) -> usize {
        self.selected.len()
    }

    /// Mean persistence over the selected clusters; `None` when nothing
    /// was selected.
    pub fn mean_persistence(&self) -> Option<f64> {
        if self.persistence.is_empty() {
            None
        } else {
            Some(self.persistence.iter().sum::<f64>() / self.persistence.len() as f64)
        }
    }

    pub fn label_of(&self, point: usize) -> Option<usize> {
        let l = self.hard_labels[point];
        (l != NOISE).then_some(l as usize)
    }
}

/// Excess of mass for every node:
/// `Σ_{x ∈ c} (min(λ(x), λ_death(c)) − λ_birth(c))`.
///
/// Points below a split all leave at λ ≥ the split λ (the parent's death),
/// so a child cluster contributes `(λ_birth(child) − λ_birth(c)) · size`.
pub fn stabilities(tree: &CondensedTree) -> Vec<f64> {
    let mut stab = vec![0.0; tree.nodes.len()];
    for p in &tree.points {
        let node = &tree.nodes[p.cluster];
        stab[p.cluster] += p.lambda.min(node.lambda_death) - node.lambda_birth;
    }
    for (c, node) in tree.nodes.iter().enumerate() {
        for &ch in &node.children {
            let child = &tree.nodes[ch];
            stab[c] += (child.lambda_birth - node.lambda_birth) * child.size as f64;
        }
    }
    stab
}

/// Excess-of-mass cluster selection.
///
/// Children are visited before parents. A leaf starts selected; an internal
/// node replaces its descendants only when its own stability strictly
/// exceeds theirs, so ties go to the deeper clusters. The root is never
/// selected.
pub fn select_clusters(tree: &CondensedTree) -> ClusterSelection {
    let m = tree.nodes.len();
    let stab = stabilities(tree);
    let mut keep = vec![false; m];
    let mut propagated = vec![0.0; m];
    for c in (1..m).rev() {
        let below: f64 = tree.nodes[c].children.iter().map(|&ch| propagated[ch]).sum();
        if tree.is_leaf(c) || stab[c] > below {
            keep[c] = true;
            propagated[c] = stab[c];
        } else {
            propagated[c] = below;
        }
    }

    // Top-down: the first kept node on each root path wins.
    let mut selected = Vec::new();
    let mut stack: Vec<usize> = tree.nodes[0].children.iter().rev().copied().collect();
    while let Some(c) = stack.pop() {
        if keep[c] {
            selected.push(c);
        } else {
            stack.extend(tree.nodes[c].children.iter().rev());
        }
    }
    selected.sort_unstable();

    let mut index_of = vec![NOISE; m];
    for (k, &c) in selected.iter().enumerate() {
        index_of[c] = k as i32;
    }
    let n = tree.points.len();
    let mut hard_labels = vec![NOISE; n];
    let mut probabilities = vec![0.0; n];
    for (x, rec) in tree.points.iter().enumerate() {
        let mut c = rec.cluster;
        loop {
            if index_of[c] != NOISE {
                hard_labels[x] = index_of[c];
                let death = tree.nodes[c].lambda_death;
                probabilities[x] = if death > 0.0 {
                    (rec.lambda / death).clamp(0.0, 1.0)
                } else {
                    1.0
                };
                break;
            }
            match tree.nodes[c].parent {
                Some(p) => c = p,
                None => break,
            }
        }
    }

    let persistence = selected
        .iter()
        .map(|&c| {
            let node = &tree.nodes[c];
            let span = node.lambda_death - node.lambda_birth;
            if span > 0.0 {
                (stab[c] / (node.size as f64 * span)).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();

    ClusterSelection {
        stabilities: selected.iter().map(|&c| stab[c]).collect(),
        selected,
        hard_labels,
        probabilities,
        persistence,
    }
}

#[cfg(test)]
mod tests {
    use super::super::condense::{condense, ClusterNode, PointRecord};
    use super::super::linkage::single_linkage;
    use super::super::mst::MstEdge;
    use super::*;

    fn node(parent: Option<usize>, children: Vec<usize>, birth: f64, death: f64, size: usize) -> ClusterNode {
        ClusterNode {
            parent,
            children,
            lambda_birth: birth,
            lambda_death: death,
            size,
        }
    }

    fn rec(cluster: usize, lambda: f64) -> PointRecord {
        PointRecord { cluster, lambda }
    }

    #[test]
    fn two_tight_pairs_select_both() {
        let d = single_linkage(&[
            MstEdge { a: 0, b: 1, weight: 0.1 },
            MstEdge { a: 1, b: 2, weight: 10.0 },
            MstEdge { a: 2, b: 3, weight: 0.1 },
        ]);
        let sel = select_clusters(&condense(&d, 2).unwrap());
        assert_eq!(sel.selected, vec![1, 2]);
        assert_eq!(sel.hard_labels, vec![0, 0, 1, 1]);
        assert_eq!(sel.probabilities, vec![1.0; 4]);
        // Both points survive the whole span: persistence 1.
        assert_eq!(sel.persistence, vec![1.0, 1.0]);
    }

    /// Root with one split; the left child splits again.
    fn nested_tree(left_points: &[f64]) -> CondensedTree {
        let mut points = vec![rec(0, 0.5)];
        points.extend(left_points.iter().map(|&l| rec(1, l)));
        points.extend([rec(3, 4.0), rec(3, 4.0)]);
        points.extend([rec(4, 4.0), rec(4, 4.0)]);
        points.extend([rec(2, 2.0), rec(2, 3.0)]);
        CondensedTree {
            nodes: vec![
                node(None, vec![1, 2], 0.0, 1.0, 9 + left_points.len()),
                node(Some(0), vec![3, 4], 1.0, 2.0, 4 + left_points.len()),
                node(Some(0), vec![], 1.0, 3.0, 2),
                node(Some(1), vec![], 2.0, 4.0, 2),
                node(Some(1), vec![], 2.0, 4.0, 2),
            ],
            points,
            min_cluster_size: 2,
        }
    }

    #[test]
    fn stability_matches_direct_sum_over_members() {
        let tree = nested_tree(&[1.5]);
        let stab = stabilities(&tree);
        // Direct: every point under c contributes min(λ, death) - birth.
        for (c, node) in tree.nodes.iter().enumerate() {
            let direct: f64 = tree
                .points
                .iter()
                .filter(|p| tree.is_ancestor(c, p.cluster))
                .map(|p| p.lambda.min(node.lambda_death) - node.lambda_birth)
                .sum();
            assert!((stab[c] - direct).abs() < 1e-12, "node {c}");
        }
    }

    #[test]
    fn children_win_ties_and_lose_to_stronger_parent() {
        // Node 1: stab = (1.5-1) + 2*(2-1)*2 = 4.5; children: 2*(4-2) = 4 each -> 8.
        let sel = select_clusters(&nested_tree(&[1.5]));
        assert_eq!(sel.selected, vec![2, 3, 4]);

        // Many early departures inflate node 1 past its children.
        let heavy = vec![2.0; 12];
        let sel = select_clusters(&nested_tree(&heavy));
        assert_eq!(sel.selected, vec![1, 2]);
        // Points below node 1 leave at λ=4 > death 2: probability clipped to 1.
        let idx = 1 + heavy.len();
        assert_eq!(sel.probabilities[idx], 1.0);
        assert_eq!(sel.hard_labels[0], NOISE);
        assert_eq!(sel.probabilities[0], 0.0);
    }

    #[test]
    fn root_only_tree_selects_nothing() {
        let tree = CondensedTree {
            nodes: vec![node(None, vec![], 0.0, 1.0, 3)],
            points: vec![rec(0, 1.0); 3],
            min_cluster_size: 5,
        };
        let sel = select_clusters(&tree);
        assert!(sel.selected.is_empty());
        assert!(sel.hard_labels.iter().all(|&l| l == NOISE));
        assert_eq!(sel.mean_persistence(), None);
    }

    #[test]
    fn probability_one_at_cluster_death() {
        let sel = select_clusters(&nested_tree(&[1.5]));
        // Point in node 2 leaving at λ = 3 = death.
        let last = sel.probabilities.len() - 1;
        assert_eq!(sel.probabilities[last], 1.0);
        assert!((sel.probabilities[last - 1] - 2.0 / 3.0).abs() < 1e-15);
    }
}
