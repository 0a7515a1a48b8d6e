use serde::{Deserialize, Serialize};

use crate::metric::MutualReachabilityMatrix;

/// Undirected edge with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MstEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// Prim's algorithm over the dense mutual-reachability matrix.
///
/// Grows the tree from point 0. Among equally light frontier vertices the
/// smallest index joins first, and a vertex keeps its earliest (smallest)
/// tree neighbor on equal weights, so the output is fully determined by
/// the matrix.
pub fn build_mst(m: &MutualReachabilityMatrix) -> Vec<MstEdge> {
    let n = m.len();
    if n < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut key = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let row = m.row(current);
        let mut best = usize::MAX;
        let mut best_key = f64::INFINITY;
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            let w = row[v];
            if w < key[v] {
                key[v] = w;
                from[v] = current;
            }
            if best == usize::MAX || key[v] < best_key {
                best = v;
                best_key = key[v];
            }
        }
        in_tree[best] = true;
        let u = from[best];
        edges.push(MstEdge {
            a: u.min(best),
            b: u.max(best),
            weight: best_key,
        });
        current = best;
    }
    edges
}
