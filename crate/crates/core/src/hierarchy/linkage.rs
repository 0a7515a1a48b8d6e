use serde::{Deserialize, Serialize};

use super::mst::MstEdge;

/// One agglomeration step. Nodes `0..n` are points; merge `k` creates node
/// `n + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n_points: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn root(&self) -> usize {
        self.n_points + self.merges.len() - 1
    }

    pub fn size_of(&self, node: usize) -> usize {
        if node < self.n_points {
            1
        } else {
            self.merges[node - self.n_points].size
        }
    }

    pub fn merge_of(&self, node: usize) -> Option<&Merge> {
        node.checked_sub(self.n_points).map(|k| &self.merges[k])
    }
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    label: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
            label: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize, label: usize) -> usize {
        let (big, small) = if self.size[a] >= self.size[b] { (a, b) } else { (b, a) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        self.label[big] = label;
        self.size[big]
    }
}

/// Single-linkage dendrogram from an MST: edges are merged in ascending
/// weight, equal weights keeping their MST order.
pub fn single_linkage(mst: &[MstEdge]) -> Dendrogram {
    let n = mst.len() + 1;
    let mut order: Vec<&MstEdge> = mst.iter().collect();
    order.sort_by(|x, y| x.weight.total_cmp(&y.weight));
    let mut uf = UnionFind::new(n);
    let mut merges = Vec::with_capacity(n - 1);
    for (k, e) in order.into_iter().enumerate() {
        let ra = uf.find(e.a);
        let rb = uf.find(e.b);
        debug_assert_ne!(ra, rb, "MST edges never close a cycle");
        let left = uf.label[ra];
        let right = uf.label[rb];
        let size = uf.union(ra, rb, n + k);
        merges.push(Merge {
            left,
            right,
            height: e.weight,
            size,
        });
    }
    Dendrogram {
        n_points: n,
        merges,
    }
}
