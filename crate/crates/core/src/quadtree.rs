//! Point-region quadtree summarizing t-SNE repulsive forces.

const MAX_DEPTH: usize = 48;

struct Node {
    cx: f64,
    cy: f64,
    half: f64,
    mass: f64,
    com_x: f64,
    com_y: f64,
    children: Option<[usize; 4]>,
    points: Vec<usize>,
}

impl Node {
    fn new(cx: f64, cy: f64, half: f64) -> Self {
        Node {
            cx,
            cy,
            half,
            mass: 0.0,
            com_x: 0.0,
            com_y: 0.0,
            children: None,
            points: Vec::new(),
        }
    }

    fn quadrant(&self, x: f64, y: f64) -> usize {
        usize::from(x >= self.cx) | (usize::from(y >= self.cy) << 1)
    }
}

pub(crate) struct QuadTree<'a> {
    nodes: Vec<Node>,
    y: &'a [f64],
}

impl<'a> QuadTree<'a> {
    /// Builds the tree over the row-major `n × 2` layout `y`.
    pub(crate) fn build(y: &'a [f64]) -> Self {
        let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
        let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in y.chunks_exact(2) {
            min_x = min_x.min(p[0]);
            max_x = max_x.max(p[0]);
            min_y = min_y.min(p[1]);
            max_y = max_y.max(p[1]);
        }
        let half = ((max_x - min_x).max(max_y - min_y) / 2.0).max(1e-9) * (1.0 + 1e-6);
        let root = Node::new((min_x + max_x) / 2.0, (min_y + max_y) / 2.0, half);
        let mut tree = QuadTree {
            nodes: vec![root],
            y,
        };
        for i in 0..y.len() / 2 {
            tree.insert(i);
        }
        tree
    }

    fn insert(&mut self, i: usize) {
        let (x, y) = (self.y[2 * i], self.y[2 * i + 1]);
        let mut node = 0;
        let mut depth = 0;
        loop {
            let n = &mut self.nodes[node];
            let m = n.mass + 1.0;
            n.com_x += (x - n.com_x) / m;
            n.com_y += (y - n.com_y) / m;
            n.mass = m;
            match n.children {
                Some(ch) => {
                    node = ch[n.quadrant(x, y)];
                    depth += 1;
                }
                None if n.points.is_empty() || depth >= MAX_DEPTH => {
                    n.points.push(i);
                    return;
                }
                None => {
                    let existing = std::mem::take(&mut n.points);
                    self.subdivide(node);
                    // Re-home the previous occupants without touching the
                    // aggregates already counted on this node.
                    for e in existing {
                        self.push_down(node, e, depth);
                    }
                    let n = &self.nodes[node];
                    node = n.children.expect("just subdivided")[n.quadrant(x, y)];
                    depth += 1;
                }
            }
        }
    }

    fn push_down(&mut self, from: usize, i: usize, depth: usize) {
        let (x, y) = (self.y[2 * i], self.y[2 * i + 1]);
        let n = &self.nodes[from];
        let mut node = n.children.expect("subdivided")[n.quadrant(x, y)];
        let mut depth = depth + 1;
        loop {
            let n = &mut self.nodes[node];
            let m = n.mass + 1.0;
            n.com_x += (x - n.com_x) / m;
            n.com_y += (y - n.com_y) / m;
            n.mass = m;
            match n.children {
                Some(ch) => {
                    node = ch[n.quadrant(x, y)];
                    depth += 1;
                }
                None => {
                    // A freshly created child is empty, so the point lands here.
                    debug_assert!(n.points.is_empty() || depth >= MAX_DEPTH);
                    n.points.push(i);
                    return;
                }
            }
        }
    }

    fn subdivide(&mut self, node: usize) {
        let (cx, cy, half) = {
            let n = &self.nodes[node];
            (n.cx, n.cy, n.half / 2.0)
        };
        let base = self.nodes.len();
        for q in 0..4 {
            let dx = if q & 1 == 1 { half } else { -half };
            let dy = if q & 2 == 2 { half } else { -half };
            self.nodes.push(Node::new(cx + dx, cy + dy, half));
        }
        self.nodes[node].children = Some([base, base + 1, base + 2, base + 3]);
    }

    /// Approximate `(Σ w² dx, Σ w² dy, Σ w)` over all other points, where
    /// `w = 1 / (1 + |p - q|²)`.
    pub(crate) fn repulsion(&self, x: f64, y: f64, theta: f64) -> (f64, f64, f64) {
        let mut fx = 0.0;
        let mut fy = 0.0;
        let mut z = 0.0;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let n = &self.nodes[id];
            if n.mass == 0.0 {
                continue;
            }
            let dx = x - n.com_x;
            let dy = y - n.com_y;
            let d2 = dx * dx + dy * dy;
            match n.children {
                Some(ch) if (2.0 * n.half) * (2.0 * n.half) >= theta * theta * d2 => {
                    stack.extend_from_slice(&ch);
                }
                _ if n.children.is_none() => {
                    for &j in &n.points {
                        let ex = x - self.y[2 * j];
                        let ey = y - self.y[2 * j + 1];
                        let e2 = ex * ex + ey * ey;
                        if e2 == 0.0 {
                            continue;
                        }
                        let w = 1.0 / (1.0 + e2);
                        z += w;
                        fx += w * w * ex;
                        fy += w * w * ey;
                    }
                }
                _ => {
                    let w = 1.0 / (1.0 + d2);
                    z += n.mass * w;
                    fx += n.mass * w * w * dx;
                    fy += n.mass * w * w * dy;
                }
            }
        }
        (fx, fy, z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(y: &[f64], i: usize) -> (f64, f64, f64) {
        let (mut fx, mut fy, mut z) = (0.0, 0.0, 0.0);
        for j in 0..y.len() / 2 {
            if j == i {
                continue;
            }
            let dx = y[2 * i] - y[2 * j];
            let dy = y[2 * i + 1] - y[2 * j + 1];
            let w = 1.0 / (1.0 + dx * dx + dy * dy);
            z += w;
            fx += w * w * dx;
            fy += w * w * dy;
        }
        (fx, fy, z)
    }

    #[test]
    fn theta_zero_is_exact() {
        let y: Vec<f64> = (0..80).map(|k| (k as f64 * 0.37).sin() * 5.0 + k as f64 * 0.01).collect();
        let tree = QuadTree::build(&y);
        for i in 0..40 {
            let (ax, ay, az) = tree.repulsion(y[2 * i], y[2 * i + 1], 0.0);
            let (bx, by, bz) = exact(&y, i);
            assert!((ax - bx).abs() < 1e-12 && (ay - by).abs() < 1e-12);
            assert!((az - bz).abs() < 1e-10);
        }
    }

    #[test]
    fn moderate_theta_is_close() {
        let y: Vec<f64> = (0..400).map(|k| ((k * 7919 % 1013) as f64) / 50.0).collect();
        let tree = QuadTree::build(&y);
        for i in (0..200).step_by(17) {
            let (_, _, az) = tree.repulsion(y[2 * i], y[2 * i + 1], 0.5);
            let (_, _, bz) = exact(&y, i);
            assert!((az - bz).abs() / bz < 0.05);
        }
    }

    #[test]
    fn duplicates_do_not_recurse_forever() {
        let y = vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0];
        let tree = QuadTree::build(&y);
        let (_, _, z) = tree.repulsion(2.0, 2.0, 0.5);
        assert!((z - 1.0).abs() < 1e-12);
    }
}
