//! Bucketed k-d tree shared by k-NN search and farthest point sampling.
//!
//! Nodes keep tight bounding boxes. Pruning only ever uses `box_dist2`, which
//! is a lower bound of `dist2` for every point in the box even after rounding,
//! so searches return exactly what an exhaustive scan returns.

use super::{dist2, Point3};

pub(crate) const LEAF_SIZE: usize = 16;
pub(crate) const NO_CHILD: usize = usize::MAX;

#[derive(Debug, Clone)]
pub(crate) struct Node {
    pub lo: Point3,
    pub hi: Point3,
    /// Range into `KdTree::order`.
    pub start: usize,
    pub end: usize,
    pub left: usize,
    pub right: usize,
    pub parent: usize,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.left == NO_CHILD
    }
}

#[derive(Debug, Clone)]
pub(crate) struct KdTree<'a> {
    pub points: &'a [Point3],
    pub nodes: Vec<Node>,
    /// Point indices, grouped so that every node owns a contiguous range.
    pub order: Vec<usize>,
}

impl<'a> KdTree<'a> {
    pub fn build(points: &'a [Point3]) -> Self {
        let mut tree = KdTree {
            points,
            nodes: Vec::with_capacity(2 * points.len() / LEAF_SIZE + 1),
            order: (0..points.len()).collect(),
        };
        if !points.is_empty() {
            tree.build_node(0, points.len(), NO_CHILD);
        }
        tree
    }

    fn build_node(&mut self, start: usize, end: usize, parent: usize) -> usize {
        let (lo, hi) = bounds(self.points, &self.order[start..end]);
        let id = self.nodes.len();
        self.nodes.push(Node {
            lo,
            hi,
            start,
            end,
            left: NO_CHILD,
            right: NO_CHILD,
            parent,
        });
        let extent = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
        let axis = (0..3)
            .max_by(|&a, &b| extent[a].total_cmp(&extent[b]).then(b.cmp(&a)))
            .unwrap();
        if end - start <= LEAF_SIZE || extent[axis] == 0.0 {
            return id;
        }
        let mid = (end - start) / 2;
        let pts = self.points;
        self.order[start..end].select_nth_unstable_by(mid, |&a, &b| {
            pts[a][axis].total_cmp(&pts[b][axis]).then(a.cmp(&b))
        });
        let left = self.build_node(start, start + mid, id);
        let right = self.build_node(start + mid, end, id);
        self.nodes[id].left = left;
        self.nodes[id].right = right;
        id
    }

    /// Indices of the `k` points nearest to `q`, ordered by
    /// (squared distance, index) ascending, paired with squared distances.
    pub fn nearest(&self, q: &Point3, k: usize, out: &mut Vec<(f64, usize)>) {
        out.clear();
        if k == 0 || self.nodes.is_empty() {
            return;
        }
        self.search(0, q, k, out);
    }

    fn search(&self, id: usize, q: &Point3, k: usize, out: &mut Vec<(f64, usize)>) {
        let node = &self.nodes[id];
        if out.len() == k && box_dist2(q, &node.lo, &node.hi) > out[k - 1].0 {
            return;
        }
        if node.is_leaf() {
            for &i in &self.order[node.start..node.end] {
                let cand = (dist2(q, &self.points[i]), i);
                if out.len() < k {
                    let pos = out.partition_point(|e| less(e, &cand));
                    out.insert(pos, cand);
                } else if less(&cand, &out[k - 1]) {
                    out.pop();
                    let pos = out.partition_point(|e| less(e, &cand));
                    out.insert(pos, cand);
                }
            }
            return;
        }
        let (l, r) = (node.left, node.right);
        let dl = box_dist2(q, &self.nodes[l].lo, &self.nodes[l].hi);
        let dr = box_dist2(q, &self.nodes[r].lo, &self.nodes[r].hi);
        if dl <= dr {
            self.search(l, q, k, out);
            self.search(r, q, k, out);
        } else {
            self.search(r, q, k, out);
            self.search(l, q, k, out);
        }
    }
}

#[inline]
fn less(a: &(f64, usize), b: &(f64, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

fn bounds(points: &[Point3], idx: &[usize]) -> (Point3, Point3) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in idx {
        for a in 0..3 {
            lo[a] = lo[a].min(points[i][a]);
            hi[a] = hi[a].max(points[i][a]);
        }
    }
    (lo, hi)
}

/// Squared distance from `q` to the axis-aligned box `[lo, hi]`.
#[inline]
pub(crate) fn box_dist2(q: &Point3, lo: &Point3, hi: &Point3) -> f64 {
    let mut gap = [0.0; 3];
    for a in 0..3 {
        gap[a] = if q[a] < lo[a] {
            lo[a] - q[a]
        } else if q[a] > hi[a] {
            q[a] - hi[a]
        } else {
            0.0
        };
    }
    gap[0] * gap[0] + gap[1] * gap[1] + gap[2] * gap[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn every_point_in_exactly_one_leaf() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Point3> = (0..500)
            .map(|_| [rng.random(), rng.random(), rng.random()])
            .collect();
        let tree = KdTree::build(&pts);
        let mut seen = vec![0; pts.len()];
        for n in tree.nodes.iter().filter(|n| n.is_leaf()) {
            for &i in &tree.order[n.start..n.end] {
                seen[i] += 1;
                for (a, &v) in pts[i].iter().enumerate() {
                    assert!(v >= n.lo[a] && v <= n.hi[a]);
                }
            }
        }
        assert!(seen.iter().all(|&s| s == 1));
    }

    #[test]
    fn duplicate_points_do_not_recurse_forever() {
        let pts = vec![[1.0, 1.0, 1.0]; 200];
        let tree = KdTree::build(&pts);
        assert_eq!(tree.nodes.len(), 1);
    }

    #[test]
    fn box_distance_bounds_point_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let lo = [rng.random::<f64>(), rng.random(), rng.random()];
            let hi = [lo[0] + rng.random::<f64>(), lo[1] + rng.random::<f64>(), lo[2] + rng.random::<f64>()];
            let p = [
                lo[0] + (hi[0] - lo[0]) * rng.random::<f64>(),
                lo[1] + (hi[1] - lo[1]) * rng.random::<f64>(),
                lo[2] + (hi[2] - lo[2]) * rng.random::<f64>(),
            ];
            let q = [rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() * 4.0 - 2.0];
            assert!(box_dist2(&q, &lo, &hi) <= dist2(&q, &p));
        }
    }
}
