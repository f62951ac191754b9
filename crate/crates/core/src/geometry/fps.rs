//! Exact farthest point sampling.
//!
//! Each step picks the unselected point whose distance to the selected set is
//! largest. The running minimum distances live alongside a k-d tree whose
//! nodes cache their best candidate; a new sample only revisits nodes whose
//! bounding box is closer to it than the node's current best, which keeps the
//! cost close to O(N log N) on well-spread clouds while selecting exactly the
//! sequence an exhaustive scan would.

use serde::{Deserialize, Serialize};

use super::kdtree::{box_dist2, KdTree, NO_CHILD};
use super::{centroid, dist2, lex_cmp, Point3, PointCloud};
use crate::error::{Result, TfcwError};

/// How the first sample is chosen, and how later ties are broken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartRule {
    /// Start at the given row; ties go to the lower row index.
    FixedIndex(usize),
    /// Start at the point farthest from the centroid; ties go to the
    /// lexicographically smaller coordinates. Independent of row order.
    #[default]
    CanonicalFarthestFromCentroid,
}

pub fn farthest_point_sample(cloud: &PointCloud, count: usize, start: StartRule) -> Result<Vec<usize>> {
    farthest_point_sample_points(cloud.points(), count, start)
}

pub fn farthest_point_sample_points(points: &[Point3], count: usize, start: StartRule) -> Result<Vec<usize>> {
    let n = points.len();
    if count == 0 || count > n {
        return Err(TfcwError::arg(format!("sample count {count} must lie in 1..={n}")));
    }
    if let Some(i) = points.iter().position(|p| !p.iter().all(|v| v.is_finite())) {
        return Err(TfcwError::input(format!("point {i} has a non-finite coordinate")));
    }
    let canonical = matches!(start, StartRule::CanonicalFarthestFromCentroid);
    let first = match start {
        StartRule::FixedIndex(i) if i >= n => {
            return Err(TfcwError::arg(format!("start index {i} out of range for {n} points")))
        }
        StartRule::FixedIndex(i) => i,
        StartRule::CanonicalFarthestFromCentroid => canonical_start(points),
    };

    let mut state = Sampler::new(points, canonical);
    let mut picked = Vec::with_capacity(count);
    let mut next = first;
    loop {
        picked.push(next);
        if picked.len() == count {
            break;
        }
        state.select(next);
        next = state
            .root_best()
            .ok_or_else(|| TfcwError::Invariant("sampler ran out of candidates".into()))?;
    }
    Ok(picked)
}

fn canonical_start(points: &[Point3]) -> usize {
    let c = centroid(points);
    let mut best = 0;
    let mut best_d = dist2(&points[0], &c);
    for (i, p) in points.iter().enumerate().skip(1) {
        let d = dist2(p, &c);
        if d > best_d || (d == best_d && lex_cmp(p, &points[best]).is_lt()) {
            best = i;
            best_d = d;
        }
    }
    best
}

struct Sampler<'a> {
    tree: KdTree<'a>,
    min_d2: Vec<f64>,
    selected: Vec<bool>,
    /// Best unselected candidate per node.
    best: Vec<Option<usize>>,
    /// Leaf node holding each point.
    leaf_of: Vec<usize>,
    canonical: bool,
}

impl<'a> Sampler<'a> {
    fn new(points: &'a [Point3], canonical: bool) -> Self {
        let tree = KdTree::build(points);
        let n = points.len();
        let mut leaf_of = vec![0; n];
        for (id, node) in tree.nodes.iter().enumerate() {
            if node.is_leaf() {
                for &i in &tree.order[node.start..node.end] {
                    leaf_of[i] = id;
                }
            }
        }
        let mut s = Sampler {
            best: vec![None; tree.nodes.len()],
            tree,
            min_d2: vec![f64::INFINITY; n],
            selected: vec![false; n],
            leaf_of,
            canonical,
        };
        for id in (0..s.tree.nodes.len()).rev() {
            s.refresh(id);
        }
        s
    }

    fn root_best(&self) -> Option<usize> {
        self.best.first().copied().flatten()
    }

    /// True when `a` should be sampled before `b`.
    fn better(&self, a: usize, b: usize) -> bool {
        let (da, db) = (self.min_d2[a], self.min_d2[b]);
        if da != db {
            return da > db;
        }
        if self.canonical {
            match lex_cmp(&self.tree.points[a], &self.tree.points[b]) {
                std::cmp::Ordering::Less => return true,
                std::cmp::Ordering::Greater => return false,
                std::cmp::Ordering::Equal => {}
            }
        }
        a < b
    }

    fn pick(&self, a: Option<usize>, b: Option<usize>) -> Option<usize> {
        match (a, b) {
            (Some(x), Some(y)) => Some(if self.better(y, x) { y } else { x }),
            (x, None) => x,
            (None, y) => y,
        }
    }

    /// Recomputes the cached best of one node from its points or children.
    fn refresh(&mut self, id: usize) {
        let node = &self.tree.nodes[id];
        let best = if node.is_leaf() {
            let mut best = None;
            for &i in &self.tree.order[node.start..node.end] {
                if !self.selected[i] {
                    best = self.pick(best, Some(i));
                }
            }
            best
        } else {
            self.pick(self.best[node.left], self.best[node.right])
        };
        self.best[id] = best;
    }

    fn select(&mut self, s: usize) {
        self.selected[s] = true;
        self.min_d2[s] = 0.0;
        let mut id = self.leaf_of[s];
        loop {
            self.refresh(id);
            let parent = self.tree.nodes[id].parent;
            if parent == NO_CHILD {
                break;
            }
            id = parent;
        }
        let q = self.tree.points[s];
        self.relax(0, &q);
    }

    /// Lowers running distances with the new sample `q`. A node is skipped
    /// when its box is no closer to `q` than its best candidate's distance:
    /// then no point inside can change.
    fn relax(&mut self, id: usize, q: &Point3) {
        let Some(b) = self.best[id] else { return };
        let node = &self.tree.nodes[id];
        if box_dist2(q, &node.lo, &node.hi) >= self.min_d2[b] {
            return;
        }
        if node.is_leaf() {
            for k in node.start..node.end {
                let i = self.tree.order[k];
                if !self.selected[i] {
                    let d = dist2(q, &self.tree.points[i]);
                    if d < self.min_d2[i] {
                        self.min_d2[i] = d;
                    }
                }
            }
        } else {
            let (l, r) = (node.left, node.right);
            self.relax(l, q);
            self.relax(r, q);
        }
        self.refresh(id);
    }
}
