use ndarray::Array2;

use super::kdtree::KdTree;
use super::Point3;
use crate::error::{Result, TfcwError};
use crate::par;

/// Q×k neighbour table: row `q` lists reference indices by ascending distance.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborIndex {
    pub indices: Array2<usize>,
    pub distances: Array2<f64>,
}

impl NeighborIndex {
    pub fn queries(&self) -> usize {
        self.indices.nrows()
    }

    pub fn k(&self) -> usize {
        self.indices.ncols()
    }

    pub fn row(&self, q: usize) -> ndarray::ArrayView1<'_, usize> {
        self.indices.row(q)
    }
}

/// Exact k nearest neighbours of every query row among `reference`.
///
/// Ordering is by Euclidean distance with ties resolved to the lower
/// reference index. Comparisons use squared distances; reported distances
/// are their square roots.
pub fn knn(query: &[Point3], reference: &[Point3], k: usize) -> Result<NeighborIndex> {
    if k == 0 || k > reference.len() {
        return Err(TfcwError::arg(format!(
            "k = {k} must lie in 1..={} (reference size)",
            reference.len()
        )));
    }
    check_finite(query)?;
    check_finite(reference)?;
    let tree = KdTree::build(reference);
    let rows: Vec<Vec<(f64, usize)>> = par::map_slice(query, |q| {
        let mut out = Vec::with_capacity(k + 1);
        tree.nearest(q, k, &mut out);
        out
    });
    let mut indices = Array2::zeros((query.len(), k));
    let mut distances = Array2::zeros((query.len(), k));
    for (qi, row) in rows.iter().enumerate() {
        for (j, &(d2, idx)) in row.iter().enumerate() {
            indices[[qi, j]] = idx;
            distances[[qi, j]] = d2.sqrt();
        }
    }
    Ok(NeighborIndex { indices, distances })
}

fn check_finite(points: &[Point3]) -> Result<()> {
    match points.iter().position(|p| !p.iter().all(|v| v.is_finite())) {
        Some(i) => Err(TfcwError::input(format!("point {i} has a non-finite coordinate"))),
        None => Ok(()),
    }
}
