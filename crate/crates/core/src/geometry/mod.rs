//! Deterministic point cloud primitives.

mod cloud;
mod fps;
mod kdtree;
mod knn;
mod rotation;

pub use cloud::{PointCloud, OUTLIER_LABEL};
pub use fps::{farthest_point_sample, farthest_point_sample_points, StartRule};
pub use knn::{knn, NeighborIndex};
pub use rotation::{apply_rotation, random_rotation, RotationMatrix, RotationMode};

pub type Point3 = [f64; 3];

#[inline]
pub fn sub(a: &Point3, b: &Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn dot(a: &Point3, b: &Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: &Point3, b: &Point3) -> Point3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: &Point3) -> f64 {
    dot(a, a).sqrt()
}

/// Squared Euclidean distance. Every distance comparison in the crate goes
/// through this exact expression so tree searches and exhaustive scans agree
/// bit for bit.
#[inline]
pub fn dist2(a: &Point3, b: &Point3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

/// Lexicographic total order on coordinates.
#[inline]
pub(crate) fn lex_cmp(a: &Point3, b: &Point3) -> std::cmp::Ordering {
    a[0].total_cmp(&b[0])
        .then(a[1].total_cmp(&b[1]))
        .then(a[2].total_cmp(&b[2]))
}

/// Mean of the points, independent of their order.
///
/// Each coordinate column is sorted before summation so a row permutation of
/// the input produces the bit-identical centroid.
pub fn centroid(points: &[Point3]) -> Point3 {
    let mut out = [0.0; 3];
    if points.is_empty() {
        return out;
    }
    let mut column: Vec<f64> = Vec::with_capacity(points.len());
    for (axis, slot) in out.iter_mut().enumerate() {
        column.clear();
        column.extend(points.iter().map(|p| p[axis]));
        column.sort_unstable_by(|a, b| a.total_cmp(b));
        *slot = column.iter().sum::<f64>() / points.len() as f64;
    }
    out
}
