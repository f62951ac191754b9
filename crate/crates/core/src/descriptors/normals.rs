use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::error::{Result, TfcwError};
use crate::geometry::{centroid, dot, knn, sub, Point3, PointCloud};
use crate::par;

/// Relative eigenvalue floor below which a neighbourhood has no usable plane.
const RANK_TOLERANCE: f64 = 1e-12;
const FALLBACK_NORMAL: Point3 = [0.0, 0.0, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct NormalEstimate {
    pub normals: Vec<Point3>,
    /// Points whose neighbourhood was rank deficient; they carry `(0, 0, 1)`.
    pub degenerate: Vec<usize>,
}

/// PCA normals from the `k_normal` nearest neighbours (self included),
/// oriented away from the cloud centroid.
pub fn estimate_normals(cloud: &PointCloud, k_normal: usize) -> Result<NormalEstimate> {
    if k_normal < 3 {
        return Err(TfcwError::arg(format!("k_normal must be at least 3, got {k_normal}")));
    }
    let pts = cloud.points();
    let k = k_normal.min(pts.len());
    let nb = knn(pts, pts, k)?;
    let center = centroid(pts);
    let rows: Vec<Option<Point3>> = par::map_range(pts.len(), |i| {
        let hood: Vec<Point3> = nb.indices.row(i).iter().map(|&j| pts[j]).collect();
        plane_normal(&hood).map(|n| orient(n, &sub(&pts[i], &center)))
    });
    let mut degenerate = Vec::new();
    let normals = rows
        .into_iter()
        .enumerate()
        .map(|(i, n)| {
            n.unwrap_or_else(|| {
                degenerate.push(i);
                FALLBACK_NORMAL
            })
        })
        .collect();
    Ok(NormalEstimate { normals, degenerate })
}

/// The cloud with estimated normals attached, unless it already has some.
pub fn with_estimated_normals(cloud: &PointCloud, k_normal: usize) -> Result<PointCloud> {
    if cloud.normals().is_some() {
        return Ok(cloud.clone());
    }
    let est = estimate_normals(cloud, k_normal)?;
    cloud.clone().with_normals(est.normals)
}

fn plane_normal(hood: &[Point3]) -> Option<Point3> {
    if hood.len() < 3 {
        return None;
    }
    let c = centroid(hood);
    let mut cov = Matrix3::<f64>::zeros();
    for p in hood {
        let d = Vector3::from(sub(p, &c));
        cov += d * d.transpose();
    }
    cov /= hood.len() as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let largest = eig.eigenvalues[order[2]];
    let middle = eig.eigenvalues[order[1]];
    if largest.is_nan() || largest <= 0.0 || middle <= RANK_TOLERANCE * largest {
        return None;
    }
    let v = eig.eigenvectors.column(order[0]).normalize();
    Some([v.x, v.y, v.z])
}

/// Flips `n` to point along `outward`; exact ties prefer +z, then +y, then +x.
fn orient(n: Point3, outward: &Point3) -> Point3 {
    let s = dot(&n, outward);
    let flip = if s != 0.0 {
        s < 0.0
    } else if n[2] != 0.0 {
        n[2] < 0.0
    } else if n[1] != 0.0 {
        n[1] < 0.0
    } else {
        n[0] < 0.0
    };
    if flip {
        [-n[0], -n[1], -n[2]]
    } else {
        n
    }
}
