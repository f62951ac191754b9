use ndarray::Array3;

use super::{DescriptorField, DescriptorKind};
use crate::error::{Result, TfcwError};
use crate::geometry::{cross, knn, norm, sub, PointCloud};

/// Per-point geometric descriptor, N×1×14:
/// `[p, v01 × v02, v01, v02, |v01|, |v02|]` where `v0j` points from `p` to
/// its j-th nearest other point.
pub fn pcsd_geo(cloud: &PointCloud) -> Result<DescriptorField> {
    let n = cloud.len();
    if n < 3 {
        return Err(TfcwError::input(format!("GeoPCSD needs at least 3 points, got {n}")));
    }
    Ok(geo_rows(cloud).0)
}

/// Like [`pcsd_geo`] but accepts clouds with fewer than 3 points, standing in
/// the centre itself for each missing neighbour. Returns the number of
/// substituted neighbours.
pub(crate) fn pcsd_geo_lenient(cloud: &PointCloud) -> (DescriptorField, usize) {
    geo_rows(cloud)
}

fn geo_rows(cloud: &PointCloud) -> (DescriptorField, usize) {
    let n = cloud.len();
    let pts = cloud.points();
    let nb = knn(pts, pts, n.min(3)).expect("k within range");
    let mut values = Array3::zeros((n, 1, 14));
    let mut missing = 0;
    for i in 0..n {
        // self is usually first, but duplicates can displace it
        let mut others = nb.indices.row(i).into_iter().copied().filter(|&j| j != i);
        let mut next = || {
            others.next().unwrap_or_else(|| {
                missing += 1;
                i
            })
        };
        let (a, b) = (next(), next());
        let p = &pts[i];
        let v1 = sub(&pts[a], p);
        let v2 = sub(&pts[b], p);
        let c = cross(&v1, &v2);
        let row = [
            p[0], p[1], p[2], c[0], c[1], c[2], v1[0], v1[1], v1[2], v2[0], v2[1], v2[2],
            norm(&v1),
            norm(&v2),
        ];
        for (ch, v) in row.into_iter().enumerate() {
            values[[i, 0, ch]] = v;
        }
    }
    (
        DescriptorField {
            kind: DescriptorKind::Geo,
            values,
        },
        missing,
    )
}
