//! Rotation-invariant surface descriptor.
//!
//! For a centre `p` and its distance-sorted neighbours, neighbour `x_i` forms
//! two triangles with its list-adjacent neighbours `x_{i-1}` and `x_{i+1}`
//! (wrapping cyclically). The row is the edge length `L = |x_i - p|` followed
//! by five triangle angles and eight angles against the four normals. Only
//! lengths and angles appear, so a rigid rotation of points and normals
//! leaves every channel unchanged.
//!
//! Vectors written `ab` below run from `a` to `b`.

use ndarray::Array3;

use super::{DescriptorField, DescriptorKind};
use crate::error::{Result, TfcwError};
use crate::geometry::{cross, dot, norm, sub, NeighborIndex, Point3, PointCloud};
use crate::par;

/// Cross products shorter than this fraction of |a||b| count as parallel.
const PARALLEL_TOLERANCE: f64 = 1e-12;

/// Number of angle evaluations that hit a zero-length vector and were set to 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DegeneracyReport {
    pub zero_vectors: usize,
}

pub fn pcsd_risp(
    centers: &PointCloud,
    support: &PointCloud,
    neighbors: &NeighborIndex,
) -> Result<(DescriptorField, DegeneracyReport)> {
    let (Some(cn), Some(sn)) = (centers.normals(), support.normals()) else {
        return Err(TfcwError::input("RISP needs normals on both centres and support"));
    };
    let k = neighbors.k();
    if k < 3 {
        return Err(TfcwError::arg(format!("RISP needs at least 3 neighbours, got {k}")));
    }
    if neighbors.queries() != centers.len() {
        return Err(TfcwError::arg(format!(
            "{} neighbour rows for {} centres",
            neighbors.queries(),
            centers.len()
        )));
    }
    if let Some(&bad) = neighbors.indices.iter().find(|&&i| i >= support.len()) {
        return Err(TfcwError::arg(format!("neighbour index {bad} out of range")));
    }
    Ok(risp_unchecked(centers, support, neighbors, cn, sn))
}

/// RISP without the neighbour-count check; with fewer than 3 neighbours the
/// cyclic adjacency repeats points and the affected angles degenerate to 0.
pub(crate) fn pcsd_risp_lenient(
    centers: &PointCloud,
    support: &PointCloud,
    neighbors: &NeighborIndex,
) -> Result<(DescriptorField, DegeneracyReport)> {
    let (Some(cn), Some(sn)) = (centers.normals(), support.normals()) else {
        return Err(TfcwError::input("RISP needs normals on both centres and support"));
    };
    Ok(risp_unchecked(centers, support, neighbors, cn, sn))
}

fn risp_unchecked(
    centers: &PointCloud,
    support: &PointCloud,
    neighbors: &NeighborIndex,
    cn: &[Point3],
    sn: &[Point3],
) -> (DescriptorField, DegeneracyReport) {
    let k = neighbors.k();
    let (cp, sp) = (centers.points(), support.points());
    let rows: Vec<(Vec<f64>, usize)> = par::map_range(centers.len(), |q| {
        let nb = neighbors.indices.row(q);
        let mut zero = 0;
        let mut out = Vec::with_capacity(k * 14);
        for i in 0..k {
            let prev = nb[(i + k - 1) % k];
            let next = nb[(i + 1) % k];
            let cur = nb[i];
            out.extend(risp_row(
                &cp[q],
                &cn[q],
                (&sp[prev], &sn[prev]),
                (&sp[cur], &sn[cur]),
                (&sp[next], &sn[next]),
                &mut zero,
            ));
        }
        (out, zero)
    });
    let zero_vectors = rows.iter().map(|r| r.1).sum();
    let flat: Vec<f64> = rows.into_iter().flat_map(|r| r.0).collect();
    let values = Array3::from_shape_vec((centers.len(), k, 14), flat)
        .expect("row lengths match the declared shape");
    (
        DescriptorField {
            kind: DescriptorKind::Risp,
            values,
        },
        DegeneracyReport { zero_vectors },
    )
}

fn risp_row(
    p: &Point3,
    n_p: &Point3,
    (x_prev, n_prev): (&Point3, &Point3),
    (x_cur, n_cur): (&Point3, &Point3),
    (x_next, n_next): (&Point3, &Point3),
    zero: &mut usize,
) -> [f64; 14] {
    let cur_p = sub(p, x_cur);
    let prev_p = sub(p, x_prev);
    let next_p = sub(p, x_next);
    let prev_cur = sub(x_cur, x_prev);
    let next_cur = sub(x_cur, x_next);

    let mut ang = |a: &Point3, b: &Point3| angle(a, b, 0.0, zero);
    let phi1 = ang(&prev_p, &cur_p);
    let phi2 = ang(&next_p, &cur_p);
    let phi3 = ang(&prev_cur, &prev_p);
    let phi4 = ang(&next_p, &next_cur);
    let alpha1 = ang(n_p, &cur_p);
    let alpha2 = ang(n_p, &prev_p);
    let beta1 = ang(n_cur, &cur_p);
    let beta2 = ang(n_cur, &prev_cur);
    let theta1 = ang(n_prev, &prev_p);
    let theta2 = ang(n_prev, &prev_cur);
    let gamma1 = ang(n_next, &next_cur);
    let gamma2 = ang(n_next, &next_p);

    let c_next = cross(&next_p, &cur_p);
    let c_prev = cross(&prev_p, &cur_p);
    let floor_next = PARALLEL_TOLERANCE * norm(&next_p) * norm(&cur_p);
    let floor_prev = PARALLEL_TOLERANCE * norm(&prev_p) * norm(&cur_p);
    let phi5 = if norm(&c_next) <= floor_next || norm(&c_prev) <= floor_prev {
        *zero += 1;
        0.0
    } else {
        angle(&c_next, &c_prev, 0.0, zero)
    };

    [
        norm(&cur_p),
        phi1,
        phi2,
        phi3,
        phi4,
        phi5,
        alpha1,
        alpha2,
        beta1,
        beta2,
        theta1,
        theta2,
        gamma1,
        gamma2,
    ]
}

/// Angle in [0, π] via the clamped normalised dot product. A vector no longer
/// than `floor` yields 0 and bumps `zero`.
fn angle(a: &Point3, b: &Point3, floor: f64, zero: &mut usize) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na <= floor || nb <= floor {
        *zero += 1;
        return 0.0;
    }
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0).acos()
}
