//! Point cloud surface descriptors (PCSDs).
//!
//! Three families are provided, all producing a grouped N×K×C tensor once a
//! neighbourhood is attached:
//!
//! | kind | width | content |
//! |------|-------|---------|
//! | [`DescriptorKind::Xyz`]  | 6  | neighbour position and offset from the centre |
//! | [`DescriptorKind::Geo`]  | 14 | position, two edge vectors, their cross product, edge lengths |
//! | [`DescriptorKind::Risp`] | 14 | edge length and thirteen rotation-invariant angles |

mod geo;
mod normals;
mod risp;
mod xyz;

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TfcwError};
use crate::geometry::{NeighborIndex, PointCloud};

pub use geo::pcsd_geo;
use geo::pcsd_geo_lenient;
pub use normals::{estimate_normals, with_estimated_normals, NormalEstimate};
pub use risp::{pcsd_risp, DegeneracyReport};
use risp::pcsd_risp_lenient;
pub use xyz::pcsd_xyz;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescriptorKind {
    Xyz,
    Geo,
    Risp,
}

impl DescriptorKind {
    pub fn width(self) -> usize {
        match self {
            DescriptorKind::Xyz => 6,
            DescriptorKind::Geo | DescriptorKind::Risp => 14,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DescriptorKind::Xyz => "xyz",
            DescriptorKind::Geo => "geo",
            DescriptorKind::Risp => "risp",
        }
    }
}

impl std::str::FromStr for DescriptorKind {
    type Err = TfcwError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xyz" => Ok(DescriptorKind::Xyz),
            "geo" => Ok(DescriptorKind::Geo),
            "risp" => Ok(DescriptorKind::Risp),
            other => Err(TfcwError::arg(format!("unknown descriptor '{other}' (xyz|geo|risp)"))),
        }
    }
}

/// Descriptor tensor of shape N×K×C. Per-point descriptors use K = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorField {
    pub kind: DescriptorKind,
    pub values: Array3<f64>,
}

impl DescriptorField {
    pub fn len(&self) -> usize {
        self.values.dim().0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn neighbors(&self) -> usize {
        self.values.dim().1
    }

    pub fn width(&self) -> usize {
        self.values.dim().2
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Gathers the per-point rows of each query's neighbours into a Q×K×C
    /// tensor.
    pub fn group(&self, neighbors: &NeighborIndex) -> Result<DescriptorField> {
        if self.neighbors() != 1 {
            return Err(TfcwError::arg("only per-point descriptor fields can be grouped"));
        }
        let (q, k, c) = (neighbors.queries(), neighbors.k(), self.width());
        if let Some(&bad) = neighbors.indices.iter().find(|&&i| i >= self.len()) {
            return Err(TfcwError::arg(format!("neighbour index {bad} out of range")));
        }
        let values = Array3::from_shape_fn((q, k, c), |(i, j, ch)| {
            self.values[[neighbors.indices[[i, j]], 0, ch]]
        });
        Ok(DescriptorField {
            kind: self.kind,
            values,
        })
    }
}

/// Grouped descriptor for `centers` over their neighbours in `support`, as
/// used by the staged encoders. Tiny stages that cannot satisfy a
/// descriptor's neighbour requirement are padded rather than rejected; the
/// returned count records every such substitution or zero-length vector.
/// RISP needs normals on both clouds.
pub fn grouped_descriptor(
    kind: DescriptorKind,
    centers: &PointCloud,
    support: &PointCloud,
    neighbors: &NeighborIndex,
) -> Result<(DescriptorField, usize)> {
    match kind {
        DescriptorKind::Xyz => Ok((pcsd_xyz(centers.points(), support.points(), neighbors)?, 0)),
        DescriptorKind::Geo => {
            let (per_point, missing) = pcsd_geo_lenient(support);
            Ok((per_point.group(neighbors)?, missing))
        }
        DescriptorKind::Risp => {
            if neighbors.queries() != centers.len() {
                return Err(TfcwError::arg("neighbour rows do not match centres"));
            }
            if let Some(&bad) = neighbors.indices.iter().find(|&&i| i >= support.len()) {
                return Err(TfcwError::arg(format!("neighbour index {bad} out of range")));
            }
            let (field, report) = pcsd_risp_lenient(centers, support, neighbors)?;
            Ok((field, report.zero_vectors))
        }
    }
}
