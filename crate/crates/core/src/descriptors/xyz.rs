use ndarray::Array3;

use super::{DescriptorField, DescriptorKind};
use crate::error::{Result, TfcwError};
use crate::geometry::{NeighborIndex, Point3};

/// Grouped xyz descriptor: for centre `i` and neighbour `j` the row is the
/// neighbour's position followed by its offset from the centre.
pub fn pcsd_xyz(centers: &[Point3], support: &[Point3], neighbors: &NeighborIndex) -> Result<DescriptorField> {
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
    let k = neighbors.k();
    let values = Array3::from_shape_fn((centers.len(), k, 6), |(i, j, ch)| {
        let x = &support[neighbors.indices[[i, j]]];
        if ch < 3 {
            x[ch]
        } else {
            x[ch - 3] - centers[i][ch - 3]
        }
    });
    Ok(DescriptorField {
        kind: DescriptorKind::Xyz,
        values,
    })
}
