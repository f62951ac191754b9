use ndarray::{concatenate, Array2, ArrayView2, Axis};

use super::encoder::SegmentationEncoding;
use super::PipelineConfig;
use crate::error::{Result, TfcwError};
use crate::geometry::{knn, Point3};
use crate::par;

/// Added to every distance before inverting it.
pub const PROPAGATION_EPS: f64 = 1e-8;

/// Inverse-distance weights of each target's `interp_k` nearest sources,
/// as (source index, weight) rows. A target that coincides with one or more
/// sources splits its weight evenly between them.
pub fn interpolation_weights(
    source_points: &[Point3],
    target_points: &[Point3],
    interp_k: usize,
) -> Result<Vec<Vec<(usize, f64)>>> {
    if interp_k == 0 || source_points.len() < interp_k {
        return Err(TfcwError::arg(format!(
            "interp_k = {interp_k} needs at least that many sources, got {}",
            source_points.len()
        )));
    }
    let nb = knn(target_points, source_points, interp_k)?;
    Ok(par::map_range(target_points.len(), |t| {
        let idx = nb.indices.row(t);
        let dist = nb.distances.row(t);
        let coincident = dist.iter().filter(|&&d| d == 0.0).count();
        if coincident > 0 {
            let w = 1.0 / coincident as f64;
            return idx
                .iter()
                .zip(dist.iter())
                .filter(|(_, &d)| d == 0.0)
                .map(|(&i, _)| (i, w))
                .collect();
        }
        let inv: Vec<f64> = dist.iter().map(|d| 1.0 / (d + PROPAGATION_EPS)).collect();
        let total: f64 = inv.iter().sum();
        idx.iter().zip(inv).map(|(&i, w)| (i, w / total)).collect()
    }))
}

/// Interpolates S×F source features onto T target points.
pub fn propagate_features(
    source_points: &[Point3],
    source_feats: ArrayView2<'_, f64>,
    target_points: &[Point3],
    interp_k: usize,
) -> Result<Array2<f64>> {
    if source_feats.nrows() != source_points.len() {
        return Err(TfcwError::arg(format!(
            "{} feature rows for {} source points",
            source_feats.nrows(),
            source_points.len()
        )));
    }
    let weights = interpolation_weights(source_points, target_points, interp_k)?;
    let f = source_feats.ncols();
    let mut out = Array2::zeros((target_points.len(), f));
    for (t, row) in weights.iter().enumerate() {
        let mut dst = out.row_mut(t);
        for &(s, w) in row {
            dst.scaled_add(w, &source_feats.row(s));
        }
    }
    Ok(out)
}

/// Dense per-point features: walk coarse to fine, interpolating onto the next
/// finer point set and appending its skip features, then L2-normalise rows.
/// `interp_k` is capped by the size of the coarser set.
pub fn decode_segmentation(enc: &SegmentationEncoding, cfg: &PipelineConfig) -> Result<Array2<f64>> {
    let Some(coarsest) = enc.stages.last() else {
        return Err(TfcwError::arg("segmentation encoding has no stages"));
    };
    let mut prev = enc.base.points.len();
    for (s, st) in enc.stages.iter().enumerate() {
        if st.points.len() != prev.div_ceil(2) || st.features.nrows() != st.points.len() {
            return Err(TfcwError::arg(format!("stage {s} does not follow its parent")));
        }
        prev = st.points.len();
    }
    if enc.base.features.nrows() != enc.base.points.len() {
        return Err(TfcwError::arg("base features do not match base points"));
    }

    let mut points = &coarsest.points;
    let mut feats = coarsest.features.clone();
    let finer = enc.stages.iter().rev().skip(1).chain(std::iter::once(&enc.base));
    for level in finer {
        let k = cfg.interp_k.min(points.len());
        let up = propagate_features(points, feats.view(), &level.points, k)?;
        feats = concatenate(Axis(1), &[up.view(), level.features.view()]).expect("row counts match");
        points = &level.points;
    }
    for mut row in feats.rows_mut() {
        let n = row.dot(&row).sqrt();
        if n > 0.0 {
            row /= n;
        }
    }
    Ok(feats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{encode_segmentation, StageOutput};
    use crate::synthetic;
    use ndarray::arr2;

    #[test]
    fn constant_field_is_preserved() {
        let src = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.5, 0.5, 3.0]];
        let feats = Array2::from_elem((4, 3), 1.75);
        let tgt = [[0.2, 0.1, 0.0], [5.0, 5.0, 5.0]];
        let out = propagate_features(&src, feats.view(), &tgt, 3).unwrap();
        assert!(out.iter().all(|v| (v - 1.75).abs() < 1e-9));
    }

    #[test]
    fn coincident_target_copies_its_source() {
        let src = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let feats = arr2(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
        let out = propagate_features(&src, feats.view(), &[[1.0, 0.0, 0.0]], 3).unwrap();
        assert_eq!(out.row(0).to_vec(), vec![3.0, 4.0]);
    }

    #[test]
    fn equidistant_sources_average() {
        let src = [[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]];
        let feats = arr2(&[[2.0, 0.0], [4.0, 10.0]]);
        let out = propagate_features(&src, feats.view(), &[[0.0, 0.0, 0.0]], 2).unwrap();
        assert!((out[[0, 0]] - 3.0).abs() < 1e-9);
        assert!((out[[0, 1]] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_sources() {
        let src = [[0.0; 3]];
        let feats = arr2(&[[1.0]]);
        assert!(matches!(
            propagate_features(&src, feats.view(), &[[1.0, 0.0, 0.0]], 2),
            Err(TfcwError::InvalidArgument(_))
        ));
    }

    #[test]
    fn dense_recovery() {
        let c = synthetic::capped_cylinder(300, 4);
        let cfg = PipelineConfig::default().with_uniform_k(8);
        let enc = encode_segmentation(&c, &cfg).unwrap();
        let dense = decode_segmentation(&enc, &cfg).unwrap();
        assert_eq!(dense.nrows(), 300);
        assert_eq!(dense.ncols(), 4 * (6 + 36) + 3);
        for row in dense.rows() {
            let n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn single_stage_is_propagated_plus_skip() {
        let c = synthetic::capped_cylinder(64, 5);
        let cfg = PipelineConfig::default().with_stages(1).with_uniform_k(6);
        let enc = encode_segmentation(&c, &cfg).unwrap();
        let dense = decode_segmentation(&enc, &cfg).unwrap();
        let st = &enc.stages[0];
        let up = propagate_features(&st.points, st.features.view(), c.points(), 3).unwrap();
        let expect = concatenate(Axis(1), &[up.view(), enc.base.features.view()]).unwrap();
        for (d, e) in dense.rows().into_iter().zip(expect.rows()) {
            let n = e.iter().map(|v| v * v).sum::<f64>().sqrt();
            for (a, b) in d.iter().zip(e.iter()) {
                assert!((a - b / n).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn broken_chain_is_rejected() {
        let c = synthetic::capped_cylinder(64, 5);
        let cfg = PipelineConfig::default().with_stages(2).with_uniform_k(6);
        let mut enc = encode_segmentation(&c, &cfg).unwrap();
        enc.stages[1] = StageOutput {
            points: vec![[0.0; 3]; 3],
            features: Array2::zeros((3, 42)),
        };
        assert!(matches!(decode_segmentation(&enc, &cfg), Err(TfcwError::InvalidArgument(_))));
    }
}
