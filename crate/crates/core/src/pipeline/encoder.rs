use ndarray::{Array1, Array2};

use super::PipelineConfig;
use crate::descriptors::{grouped_descriptor, with_estimated_normals, DescriptorField, DescriptorKind};
use crate::error::{Result, TfcwError};
use crate::geometry::{farthest_point_sample, knn, Point3, PointCloud};
use crate::par;
use crate::tfcw::{empowered_block_with, united_block_with};

/// Point counts after each stage: repeated ceil-halving of `n`.
pub fn stage_sizes(n: usize, stages: usize) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(stages);
    let mut cur = n;
    for _ in 0..stages {
        cur = cur.div_ceil(2);
        sizes.push(cur);
    }
    sizes
}

/// One stage's sampled cloud and its grouped descriptor tensor.
#[derive(Debug, Clone)]
pub struct StageGroup {
    pub sampled: PointCloud,
    pub grouped: DescriptorField,
    /// Padded neighbours and zero-length vectors met while describing.
    pub degeneracies: usize,
}

/// Attaches normals when the descriptor needs them.
pub fn prepare_cloud(cloud: &PointCloud, cfg: &PipelineConfig) -> Result<PointCloud> {
    match cfg.descriptor {
        DescriptorKind::Risp => with_estimated_normals(cloud, cfg.k_normal),
        _ => Ok(cloud.clone()),
    }
}

/// Runs the sampling cascade and describes every stage.
pub fn stage_groups(cloud: &PointCloud, cfg: &PipelineConfig) -> Result<Vec<StageGroup>> {
    cfg.validate()?;
    let need = 1usize.checked_shl(cfg.stages as u32).unwrap_or(usize::MAX);
    if cloud.len() < need {
        return Err(TfcwError::arg(format!(
            "{} points cannot feed {} halving stages (need at least {need})",
            cloud.len(),
            cfg.stages
        )));
    }
    let mut current = prepare_cloud(cloud, cfg)?;
    let mut out = Vec::with_capacity(cfg.stages);
    for &k in &cfg.k_per_stage {
        let count = current.len().div_ceil(2);
        let idx = farthest_point_sample(&current, count, cfg.start)?;
        let sampled = current.subset(&idx);
        let k = k.min(current.len());
        let nbrs = knn(sampled.points(), current.points(), k)?;
        let (grouped, degeneracies) = grouped_descriptor(cfg.descriptor, &sampled, &current, &nbrs)?;
        out.push(StageGroup {
            sampled: sampled.clone(),
            grouped,
            degeneracies,
        });
        current = sampled;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationFeature {
    /// Unit-norm concatenation of the per-stage vectors.
    pub vector: Array1<f64>,
    pub stage_points: Vec<usize>,
    pub degeneracies: usize,
}

/// Global feature of one cloud: united-block vector per stage, concatenated
/// and L2-normalised.
pub fn encode_classification(cloud: &PointCloud, cfg: &PipelineConfig) -> Result<Array1<f64>> {
    Ok(encode_classification_detailed(cloud, cfg)?.vector)
}

pub fn encode_classification_detailed(cloud: &PointCloud, cfg: &PipelineConfig) -> Result<ClassificationFeature> {
    let groups = stage_groups(cloud, cfg)?;
    let params = cfg.tfcw_params();
    let mut parts = Vec::new();
    for g in &groups {
        parts.extend(united_block_with(g.grouped.values.view(), &params));
    }
    let mut vector = Array1::from(parts);
    normalize(vector.as_slice_mut().expect("owned vector"));
    if !vector.iter().all(|v| v.is_finite()) {
        return Err(TfcwError::Invariant("classification feature is not finite".into()));
    }
    Ok(ClassificationFeature {
        vector,
        stage_points: groups.iter().map(|g| g.sampled.len()).collect(),
        degeneracies: groups.iter().map(|g| g.degeneracies).sum(),
    })
}

/// Encodes each cloud independently. Results are in input order and each
/// depends only on its own cloud.
pub fn encode_batch(clouds: &[PointCloud], cfg: &PipelineConfig) -> Result<Vec<Array1<f64>>> {
    par::map_slice(clouds, |c| encode_classification(c, cfg))
        .into_iter()
        .collect()
}

/// Per-point features on a set of points.
#[derive(Debug, Clone, PartialEq)]
pub struct StageOutput {
    pub points: Vec<Point3>,
    pub features: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationEncoding {
    /// The input points, with their coordinates as the finest skip features.
    pub base: StageOutput,
    /// One entry per stage, finest first.
    pub stages: Vec<StageOutput>,
    pub degeneracies: usize,
}

pub fn encode_segmentation(cloud: &PointCloud, cfg: &PipelineConfig) -> Result<SegmentationEncoding> {
    let groups = stage_groups(cloud, cfg)?;
    let params = cfg.tfcw_params();
    let degeneracies = groups.iter().map(|g| g.degeneracies).sum();
    let stages = groups
        .into_iter()
        .map(|g| StageOutput {
            features: empowered_block_with(g.grouped.values.view(), &params),
            points: g.sampled.points().to_vec(),
        })
        .collect();
    let base = StageOutput {
        points: cloud.points().to_vec(),
        features: Array2::from_shape_fn((cloud.len(), 3), |(i, a)| cloud.points()[i][a]),
    };
    Ok(SegmentationEncoding {
        base,
        stages,
        degeneracies,
    })
}

pub(crate) fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}
