//! Corruptions, rotation scenarios, batch/shuffle stability, and volume
//! scaling measurement.

use std::time::Instant;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::alloc;
use crate::bank::MemoryBank;
use crate::error::{Result, TfcwError};
use crate::geometry::{apply_rotation, random_rotation, Point3, PointCloud, RotationMode, OUTLIER_LABEL};
use crate::io::Dataset;
use crate::pipeline::{encode_batch, encode_classification, PipelineConfig};
use crate::synthetic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionKind {
    Jitter,
    GlobalNoise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub kind: CorruptionKind,
    pub severity: u8,
    pub seed: u64,
}

impl CorruptionSpec {
    pub fn new(kind: CorruptionKind, severity: u8, seed: u64) -> Result<Self> {
        if !(1..=5).contains(&severity) {
            return Err(TfcwError::arg(format!("severity must be 1..=5, got {severity}")));
        }
        Ok(CorruptionSpec { kind, severity, seed })
    }
}

/// Per-level corruption parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorruptionSchedule {
    /// Jitter standard deviation added per severity level.
    pub jitter_sigma: f64,
    /// Outliers appended per severity level.
    pub outliers_per_level: usize,
    /// Outlier cube size relative to the cloud's bounding cube.
    pub cube_scale: f64,
}

impl Default for CorruptionSchedule {
    fn default() -> Self {
        CorruptionSchedule {
            jitter_sigma: 0.01,
            outliers_per_level: 10,
            cube_scale: 1.5,
        }
    }
}

pub fn apply_corruption(cloud: &PointCloud, spec: &CorruptionSpec, schedule: &CorruptionSchedule) -> PointCloud {
    match spec.kind {
        CorruptionKind::Jitter => apply_jitter_with(cloud, spec, schedule),
        CorruptionKind::GlobalNoise => apply_global_noise_with(cloud, spec, schedule),
    }
}

pub fn apply_jitter(cloud: &PointCloud, spec: &CorruptionSpec) -> PointCloud {
    apply_jitter_with(cloud, spec, &CorruptionSchedule::default())
}

/// Gaussian noise on every coordinate. Normals are dropped since they no
/// longer describe the moved surface.
pub fn apply_jitter_with(cloud: &PointCloud, spec: &CorruptionSpec, schedule: &CorruptionSchedule) -> PointCloud {
    let sigma = schedule.jitter_sigma * spec.severity as f64;
    let noise = Normal::new(0.0, sigma).expect("sigma is finite and non-negative");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (points, _, labels, class) = cloud.clone().into_parts();
    let points = points
        .into_iter()
        .map(|p| p.map(|x| x + noise.sample(&mut rng)))
        .collect();
    PointCloud::from_parts(points, None, labels, class)
}

pub fn apply_global_noise(cloud: &PointCloud, spec: &CorruptionSpec) -> PointCloud {
    apply_global_noise_with(cloud, spec, &CorruptionSchedule::default())
}

/// The cube centred on the bounding box, with side `scale` times the
/// longest box edge.
pub fn outlier_cube(cloud: &PointCloud, scale: f64) -> (Point3, f64) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in cloud.points() {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let centre = [0, 1, 2].map(|a| 0.5 * (lo[a] + hi[a]));
    let edge = (0..3).map(|a| hi[a] - lo[a]).fold(0.0, f64::max);
    (centre, 0.5 * scale * edge)
}

/// Appends uniform outliers; the original points are untouched. Outliers get
/// the reserved label when the cloud has point labels, and random unit
/// normals when it has normals.
pub fn apply_global_noise_with(cloud: &PointCloud, spec: &CorruptionSpec, schedule: &CorruptionSchedule) -> PointCloud {
    let count = schedule.outliers_per_level * spec.severity as usize;
    let (centre, half) = outlier_cube(cloud, schedule.cube_scale);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (mut points, mut normals, mut labels, class) = cloud.clone().into_parts();
    for _ in 0..count {
        points.push(centre.map(|c| c + half * rng.random_range(-1.0..=1.0)));
        if let Some(ns) = normals.as_mut() {
            ns.push(random_unit(&mut rng));
        }
        if let Some(ls) = labels.as_mut() {
            ls.push(OUTLIER_LABEL);
        }
    }
    PointCloud::from_parts(points, normals, labels, class)
}

fn random_unit(rng: &mut ChaCha8Rng) -> Point3 {
    loop {
        let v: Point3 = [0; 3].map(|_| StandardNormal.sample(rng));
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-9 {
            return v.map(|x| x / n);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RotationScenario {
    /// z-axis rotations on train and test.
    ZZ,
    /// z-axis on train, arbitrary rotations on test.
    ZSO3,
    SO3SO3,
}

impl RotationScenario {
    pub const ALL: [RotationScenario; 3] = [RotationScenario::ZZ, RotationScenario::ZSO3, RotationScenario::SO3SO3];

    pub fn modes(self) -> (RotationMode, RotationMode) {
        match self {
            RotationScenario::ZZ => (RotationMode::ZAxis, RotationMode::ZAxis),
            RotationScenario::ZSO3 => (RotationMode::ZAxis, RotationMode::SO3),
            RotationScenario::SO3SO3 => (RotationMode::SO3, RotationMode::SO3),
        }
    }
}

impl std::str::FromStr for RotationScenario {
    type Err = TfcwError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('/', "").as_str() {
            "zz" => Ok(RotationScenario::ZZ),
            "zso3" => Ok(RotationScenario::ZSO3),
            "so3so3" => Ok(RotationScenario::SO3SO3),
            other => Err(TfcwError::arg(format!("unknown rotation scenario '{other}'"))),
        }
    }
}

/// Rotates every cloud by its own seeded rotation. Per-cloud seeds are drawn
/// from `seed`, train clouds first.
pub fn rotation_scenario(
    train: &[PointCloud],
    test: &[PointCloud],
    scenario: RotationScenario,
    seed: u64,
) -> (Vec<PointCloud>, Vec<PointCloud>) {
    let (train_mode, test_mode) = scenario.modes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rotate = |clouds: &[PointCloud], mode| -> Vec<PointCloud> {
        clouds
            .iter()
            .map(|c| apply_rotation(c, &random_rotation(rng.random(), mode)))
            .collect()
    };
    let a = rotate(train, train_mode);
    let b = rotate(test, test_mode);
    (a, b)
}

/// Features of `clouds` computed in batches of `batch_size`, optionally in a
/// seeded shuffled order, returned in the original order.
pub fn batched_features(
    clouds: &[PointCloud],
    batch_size: usize,
    shuffle: bool,
    seed: u64,
    cfg: &PipelineConfig,
) -> Result<Array2<f64>> {
    if batch_size == 0 {
        return Err(TfcwError::arg("batch size must be positive"));
    }
    if clouds.is_empty() {
        return Err(TfcwError::arg("no clouds to encode"));
    }
    let mut order: Vec<usize> = (0..clouds.len()).collect();
    if shuffle {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; clouds.len()];
    for chunk in order.chunks(batch_size) {
        let batch: Vec<PointCloud> = chunk.iter().map(|&i| clouds[i].clone()).collect();
        for (&i, f) in chunk.iter().zip(encode_batch(&batch, cfg)?) {
            rows[i] = Some(f.to_vec());
        }
    }
    let width = rows[0].as_ref().map_or(0, Vec::len);
    let flat: Vec<f64> = rows.into_iter().flat_map(|r| r.expect("every cloud encoded")).collect();
    Array2::from_shape_vec((clouds.len(), width), flat).map_err(|e| TfcwError::Invariant(e.to_string()))
}

pub const STABILITY_BATCH_SIZES: [usize; 6] = [1, 2, 4, 8, 16, 32];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub batch_size: usize,
    pub shuffled: bool,
    /// Largest absolute difference from the batch-size-1 unshuffled features.
    pub max_deviation: f64,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
}

impl StabilityReport {
    pub fn max_deviation(&self) -> f64 {
        self.rows.iter().map(|r| r.max_deviation).fold(0.0, f64::max)
    }
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn shuffle_stability_check(
    clouds: &[PointCloud],
    batch_sizes: &[usize],
    shuffle: bool,
    cfg: &PipelineConfig,
) -> Result<StabilityReport> {
    let reference = batched_features(clouds, 1, false, cfg.seed, cfg)?;
    let rows = batch_sizes
        .iter()
        .map(|&bs| {
            let f = batched_features(clouds, bs, shuffle, cfg.seed, cfg)?;
            Ok(StabilityRow {
                batch_size: bs,
                shuffled: shuffle,
                max_deviation: max_abs_diff(&reference, &f),
                accuracy: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilityReport { rows })
}

/// Every (batch size, shuffle) combination for both splits, with the
/// classification accuracy each combination yields.
pub fn stability_study(
    train: &Dataset,
    test: &Dataset,
    batch_sizes: &[usize],
    cfg: &PipelineConfig,
    gamma: f64,
) -> Result<StabilityReport> {
    let train_labels = train.class_labels()?;
    let test_labels = test.class_labels()?;
    let ref_train = batched_features(&train.clouds, 1, false, cfg.seed, cfg)?;
    let ref_test = batched_features(&test.clouds, 1, false, cfg.seed, cfg)?;
    let mut rows = Vec::new();
    for shuffle in [false, true] {
        for &bs in batch_sizes {
            let ftr = batched_features(&train.clouds, bs, shuffle, cfg.seed, cfg)?;
            let fte = batched_features(&test.clouds, bs, shuffle, cfg.seed.wrapping_add(1), cfg)?;
            let bank = MemoryBank::build(ftr.view(), &train_labels, train.num_classes, gamma)?;
            let pred = bank.predict(fte.view())?.labels;
            let correct = pred.iter().zip(&test_labels).filter(|(a, b)| a == b).count();
            rows.push(StabilityRow {
                batch_size: bs,
                shuffled: shuffle,
                max_deviation: max_abs_diff(&ref_train, &ftr).max(max_abs_diff(&ref_test, &fte)),
                accuracy: Some(correct as f64 / test_labels.len() as f64),
            });
        }
    }
    Ok(StabilityReport { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub point_counts: Vec<usize>,
    /// Seconds per encode, best of the repeats.
    pub wall_times: Vec<f64>,
    /// Peak bytes allocated during an encode; zero when the tracking
    /// allocator is not installed.
    pub peak_memory: Vec<usize>,
    /// Set when the run stopped because memory could not be reserved.
    pub allocation_failure_at: Option<usize>,
}

impl ScalingReport {
    /// Least-squares slope of log(time) against log(points).
    pub fn time_slope(&self) -> Option<f64> {
        log_log_slope(&self.point_counts, &self.wall_times)
    }
}

pub fn log_log_slope(xs: &[usize], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(&x, &y)| x > 0 && y > 0.0)
        .map(|(&x, &y)| ((x as f64).ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Encodes uniform random clouds of `start, start + step, ...` points up to
/// `limit`. Sizes run one after another so memory readings do not mix.
/// Before each size a buffer of twice the previous peak (scaled to the new
/// size) is reserved and released; failure to reserve ends the run.
pub fn volume_scaling_run(
    start: usize,
    step: usize,
    limit: usize,
    repeats: usize,
    cfg: &PipelineConfig,
) -> Result<ScalingReport> {
    if start == 0 || step == 0 || limit < start {
        return Err(TfcwError::arg("need 0 < start <= limit and step > 0"));
    }
    let mut report = ScalingReport {
        point_counts: Vec::new(),
        wall_times: Vec::new(),
        peak_memory: Vec::new(),
        allocation_failure_at: None,
    };
    let mut n = start;
    while n <= limit {
        let guess = report
            .peak_memory
            .last()
            .zip(report.point_counts.last())
            .map(|(&m, &p)| 2 * m * n / p.max(1))
            .unwrap_or(0);
        let mut probe: Vec<u8> = Vec::new();
        if probe.try_reserve_exact(guess).is_err() {
            report.allocation_failure_at = Some(n);
            break;
        }
        drop(probe);

        let cloud = synthetic::uniform_cube_volume(n, cfg.seed.wrapping_add(n as u64));
        let mut best = f64::INFINITY;
        let mut peak = 0;
        for _ in 0..repeats.max(1) {
            let t0 = Instant::now();
            let (res, bytes) = alloc::measure_peak(|| encode_classification(&cloud, cfg));
            let dt = t0.elapsed().as_secs_f64();
            res?;
            best = best.min(dt);
            peak = peak.max(bytes);
        }
        report.point_counts.push(n);
        report.wall_times.push(best);
        report.peak_memory.push(peak);
        n += step;
    }
    Ok(report)
}
