//! End-to-end runs: encode, build a bank, predict, score.

use std::collections::BTreeMap;
use std::time::Instant;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::bank::{compute_metrics, sweep_gamma, MemoryBank, Metrics, Task};
use crate::error::{Result, TfcwError};
use crate::geometry::{PointCloud, OUTLIER_LABEL};
use crate::io::{config_hash, Dataset, Report};
use crate::par;
use crate::pipeline::{decode_segmentation, encode_batch, encode_segmentation, PipelineConfig};
use crate::tfcw::GramVariant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset: String,
    pub train_size: usize,
    pub test_size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub task: Task,
    pub config_hash: String,
    pub gamma: f64,
    pub metrics: Metrics,
    /// Seconds per phase: `encode_train`, `encode_test`, `predict`.
    pub timings: BTreeMap<String, f64>,
    /// Test samples per second over test encoding plus prediction.
    pub throughput: f64,
    pub provenance: Provenance,
}

impl RunResult {
    /// Copy with timing-dependent fields zeroed, for reproducibility checks.
    pub fn without_timings(&self) -> RunResult {
        RunResult {
            timings: self.timings.keys().map(|k| (k.clone(), 0.0)).collect(),
            throughput: 0.0,
            ..self.clone()
        }
    }
}

impl Report for RunResult {
    fn config_hash(&self) -> &str {
        &self.config_hash
    }

    fn dataset(&self) -> &str {
        &self.provenance.dataset
    }

    fn seed(&self) -> u64 {
        self.provenance.seed
    }

    fn metric_rows(&self) -> Vec<(String, f64)> {
        let mut rows = vec![("overall_accuracy".to_string(), self.metrics.overall_accuracy)];
        if let Some(m) = self.metrics.miou {
            rows.push(("miou".into(), m));
        }
        for (c, acc) in self.metrics.per_class_accuracy.iter().enumerate() {
            if let Some(a) = acc {
                rows.push((format!("class_accuracy_{c}"), *a));
            }
        }
        rows.push(("gamma".into(), self.gamma));
        for (phase, t) in &self.timings {
            rows.push((format!("time_{phase}_s"), *t));
        }
        rows.push(("throughput_per_s".into(), self.throughput));
        rows
    }
}

#[derive(Serialize)]
struct HashInput<'a> {
    task: Task,
    pipeline: &'a PipelineConfig,
    gamma: f64,
}

fn run_hash(task: Task, cfg: &PipelineConfig, gamma: f64) -> String {
    config_hash(&HashInput {
        task,
        pipeline: cfg,
        gamma,
    })
}

fn check_splits(train: &Dataset, test: &Dataset) -> Result<()> {
    if train.is_empty() || test.is_empty() {
        return Err(TfcwError::arg("train and test splits must both be non-empty"));
    }
    Ok(())
}

fn stack(rows: &[ndarray::Array1<f64>]) -> Result<Array2<f64>> {
    let views: Vec<_> = rows.iter().map(|r| r.view()).collect();
    ndarray::stack(Axis(0), &views).map_err(|e| TfcwError::Invariant(e.to_string()))
}

pub fn classification_features(clouds: &[PointCloud], cfg: &PipelineConfig) -> Result<Array2<f64>> {
    stack(&encode_batch(clouds, cfg)?)
}

pub fn run_classify(train: &Dataset, test: &Dataset, cfg: &PipelineConfig, gamma: f64) -> Result<RunResult> {
    check_splits(train, test)?;
    cfg.validate()?;
    if train.num_classes != test.num_classes {
        return Err(TfcwError::arg(format!(
            "train declares {} classes, test {}",
            train.num_classes, test.num_classes
        )));
    }
    let train_labels = train.class_labels()?;
    let test_labels = test.class_labels()?;

    let t0 = Instant::now();
    let ftr = classification_features(&train.clouds, cfg)?;
    let t1 = Instant::now();
    let fte = classification_features(&test.clouds, cfg)?;
    let t2 = Instant::now();
    let bank = MemoryBank::build(ftr.view(), &train_labels, train.num_classes, gamma)?;
    let pred = bank.predict(fte.view())?.labels;
    let t3 = Instant::now();

    let pred: Vec<Vec<usize>> = pred.into_iter().map(|p| vec![p]).collect();
    let truth: Vec<Vec<usize>> = test_labels.into_iter().map(|t| vec![t]).collect();
    let metrics = compute_metrics(&pred, &truth, train.num_classes, Task::Classification)?;
    Ok(finish(Task::Classification, cfg, gamma, metrics, train, test, [t0, t1, t2, t3]))
}

fn finish(
    task: Task,
    cfg: &PipelineConfig,
    gamma: f64,
    metrics: Metrics,
    train: &Dataset,
    test: &Dataset,
    marks: [Instant; 4],
) -> RunResult {
    let secs = |a: Instant, b: Instant| (b - a).as_secs_f64();
    let timings: BTreeMap<String, f64> = [
        ("encode_train", secs(marks[0], marks[1])),
        ("encode_test", secs(marks[1], marks[2])),
        ("predict", secs(marks[2], marks[3])),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let test_time = secs(marks[1], marks[3]);
    RunResult {
        task,
        config_hash: run_hash(task, cfg, gamma),
        gamma,
        metrics,
        throughput: if test_time > 0.0 { test.len() as f64 / test_time } else { 0.0 },
        timings,
        provenance: Provenance {
            dataset: test.name.clone(),
            train_size: train.len(),
            test_size: test.len(),
            seed: cfg.seed,
        },
    }
}

/// Dense per-point features of one cloud (encoder then decoder).
pub fn segmentation_features(cloud: &PointCloud, cfg: &PipelineConfig) -> Result<Array2<f64>> {
    decode_segmentation(&encode_segmentation(cloud, cfg)?, cfg)
}

fn point_labels(cloud: &PointCloud, i: usize) -> Result<&[u16]> {
    cloud
        .point_labels()
        .ok_or_else(|| TfcwError::input(format!("cloud {i} has no point labels")))
}

/// Per-point analogue of [`run_classify`]: every labelled training point
/// enters the bank. Points carrying the outlier label are left out of the
/// bank and of scoring.
pub fn run_segment(train: &Dataset, test: &Dataset, cfg: &PipelineConfig, gamma: f64) -> Result<RunResult> {
    check_splits(train, test)?;
    cfg.validate()?;
    let num_parts = train.num_point_labels().max(test.num_point_labels());
    if num_parts == 0 {
        return Err(TfcwError::input("no point labels in the training split"));
    }
    for (i, c) in test.clouds.iter().enumerate() {
        point_labels(c, i)?;
    }

    let t0 = Instant::now();
    let (bank_feats, bank_labels) = labelled_point_features(train, cfg)?;
    let t1 = Instant::now();
    let fte: Vec<Array2<f64>> = par::map_slice(&test.clouds, |c| segmentation_features(c, cfg))
        .into_iter()
        .collect::<Result<_>>()?;
    let t2 = Instant::now();
    let bank = MemoryBank::build(bank_feats.view(), &bank_labels, num_parts, gamma)?;
    let mut pred = Vec::with_capacity(test.len());
    let mut truth = Vec::with_capacity(test.len());
    for (c, f) in test.clouds.iter().zip(&fte) {
        let labels = c.point_labels().expect("checked");
        let p = bank.predict_pointwise(f.view())?;
        let keep: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != OUTLIER_LABEL).collect();
        pred.push(keep.iter().map(|&i| p[i]).collect());
        truth.push(keep.iter().map(|&i| labels[i] as usize).collect());
    }
    let t3 = Instant::now();
    let metrics = compute_metrics(&pred, &truth, num_parts, Task::PartSegmentation)?;
    Ok(finish(Task::PartSegmentation, cfg, gamma, metrics, train, test, [t0, t1, t2, t3]))
}

/// Flattened per-point features and labels of a labelled split, without
/// outlier points.
pub fn labelled_point_features(ds: &Dataset, cfg: &PipelineConfig) -> Result<(Array2<f64>, Vec<usize>)> {
    for (i, c) in ds.clouds.iter().enumerate() {
        point_labels(c, i)?;
    }
    let feats: Vec<Array2<f64>> = par::map_slice(&ds.clouds, |c| segmentation_features(c, cfg))
        .into_iter()
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, f) in ds.clouds.iter().zip(&feats) {
        for (row, &l) in f.rows().into_iter().zip(c.point_labels().expect("checked")) {
            if l != OUTLIER_LABEL {
                rows.push(row);
                labels.push(l as usize);
            }
        }
    }
    if rows.is_empty() {
        return Err(TfcwError::input("no labelled points"));
    }
    let stacked = ndarray::stack(Axis(0), &rows).map_err(|e| TfcwError::Invariant(e.to_string()))?;
    Ok((stacked, labels))
}

/// Gamma from `grid` with the best validation accuracy for classification.
pub fn select_gamma_classify(train: &Dataset, val: &Dataset, cfg: &PipelineConfig, grid: &[f64]) -> Result<f64> {
    check_splits(train, val)?;
    let ftr = classification_features(&train.clouds, cfg)?;
    let fval = classification_features(&val.clouds, cfg)?;
    sweep_gamma(
        ftr.view(),
        &train.class_labels()?,
        train.num_classes,
        fval.view(),
        &val.class_labels()?,
        grid,
    )
}

/// Gamma from `grid` with the best per-point validation accuracy.
pub fn select_gamma_segment(train: &Dataset, val: &Dataset, cfg: &PipelineConfig, grid: &[f64]) -> Result<f64> {
    check_splits(train, val)?;
    let num_parts = train.num_point_labels().max(val.num_point_labels());
    let (ftr, ltr) = labelled_point_features(train, cfg)?;
    let (fval, lval) = labelled_point_features(val, cfg)?;
    sweep_gamma(ftr.view(), &ltr, num_parts, fval.view(), &lval, grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    DiagonalVariants,
    Normalization,
    KSweep,
}

impl std::str::FromStr for Ablation {
    type Err = TfcwError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "diagonal" | "diagonalvariants" => Ok(Ablation::DiagonalVariants),
            "normalization" | "norm" => Ok(Ablation::Normalization),
            "k" | "ksweep" => Ok(Ablation::KSweep),
            other => Err(TfcwError::arg(format!("unknown ablation '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub setting: String,
    pub accuracy: f64,
    /// Accuracy divided by the best accuracy in the report.
    pub normalized_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub which: Ablation,
    pub config_hash: String,
    pub dataset: String,
    pub seed: u64,
    pub rows: Vec<AblationRow>,
}

impl Report for AblationReport {
    fn config_hash(&self) -> &str {
        &self.config_hash
    }

    fn dataset(&self) -> &str {
        &self.dataset
    }

    fn seed(&self) -> u64 {
        self.seed
    }

    fn metric_rows(&self) -> Vec<(String, f64)> {
        self.rows
            .iter()
            .flat_map(|r| {
                [
                    (format!("{}/accuracy", r.setting), r.accuracy),
                    (format!("{}/normalized_accuracy", r.setting), r.normalized_accuracy),
                ]
            })
            .collect()
    }
}

pub const DEFAULT_K_GRID: [usize; 6] = [8, 16, 24, 32, 48, 64];

/// Classification accuracy under each setting of one ablation axis.
pub fn run_ablation(
    train: &Dataset,
    test: &Dataset,
    cfg: &PipelineConfig,
    gamma: f64,
    which: Ablation,
    k_grid: &[usize],
) -> Result<AblationReport> {
    let settings: Vec<(String, PipelineConfig)> = match which {
        Ablation::DiagonalVariants => GramVariant::ALL
            .iter()
            .map(|&v| (v.name().to_string(), PipelineConfig { variant: v, ..cfg.clone() }))
            .collect(),
        Ablation::Normalization => [true, false]
            .iter()
            .map(|&on| {
                let name = if on { "std_normalize_on" } else { "std_normalize_off" };
                (name.to_string(), PipelineConfig { std_normalize: on, ..cfg.clone() })
            })
            .collect(),
        Ablation::KSweep => {
            if k_grid.is_empty() {
                return Err(TfcwError::arg("K grid is empty"));
            }
            k_grid
                .iter()
                .map(|&k| (format!("k={k}"), cfg.clone().with_uniform_k(k)))
                .collect()
        }
    };
    let mut rows = Vec::with_capacity(settings.len());
    for (setting, c) in &settings {
        let r = run_classify(train, test, c, gamma)?;
        rows.push(AblationRow {
            setting: setting.clone(),
            accuracy: r.metrics.overall_accuracy,
            normalized_accuracy: 0.0,
        });
    }
    let best = rows.iter().map(|r| r.accuracy).fold(0.0, f64::max);
    for r in &mut rows {
        r.normalized_accuracy = if best > 0.0 { r.accuracy / best } else { 0.0 };
    }
    #[derive(Serialize)]
    struct AblationHash<'a> {
        which: Ablation,
        pipeline: &'a PipelineConfig,
        gamma: f64,
        k_grid: &'a [usize],
    }
    Ok(AblationReport {
        which,
        config_hash: config_hash(&AblationHash {
            which,
            pipeline: cfg,
            gamma,
            k_grid,
        }),
        dataset: test.name.clone(),
        seed: cfg.seed,
        rows,
    })
}
