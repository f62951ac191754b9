use serde::{Deserialize, Serialize};

use crate::error::{Result, TfcwError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification,
    PartSegmentation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub overall_accuracy: f64,
    /// Accuracy per label; `None` where the label never occurs in the truth.
    pub per_class_accuracy: Vec<Option<f64>>,
    /// Mean over shapes of the per-shape mean part IoU.
    pub miou: Option<f64>,
}

/// `pred` and `truth` hold one entry per sample. For classification each
/// entry is a single-element list; for part segmentation each entry is one
/// shape's per-point labels.
pub fn compute_metrics(pred: &[Vec<usize>], truth: &[Vec<usize>], num_labels: usize, task: Task) -> Result<Metrics> {
    if pred.len() != truth.len() {
        return Err(TfcwError::arg(format!("{} predictions for {} samples", pred.len(), truth.len())));
    }
    for (i, (p, t)) in pred.iter().zip(truth).enumerate() {
        if p.len() != t.len() {
            return Err(TfcwError::arg(format!("sample {i}: {} predictions for {} labels", p.len(), t.len())));
        }
        if let Some(&l) = p.iter().chain(t).find(|&&l| l >= num_labels) {
            return Err(TfcwError::arg(format!("label {l} outside 0..{num_labels}")));
        }
    }

    let mut hits = vec![0usize; num_labels];
    let mut seen = vec![0usize; num_labels];
    let (mut correct, mut total) = (0usize, 0usize);
    for (p, t) in pred.iter().zip(truth) {
        for (&a, &b) in p.iter().zip(t) {
            seen[b] += 1;
            total += 1;
            if a == b {
                hits[b] += 1;
                correct += 1;
            }
        }
    }
    let overall_accuracy = if total == 0 { 0.0 } else { correct as f64 / total as f64 };
    let per_class_accuracy = hits
        .iter()
        .zip(&seen)
        .map(|(&h, &s)| (s > 0).then(|| h as f64 / s as f64))
        .collect();

    let miou = match task {
        Task::Classification => None,
        Task::PartSegmentation => {
            let shapes: Vec<f64> = pred
                .iter()
                .zip(truth)
                .filter(|(p, _)| !p.is_empty())
                .map(|(p, t)| shape_iou(p, t, num_labels))
                .collect();
            Some(if shapes.is_empty() { 0.0 } else { shapes.iter().sum::<f64>() / shapes.len() as f64 })
        }
    };
    Ok(Metrics {
        overall_accuracy,
        per_class_accuracy,
        miou,
    })
}

/// Mean IoU over parts present in either prediction or truth.
fn shape_iou(pred: &[usize], truth: &[usize], num_parts: usize) -> f64 {
    let mut inter = vec![0usize; num_parts];
    let mut union = vec![0usize; num_parts];
    for (&a, &b) in pred.iter().zip(truth) {
        if a == b {
            inter[a] += 1;
            union[a] += 1;
        } else {
            union[a] += 1;
            union[b] += 1;
        }
    }
    let ious: Vec<f64> = inter
        .iter()
        .zip(&union)
        .filter(|(_, &u)| u > 0)
        .map(|(&i, &u)| i as f64 / u as f64)
        .collect();
    ious.iter().sum::<f64>() / ious.len() as f64
}
