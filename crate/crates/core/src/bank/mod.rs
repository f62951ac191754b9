//! Similarity memory bank.
//!
//! Training features are stored as unit rows with their labels. A query row
//! `t` scores every bank row `m` by cosine similarity `s`, activates it with
//! `exp(-γ(1 - s))`, and accumulates the activation onto the bank row's
//! class. The predicted label is the arg-max class (lowest index on ties).

mod format;
mod metrics;

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Result, TfcwError};
use crate::par;

pub use format::{read_bank, write_bank, BANK_MAGIC, BANK_VERSION};
pub use metrics::{compute_metrics, Metrics, Task};

pub const DEFAULT_GAMMA: f64 = 100.0;
pub const GAMMA_GRID: [f64; 4] = [1.0, 10.0, 100.0, 1000.0];

/// Rows whose norm is this close to 1 are taken as already normalised.
const UNIT_SLACK: f64 = 4.0 * f64::EPSILON;

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryBank {
    features: Array2<f64>,
    labels: Vec<usize>,
    num_classes: usize,
    gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub logits: Array2<f64>,
    pub labels: Vec<usize>,
}

pub(crate) fn unit_row(row: ArrayView1<'_, f64>) -> Option<Vec<f64>> {
    let n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !n.is_finite() || n <= 0.0 {
        return None;
    }
    if (n - 1.0).abs() <= UNIT_SLACK {
        Some(row.to_vec())
    } else {
        Some(row.iter().map(|v| v / n).collect())
    }
}

impl MemoryBank {
    pub fn build(features: ArrayView2<'_, f64>, labels: &[usize], num_classes: usize, gamma: f64) -> Result<Self> {
        let (m, f) = features.dim();
        if m == 0 {
            return Err(TfcwError::arg("memory bank needs at least one sample"));
        }
        if labels.len() != m {
            return Err(TfcwError::arg(format!("{} labels for {m} feature rows", labels.len())));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(TfcwError::arg(format!("label {l} outside 0..{num_classes}")));
        }
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(TfcwError::arg(format!("gamma must be a finite non-negative number, got {gamma}")));
        }
        let mut data = Vec::with_capacity(m * f);
        for (i, row) in features.rows().into_iter().enumerate() {
            let unit = unit_row(row).ok_or_else(|| TfcwError::input(format!("feature row {i} has zero or non-finite norm")))?;
            data.extend(unit);
        }
        Ok(MemoryBank {
            features: Array2::from_shape_vec((m, f), data).expect("shape matches"),
            labels: labels.to_vec(),
            num_classes,
            gamma,
        })
    }

    pub(crate) fn from_parts(features: Array2<f64>, labels: Vec<usize>, num_classes: usize, gamma: f64) -> Self {
        MemoryBank {
            features,
            labels,
            num_classes,
            gamma,
        }
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn width(&self) -> usize {
        self.features.ncols()
    }

    pub fn labels_onehot(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.len(), self.num_classes));
        for (i, &l) in self.labels.iter().enumerate() {
            out[[i, l]] = 1.0;
        }
        out
    }

    /// Logits and arg-max labels for T×F query rows. Each row is handled on
    /// its own, so results never depend on what else is in the batch.
    pub fn predict(&self, test: ArrayView2<'_, f64>) -> Result<Prediction> {
        if test.ncols() != self.width() {
            return Err(TfcwError::arg(format!(
                "query width {} does not match bank width {}",
                test.ncols(),
                self.width()
            )));
        }
        let rows: Vec<Vec<f64>> = par::map_range(test.nrows(), |t| self.logits_row(test.row(t)));
        let mut logits = Array2::zeros((test.nrows(), self.num_classes));
        let mut labels = Vec::with_capacity(test.nrows());
        for (t, row) in rows.into_iter().enumerate() {
            labels.push(argmax(&row));
            for (c, v) in row.into_iter().enumerate() {
                logits[[t, c]] = v;
            }
        }
        Ok(Prediction { logits, labels })
    }

    /// Per-point labels for segmentation features.
    pub fn predict_pointwise(&self, per_point: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        Ok(self.predict(per_point)?.labels)
    }

    /// Arg-max labels under each of several gammas. Similarities are
    /// computed once per row; labels match [`MemoryBank::predict`] exactly.
    pub fn predict_for_gammas(&self, test: ArrayView2<'_, f64>, gammas: &[f64]) -> Result<Vec<Vec<usize>>> {
        if test.ncols() != self.width() {
            return Err(TfcwError::arg(format!(
                "query width {} does not match bank width {}",
                test.ncols(),
                self.width()
            )));
        }
        let per_row: Vec<Vec<usize>> = par::map_range(test.nrows(), |t| {
            let sims = self.similarities(test.row(t));
            gammas.iter().map(|&g| argmax(&self.logits_from(&sims, g))).collect()
        });
        Ok((0..gammas.len())
            .map(|g| per_row.iter().map(|r| r[g]).collect())
            .collect())
    }

    fn logits_row(&self, row: ArrayView1<'_, f64>) -> Vec<f64> {
        self.logits_from(&self.similarities(row), self.gamma)
    }

    fn similarities(&self, row: ArrayView1<'_, f64>) -> Vec<f64> {
        let q = unit_row(row).unwrap_or_else(|| vec![0.0; row.len()]);
        self.features
            .rows()
            .into_iter()
            .map(|b| dot(&q, b.as_slice().expect("bank rows are contiguous")))
            .collect()
    }

    fn logits_from(&self, sims: &[f64], gamma: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.num_classes];
        for (&s, &label) in sims.iter().zip(&self.labels) {
            out[label] += (-gamma * (1.0 - s)).exp();
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // eight independent lanes in a fixed order: vectorisable and reproducible
    let mut acc = [0.0; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn build_bank(features: ArrayView2<'_, f64>, labels: &[usize], num_classes: usize, gamma: f64) -> Result<MemoryBank> {
    MemoryBank::build(features, labels, num_classes, gamma)
}

/// Picks the grid value with the best validation accuracy; ties go to the
/// smallest gamma.
pub fn sweep_gamma(
    bank_features: ArrayView2<'_, f64>,
    bank_labels: &[usize],
    num_classes: usize,
    val_features: ArrayView2<'_, f64>,
    val_labels: &[usize],
    grid: &[f64],
) -> Result<f64> {
    if grid.is_empty() {
        return Err(TfcwError::arg("gamma grid is empty"));
    }
    let bank = MemoryBank::build(bank_features, bank_labels, num_classes, grid[0])?;
    let accs = gamma_accuracies(&bank, val_features, val_labels, grid)?;
    let mut best = 0;
    for g in 1..grid.len() {
        if accs[g] > accs[best] || (accs[g] == accs[best] && grid[g] < grid[best]) {
            best = g;
        }
    }
    Ok(grid[best])
}

/// Validation accuracy of `bank` under each gamma in `grid`.
pub fn gamma_accuracies(
    bank: &MemoryBank,
    val_features: ArrayView2<'_, f64>,
    val_labels: &[usize],
    grid: &[f64],
) -> Result<Vec<f64>> {
    if val_labels.len() != val_features.nrows() {
        return Err(TfcwError::arg("validation labels do not match features"));
    }
    let preds = bank.predict_for_gammas(val_features, grid)?;
    Ok(preds
        .iter()
        .map(|p| {
            let correct = p.iter().zip(val_labels).filter(|(a, b)| a == b).count();
            correct as f64 / val_labels.len().max(1) as f64
        })
        .collect())
}
