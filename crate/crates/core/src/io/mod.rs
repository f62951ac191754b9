//! Dataset containers, file formats, and result emission.

pub(crate) mod binary;
mod config;
mod off;
mod points;
mod results;
mod tree;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TfcwError};
use crate::geometry::{PointCloud, OUTLIER_LABEL};

pub use config::{config_hash, ExperimentConfig};
pub use off::{load_off, load_off_str, sample_mesh_surface, Mesh};
pub use points::{load_points_bin, read_points, save_points_bin, write_points, POINTS_MAGIC, POINTS_VERSION};
pub use tree::load_off_tree;
pub use results::{emit_results, results_csv, results_json, OutputFormat, Report, CSV_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
    Val,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub clouds: Vec<PointCloud>,
    pub split: Split,
    pub num_classes: usize,
}

impl Dataset {
    pub fn new(name: impl Into<String>, clouds: Vec<PointCloud>, split: Split, num_classes: usize) -> Result<Self> {
        let ds = Dataset {
            name: name.into(),
            clouds,
            split,
            num_classes,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.clouds.iter().enumerate() {
            if let Some(l) = c.class_label() {
                if l as usize >= self.num_classes {
                    return Err(TfcwError::input(format!(
                        "cloud {i} has class {l} but the dataset declares {} classes",
                        self.num_classes
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.clouds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clouds.is_empty()
    }

    /// Class label of every cloud; errors if any is missing.
    pub fn class_labels(&self) -> Result<Vec<usize>> {
        self.clouds
            .iter()
            .enumerate()
            .map(|(i, c)| {
                c.class_label()
                    .map(|l| l as usize)
                    .ok_or_else(|| TfcwError::input(format!("cloud {i} has no class label")))
            })
            .collect()
    }

    /// One more than the largest point label, ignoring the outlier sentinel.
    pub fn num_point_labels(&self) -> usize {
        self.clouds
            .iter()
            .filter_map(|c| c.point_labels())
            .flatten()
            .filter(|&&l| l != OUTLIER_LABEL)
            .map(|&l| l as usize + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn normalized(&self) -> Dataset {
        Dataset {
            clouds: self.clouds.iter().map(PointCloud::normalized_unit_sphere).collect(),
            ..self.clone()
        }
    }
}
