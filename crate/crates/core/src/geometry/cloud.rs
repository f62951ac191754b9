use super::{centroid, dist2, Point3};
use crate::error::{Result, TfcwError};

/// Label given to points that a corruption appends to a labelled cloud.
pub const OUTLIER_LABEL: u16 = u16::MAX;

const NORMAL_TOLERANCE: f64 = 1e-6;

/// An N×3 point set with optional unit normals, per-point labels and a class
/// label. Constructors validate the invariants; once built a cloud is never
/// mutated in place.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
    normals: Option<Vec<Point3>>,
    point_labels: Option<Vec<u16>>,
    class_label: Option<u32>,
}

/// Points, normals, point labels and class label.
pub(crate) type CloudParts = (Vec<Point3>, Option<Vec<Point3>>, Option<Vec<u16>>, Option<u32>);

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if points.is_empty() {
            return Err(TfcwError::input("point cloud must contain at least one point"));
        }
        if let Some(i) = points.iter().position(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(TfcwError::input(format!("point {i} has a non-finite coordinate")));
        }
        Ok(PointCloud {
            points,
            normals: None,
            point_labels: None,
            class_label: None,
        })
    }

    pub fn with_normals(mut self, normals: Vec<Point3>) -> Result<Self> {
        if normals.len() != self.points.len() {
            return Err(TfcwError::input(format!(
                "{} normals for {} points",
                normals.len(),
                self.points.len()
            )));
        }
        for (i, n) in normals.iter().enumerate() {
            let len = super::norm(n);
            if !len.is_finite() || (len - 1.0).abs() > NORMAL_TOLERANCE {
                return Err(TfcwError::input(format!("normal {i} has length {len}")));
            }
        }
        self.normals = Some(normals);
        Ok(self)
    }

    pub fn with_point_labels(mut self, labels: Vec<u16>) -> Result<Self> {
        if labels.len() != self.points.len() {
            return Err(TfcwError::input(format!(
                "{} labels for {} points",
                labels.len(),
                self.points.len()
            )));
        }
        self.point_labels = Some(labels);
        Ok(self)
    }

    pub fn with_class_label(mut self, label: u32) -> Self {
        self.class_label = Some(label);
        self
    }

    pub fn without_normals(mut self) -> Self {
        self.normals = None;
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false: a cloud holds at least one point.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn normals(&self) -> Option<&[Point3]> {
        self.normals.as_deref()
    }

    pub fn point_labels(&self) -> Option<&[u16]> {
        self.point_labels.as_deref()
    }

    pub fn class_label(&self) -> Option<u32> {
        self.class_label
    }

    pub fn centroid(&self) -> Point3 {
        centroid(&self.points)
    }

    /// Rows `indices` in the given order, carrying normals and labels along.
    pub fn subset(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            normals: self
                .normals
                .as_ref()
                .map(|n| indices.iter().map(|&i| n[i]).collect()),
            point_labels: self
                .point_labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
            class_label: self.class_label,
        }
    }

    /// Row permutation: row `i` of the result is row `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> PointCloud {
        self.subset(order)
    }

    /// Centroid moved to the origin and the farthest point scaled to radius 1.
    /// A cloud with zero extent is only translated.
    pub fn normalized_unit_sphere(&self) -> PointCloud {
        let c = self.centroid();
        let mut points: Vec<Point3> = self
            .points
            .iter()
            .map(|p| [p[0] - c[0], p[1] - c[1], p[2] - c[2]])
            .collect();
        let radius = points
            .iter()
            .map(|p| dist2(p, &[0.0; 3]))
            .fold(0.0f64, f64::max)
            .sqrt();
        if radius > 0.0 {
            for p in &mut points {
                for v in p.iter_mut() {
                    *v /= radius;
                }
            }
        }
        PointCloud {
            points,
            ..self.clone()
        }
    }

    pub(crate) fn from_parts(
        points: Vec<Point3>,
        normals: Option<Vec<Point3>>,
        point_labels: Option<Vec<u16>>,
        class_label: Option<u32>,
    ) -> PointCloud {
        debug_assert!(!points.is_empty());
        PointCloud {
            points,
            normals,
            point_labels,
            class_label,
        }
    }

    pub(crate) fn into_parts(self) -> CloudParts {
        (self.points, self.normals, self.point_labels, self.class_label)
    }
}
