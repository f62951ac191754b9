use nalgebra::{Matrix3, Quaternion, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Point3, PointCloud};
use crate::error::{Result, TfcwError};

const ORTHO_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationMode {
    /// Uniform angle about the z axis.
    ZAxis,
    /// Haar-uniform over SO(3).
    SO3,
}

/// A proper rotation: orthonormal with determinant +1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn identity() -> Self {
        RotationMatrix(Matrix3::identity())
    }

    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        let err = (m.transpose() * m - Matrix3::identity()).abs().max();
        let det = m.determinant();
        if !err.is_finite() || err > ORTHO_TOLERANCE || !det.is_finite() || (det - 1.0).abs() > ORTHO_TOLERANCE {
            return Err(TfcwError::input(format!(
                "not a rotation: orthogonality error {err:e}, det {det}"
            )));
        }
        Ok(RotationMatrix(m))
    }

    /// Rotation about the z axis. The third row and column are set exactly so
    /// e_z maps to itself without rounding.
    pub fn about_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        RotationMatrix(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        RotationMatrix(self.0.transpose())
    }

    pub fn apply(&self, p: &Point3) -> Point3 {
        let m = &self.0;
        [
            m[(0, 0)] * p[0] + m[(0, 1)] * p[1] + m[(0, 2)] * p[2],
            m[(1, 0)] * p[0] + m[(1, 1)] * p[1] + m[(1, 2)] * p[2],
            m[(2, 0)] * p[0] + m[(2, 1)] * p[1] + m[(2, 2)] * p[2],
        ]
    }

    /// Largest deviation of mᵀm from I and of det(m) from 1.
    pub fn orthonormality_error(&self) -> f64 {
        let e = (self.0.transpose() * self.0 - Matrix3::identity()).abs().max();
        e.max((self.0.determinant() - 1.0).abs())
    }

    pub fn is_identity(&self) -> bool {
        self.0 == Matrix3::identity()
    }
}

/// Deterministic rotation for `(seed, mode)`. SO(3) samples use a uniform
/// unit quaternion.
pub fn random_rotation(seed: u64, mode: RotationMode) -> RotationMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match mode {
        RotationMode::ZAxis => RotationMatrix::about_z(rng.random::<f64>() * std::f64::consts::TAU),
        RotationMode::SO3 => {
            let u1: f64 = rng.random();
            let u2: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            let u3: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
            let q = Quaternion::new(b * u3.cos(), a * u2.sin(), a * u2.cos(), b * u3.sin());
            let r = UnitQuaternion::from_quaternion(q).to_rotation_matrix();
            RotationMatrix(*r.matrix())
        }
    }
}

/// Rotates points (and normals, if any). Labels are carried unchanged.
pub fn apply_rotation(cloud: &PointCloud, r: &RotationMatrix) -> PointCloud {
    let (points, normals, labels, class) = cloud.clone().into_parts();
    let points = points.iter().map(|p| r.apply(p)).collect();
    let normals = normals.map(|ns| ns.iter().map(|n| r.apply(n)).collect());
    PointCloud::from_parts(points, normals, labels, class)
}
