//! Seeded synthetic shapes used by tests, benches and the `synth` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{Point3, PointCloud};
use crate::io::{Dataset, Split};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn unit_vector(rng: &mut ChaCha8Rng) -> Point3 {
    loop {
        let v: Point3 = [
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        ];
        let n = crate::geometry::norm(&v);
        if n > 1e-9 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Uniform points on the unit sphere.
pub fn sphere_surface(n: usize, seed: u64) -> PointCloud {
    let mut r = rng(seed);
    PointCloud::new((0..n).map(|_| unit_vector(&mut r)).collect()).expect("n > 0")
}

/// Uniform points on the surface of the cube [-1, 1]³.
pub fn cube_surface(n: usize, seed: u64) -> PointCloud {
    let mut r = rng(seed);
    let pts = (0..n)
        .map(|_| {
            let face = r.random_range(0..6);
            let axis = face / 2;
            let sign = if face % 2 == 0 { -1.0 } else { 1.0 };
            let mut p = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
            p[axis] = sign;
            p
        })
        .collect();
    PointCloud::new(pts).expect("n > 0")
}

/// Points on an ellipsoid with the given semi-axes.
pub fn ellipsoid_surface(n: usize, axes: Point3, seed: u64) -> PointCloud {
    let mut r = rng(seed);
    let pts = (0..n)
        .map(|_| {
            let u = unit_vector(&mut r);
            [u[0] * axes[0], u[1] * axes[1], u[2] * axes[2]]
        })
        .collect();
    PointCloud::new(pts).expect("n > 0")
}

/// A generic smooth closed surface: an ellipsoid with random distinct axes.
/// Has no rotational symmetry and well-separated local PCA eigenvalues.
pub fn random_blob(n: usize, seed: u64) -> PointCloud {
    let mut r = rng(seed ^ 0x5eed_b10b);
    let axes = [r.random_range(0.6..1.0), r.random_range(1.1..1.5), r.random_range(1.6..2.0)];
    ellipsoid_surface(n, axes, seed)
}

/// Uniform points in the unit cube [0, 1)³.
pub fn uniform_cube_volume(n: usize, seed: u64) -> PointCloud {
    let mut r = rng(seed);
    PointCloud::new((0..n).map(|_| [r.random(), r.random(), r.random()]).collect()).expect("n > 0")
}

/// Independent non-degenerate Gaussian points.
pub fn gaussian_cloud(n: usize, seed: u64) -> PointCloud {
    let mut r = rng(seed);
    let pts = (0..n)
        .map(|_| {
            [
                StandardNormal.sample(&mut r),
                StandardNormal.sample(&mut r),
                StandardNormal.sample(&mut r),
            ]
        })
        .collect();
    PointCloud::new(pts).expect("n > 0")
}

fn stretched(cloud: &PointCloud, rng: &mut ChaCha8Rng) -> PointCloud {
    let s: Point3 = [rng.random_range(0.8..1.2), rng.random_range(0.8..1.2), rng.random_range(0.8..1.2)];
    let pts = cloud
        .points()
        .iter()
        .map(|p| [p[0] * s[0], p[1] * s[1], p[2] * s[2]])
        .collect();
    PointCloud::new(pts).expect("non-empty")
}

/// Two-class dataset: anisotropically stretched spheres (class 0) and cubes
/// (class 1), alternating, each normalised to the unit sphere.
pub fn sphere_cube_dataset(per_class: usize, n: usize, seed: u64, split: Split) -> Dataset {
    let mut r = rng(seed);
    let mut clouds = Vec::with_capacity(2 * per_class);
    for _ in 0..per_class {
        for class in 0..2u32 {
            let s = r.random::<u64>();
            let base = if class == 0 {
                sphere_surface(n, s)
            } else {
                cube_surface(n, s)
            };
            clouds.push(stretched(&base, &mut r).normalized_unit_sphere().with_class_label(class));
        }
    }
    Dataset {
        name: "sphere-cube".into(),
        clouds,
        split,
        num_classes: 2,
    }
}

/// Cylinder side (part 0) capped by a hemisphere (part 1), with random
/// radius and height; points are spread by surface area.
pub fn capped_cylinder(n: usize, seed: u64) -> PointCloud {
    let mut r = rng(seed);
    let radius: f64 = r.random_range(0.4..0.6);
    let height: f64 = r.random_range(1.0..2.0);
    let side_area = std::f64::consts::TAU * radius * height;
    let cap_area = std::f64::consts::TAU * radius * radius;
    let p_side = side_area / (side_area + cap_area);
    let mut pts = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        if r.random::<f64>() < p_side {
            let t = r.random_range(0.0..std::f64::consts::TAU);
            pts.push([radius * t.cos(), radius * t.sin(), r.random_range(0.0..height)]);
            labels.push(0);
        } else {
            let mut u = unit_vector(&mut r);
            u[2] = u[2].abs();
            pts.push([radius * u[0], radius * u[1], height + radius * u[2]]);
            labels.push(1);
        }
    }
    PointCloud::new(pts)
        .and_then(|c| c.with_point_labels(labels))
        .expect("n > 0")
        .normalized_unit_sphere()
        .with_class_label(0)
}

pub fn capped_cylinder_dataset(count: usize, n: usize, seed: u64, split: Split) -> Dataset {
    let mut r = rng(seed);
    Dataset {
        name: "capped-cylinder".into(),
        clouds: (0..count).map(|_| capped_cylinder(n, r.random())).collect(),
        split,
        num_classes: 2,
    }
}
