//! ASCII OFF meshes.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, TfcwError};
use crate::geometry::{cross, norm, sub, Point3, PointCloud};

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point3>,
    /// Triangles; polygons are fan-triangulated on load.
    pub faces: Vec<[usize; 3]>,
}

impl Mesh {
    pub fn to_cloud(&self) -> Result<PointCloud> {
        PointCloud::new(self.vertices.clone())
    }

    fn area(&self, f: &[usize; 3]) -> f64 {
        let [a, b, c] = f.map(|i| self.vertices[i]);
        0.5 * norm(&cross(&sub(&b, &a), &sub(&c, &a)))
    }
}

/// Loads the vertices of an OFF file as a point cloud.
pub fn load_off(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(TfcwError::at_path(path))?;
    load_off_str(&text)?.to_cloud()
}

/// Lines with their 1-based numbers, skipping blanks and `#` comments.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn numbers<T: std::str::FromStr>(line: usize, text: &str) -> Result<Vec<T>> {
    text.split_whitespace()
        .map(|tok| tok.parse::<T>().map_err(|_| TfcwError::parse(line, format!("non-numeric token '{tok}'"))))
        .collect()
}

pub fn load_off_str(text: &str) -> Result<Mesh> {
    let mut lines = content_lines(text);
    let first = text.lines().next().unwrap_or("").trim();
    if !first.starts_with("OFF") {
        return Err(TfcwError::parse(1, format!("expected OFF header, found '{first}'")));
    }
    let (_, header) = lines.next().expect("first line is non-empty");
    // some exporters glue the counts onto the header: "OFF490 518 0"
    let rest = header["OFF".len()..].trim();
    let (count_line, counts_text) = if rest.is_empty() {
        lines.next().ok_or_else(|| TfcwError::parse(2, "missing vertex/face/edge counts"))?
    } else {
        (1, rest)
    };
    let counts: Vec<usize> = numbers(count_line, counts_text)?;
    if counts.len() < 2 {
        return Err(TfcwError::parse(count_line, "expected vertex and face counts"));
    }
    let (nv, nf) = (counts[0], counts[1]);

    let mut last = count_line;
    let mut vertices = Vec::with_capacity(nv);
    for v in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| TfcwError::parse(last + 1, format!("expected {nv} vertices, found {v}")))?;
        last = ln;
        let xs: Vec<f64> = numbers(ln, l)?;
        if xs.len() < 3 {
            return Err(TfcwError::parse(ln, "vertex needs three coordinates"));
        }
        if xs.iter().take(3).any(|x| !x.is_finite()) {
            return Err(TfcwError::parse(ln, "non-finite vertex coordinate"));
        }
        vertices.push([xs[0], xs[1], xs[2]]);
    }

    let mut faces = Vec::with_capacity(nf);
    for f in 0..nf {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| TfcwError::parse(last + 1, format!("expected {nf} faces, found {f}")))?;
        last = ln;
        let toks: Vec<&str> = l.split_whitespace().collect();
        let n: usize = toks[0]
            .parse()
            .map_err(|_| TfcwError::parse(ln, format!("non-numeric token '{}'", toks[0])))?;
        if n < 3 || toks.len() < n + 1 {
            return Err(TfcwError::parse(ln, format!("face declares {n} vertices but lists {}", toks.len() - 1)));
        }
        let idx: Vec<usize> = numbers(ln, &toks[1..=n].join(" "))?;
        if let Some(&bad) = idx.iter().find(|&&i| i >= nv) {
            return Err(TfcwError::parse(ln, format!("vertex index {bad} out of range")));
        }
        for w in 1..n - 1 {
            faces.push([idx[0], idx[w], idx[w + 1]]);
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(TfcwError::parse(ln, "unexpected content after the declared faces"));
    }
    Ok(Mesh { vertices, faces })
}

/// Uniform area-weighted surface sampling.
pub fn sample_mesh_surface(mesh: &Mesh, n: usize, seed: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(TfcwError::arg("sample count must be positive"));
    }
    let mut cumulative = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0;
    for f in &mesh.faces {
        total += mesh.area(f);
        cumulative.push(total);
    }
    if total.is_nan() || total <= 0.0 {
        return Err(TfcwError::input("mesh has no surface area to sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| {
            let t = rng.random::<f64>() * total;
            let fi = cumulative.partition_point(|&c| c <= t).min(mesh.faces.len() - 1);
            let [a, b, c] = mesh.faces[fi].map(|i| mesh.vertices[i]);
            let (r1, r2): (f64, f64) = (rng.random(), rng.random());
            let s = r1.sqrt();
            let (wa, wb, wc) = (1.0 - s, s * (1.0 - r2), s * r2);
            [0, 1, 2].map(|k| wa * a[k] + wb * b[k] + wc * c[k])
        })
        .collect();
    PointCloud::new(points)
}
