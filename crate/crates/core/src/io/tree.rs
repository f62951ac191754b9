//! Class-per-directory mesh collections (`root/<class>/<split>/*.off`).

use std::path::{Path, PathBuf};

use super::off::{load_off_str, sample_mesh_surface};
use super::{Dataset, Split};
use crate::error::{Result, TfcwError};
use crate::par;

fn split_dir(split: Split) -> &'static str {
    match split {
        Split::Train => "train",
        Split::Test => "test",
        Split::Val => "val",
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    out.sort();
    Ok(out)
}

/// Samples `points` surface points from every mesh of one split. Classes
/// are the sub-directories of `root` in sorted order; each mesh gets the
/// seed `seed + its index` so results do not depend on scheduling.
pub fn load_off_tree(root: impl AsRef<Path>, split: Split, points: usize, seed: u64) -> Result<Dataset> {
    let root = root.as_ref();
    let classes: Vec<PathBuf> = sorted_entries(root)?.into_iter().filter(|p| p.is_dir()).collect();
    if classes.is_empty() {
        return Err(TfcwError::input(format!("no class directories under {}", root.display())));
    }
    let mut files = Vec::new();
    for (label, class_dir) in classes.iter().enumerate() {
        let dir = class_dir.join(split_dir(split));
        if !dir.is_dir() {
            continue;
        }
        for f in sorted_entries(&dir)? {
            if f.extension().is_some_and(|e| e.eq_ignore_ascii_case("off")) {
                files.push((label as u32, f));
            }
        }
    }
    let clouds = par::map_range(files.len(), |i| {
        let (label, path) = &files[i];
        let text = std::fs::read_to_string(path).map_err(TfcwError::at_path(path))?;
        let mesh = load_off_str(&text).map_err(|e| match e {
            TfcwError::Parse { line, msg } => TfcwError::Parse {
                line,
                msg: format!("{}: {msg}", path.display()),
            },
            other => other,
        })?;
        Ok(sample_mesh_surface(&mesh, points, seed.wrapping_add(i as u64))?
            .normalized_unit_sphere()
            .with_class_label(*label))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let name = root.file_name().and_then(|s| s.to_str()).unwrap_or("meshes").to_string();
    Dataset::new(name, clouds, split, classes.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn walks_classes_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let tri = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
        for class in ["b_class", "a_class"] {
            let d = dir.path().join(class).join("train");
            std::fs::create_dir_all(&d).unwrap();
            std::fs::write(d.join("x.off"), tri).unwrap();
        }
        let ds = load_off_tree(dir.path(), Split::Train, 64, 1).unwrap();
        assert_eq!(ds.num_classes, 2);
        assert_eq!(ds.class_labels().unwrap(), vec![0, 1]);
        assert_eq!(ds.clouds[0].len(), 64);
        assert!(load_off_tree(dir.path(), Split::Test, 64, 1).unwrap().is_empty());
    }
}
