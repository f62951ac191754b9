//! Flat point container. Little-endian throughout:
//!
//! ```text
//! magic "TFCWPTS" | version u32 | cloud count u32
//! per cloud: N u32 | class i32 (-1 = none) | labels flag u8
//!            N×3 f32 coordinates | N u16 labels if flagged
//! ```
//!
//! Normals are not stored. Coordinates are narrowed to f32.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::binary::Reader;
use super::{Dataset, Split};
use crate::error::{Result, TfcwError};
use crate::geometry::PointCloud;

pub const POINTS_MAGIC: &[u8; 7] = b"TFCWPTS";
pub const POINTS_VERSION: u32 = 1;

pub fn write_points<W: Write>(ds: &Dataset, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    let count = u32::try_from(ds.len()).map_err(|_| TfcwError::arg("too many clouds"))?;
    w.write_all(POINTS_MAGIC)?;
    w.write_all(&POINTS_VERSION.to_le_bytes())?;
    w.write_all(&count.to_le_bytes())?;
    for c in &ds.clouds {
        let n = u32::try_from(c.len()).map_err(|_| TfcwError::arg("cloud too large"))?;
        let class = match c.class_label() {
            None => -1i32,
            Some(l) => i32::try_from(l).map_err(|_| TfcwError::arg("class label too large"))?,
        };
        w.write_all(&n.to_le_bytes())?;
        w.write_all(&class.to_le_bytes())?;
        w.write_all(&[c.point_labels().is_some() as u8])?;
        for p in c.points() {
            for &x in p {
                w.write_all(&(x as f32).to_le_bytes())?;
            }
        }
        if let Some(labels) = c.point_labels() {
            for &l in labels {
                w.write_all(&l.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a whole container; `num_classes` is one more than the largest class.
pub fn read_points<R: Read>(r: R, name: &str, split: Split) -> Result<Dataset> {
    let mut r = Reader::new(BufReader::new(r));
    if &r.bytes::<7>()? != POINTS_MAGIC {
        return Err(TfcwError::Format("bad magic, expected TFCWPTS".into()));
    }
    let version = r.u32()?;
    if version != POINTS_VERSION {
        return Err(TfcwError::Format(format!("unsupported points version {version}")));
    }
    let count = r.u32()? as usize;
    let mut clouds = Vec::with_capacity(count.min(1 << 16));
    for ci in 0..count {
        let n = r.u32()? as usize;
        let class = r.i32()?;
        let flag = r.u8()?;
        if flag > 1 {
            return Err(TfcwError::Format(format!("cloud {ci}: bad label flag {flag}")));
        }
        let mut points = Vec::with_capacity(n.min(1 << 24));
        for _ in 0..n {
            points.push([r.f32()? as f64, r.f32()? as f64, r.f32()? as f64]);
        }
        let mut cloud = PointCloud::new(points).map_err(|e| TfcwError::Format(format!("cloud {ci}: {e}")))?;
        if flag == 1 {
            let labels = (0..n).map(|_| r.u16()).collect::<Result<Vec<_>>>()?;
            cloud = cloud.with_point_labels(labels)?;
        }
        match class {
            -1 => {}
            c if c >= 0 => cloud = cloud.with_class_label(c as u32),
            c => return Err(TfcwError::Format(format!("cloud {ci}: bad class label {c}"))),
        }
        clouds.push(cloud);
    }
    r.expect_end()?;
    let num_classes = clouds
        .iter()
        .filter_map(|c| c.class_label())
        .map(|l| l as usize + 1)
        .max()
        .unwrap_or(0);
    Dataset::new(name, clouds, split, num_classes)
}

pub fn save_points_bin(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_points(ds, File::create(path).map_err(TfcwError::at_path(path))?)
}

pub fn load_points_bin(path: impl AsRef<Path>, split: Split) -> Result<Dataset> {
    let path = path.as_ref();
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("points").to_string();
    let file = File::open(path).map_err(TfcwError::at_path(path))?;
    read_points(file, &name, split)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset() -> Dataset {
        let a = PointCloud::new(vec![[0.5, -1.25, 2.0], [0.0, 0.0, 0.125]])
            .unwrap()
            .with_class_label(3);
        let b = PointCloud::new(vec![[1.0, 2.0, 3.0]]).unwrap().with_point_labels(vec![7]).unwrap();
        Dataset::new("toy", vec![a, b], Split::Test, 4).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let ds = dataset();
        let mut buf = Vec::new();
        write_points(&ds, &mut buf).unwrap();
        let back = read_points(buf.as_slice(), "toy", Split::Test).unwrap();
        assert_eq!(back, ds);
        let mut again = Vec::new();
        write_points(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn truncation_is_an_error() {
        let mut buf = Vec::new();
        write_points(&dataset(), &mut buf).unwrap();
        for cut in 0..buf.len() {
            assert!(matches!(read_points(&buf[..cut], "t", Split::Train), Err(TfcwError::Format(_))), "cut {cut}");
        }
    }

    #[test]
    fn empty_container() {
        let ds = Dataset::new("empty", vec![], Split::Train, 0).unwrap();
        let mut buf = Vec::new();
        write_points(&ds, &mut buf).unwrap();
        assert_eq!(buf.len(), 15);
        let back = read_points(buf.as_slice(), "empty", Split::Train).unwrap();
        assert!(back.is_empty());
    }

    #[test]
    fn bad_magic() {
        assert!(matches!(read_points(&b"TFCWPTX\x01\0\0\0\0\0\0\0"[..], "x", Split::Train), Err(TfcwError::Format(_))));
    }
}
