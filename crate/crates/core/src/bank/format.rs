//! Binary bank container. Little-endian throughout:
//!
//! ```text
//! magic "TFCWBANK" | version u32 | M u32 | F u32 | L u32 | gamma f64
//! M×F f32 features (row-major) | M u16 labels
//! ```

use std::io::{Read, Write};

use ndarray::Array2;

use super::MemoryBank;
use crate::error::{Result, TfcwError};
use crate::io::binary::Reader;

pub const BANK_MAGIC: &[u8; 8] = b"TFCWBANK";
pub const BANK_VERSION: u32 = 1;

pub fn write_bank<W: Write>(bank: &MemoryBank, mut w: W) -> Result<()> {
    let dim = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| TfcwError::arg(format!("{what} {v} does not fit the bank format")))
    };
    if bank.num_classes() > u16::MAX as usize {
        return Err(TfcwError::arg("too many classes for u16 labels"));
    }
    w.write_all(BANK_MAGIC)?;
    w.write_all(&BANK_VERSION.to_le_bytes())?;
    w.write_all(&dim(bank.len(), "bank size")?.to_le_bytes())?;
    w.write_all(&dim(bank.width(), "feature width")?.to_le_bytes())?;
    w.write_all(&dim(bank.num_classes(), "class count")?.to_le_bytes())?;
    w.write_all(&bank.gamma().to_le_bytes())?;
    let mut buf = Vec::with_capacity(bank.len() * bank.width() * 4 + bank.len() * 2);
    for &v in bank.features() {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    for &l in bank.labels() {
        buf.extend_from_slice(&(l as u16).to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

/// Reads a bank back. Features come back as stored (f32 precision); rows are
/// checked for unit norm but not renormalised.
pub fn read_bank<R: Read>(r: R) -> Result<MemoryBank> {
    let mut r = Reader::new(r);
    if &r.bytes::<8>()? != BANK_MAGIC {
        return Err(TfcwError::Format("bad magic, expected TFCWBANK".into()));
    }
    let version = r.u32()?;
    if version != BANK_VERSION {
        return Err(TfcwError::Format(format!("unsupported bank version {version}")));
    }
    let m = r.u32()? as usize;
    let f = r.u32()? as usize;
    let l = r.u32()? as usize;
    let gamma = r.f64()?;
    if m == 0 || l == 0 {
        return Err(TfcwError::Format("bank must hold at least one sample and one class".into()));
    }
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(TfcwError::Format(format!("invalid gamma {gamma}")));
    }
    let count = m.checked_mul(f).ok_or_else(|| TfcwError::Format("bank dimensions overflow".into()))?;
    let mut features = Vec::with_capacity(count.min(1 << 24));
    for _ in 0..count {
        features.push(r.f32()? as f64);
    }
    let mut labels = Vec::with_capacity(m.min(1 << 24));
    for _ in 0..m {
        let label = r.u16()? as usize;
        if label >= l {
            return Err(TfcwError::Format(format!("label {label} outside 0..{l}")));
        }
        labels.push(label);
    }
    r.expect_end()?;
    let features = Array2::from_shape_vec((m, f), features).expect("shape matches");
    for (i, row) in features.rows().into_iter().enumerate() {
        let n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (n - 1.0).abs() > 1e-6 {
            return Err(TfcwError::Format(format!("row {i} has norm {n}, expected 1")));
        }
    }
    Ok(MemoryBank::from_parts(features, labels, l, gamma))
}
