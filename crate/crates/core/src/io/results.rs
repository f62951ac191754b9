use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Result, TfcwError};

pub const CSV_HEADER: &str = "config_hash,dataset,metric,value,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = TfcwError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(TfcwError::arg(format!("unknown format '{other}', expected json or csv"))),
        }
    }
}

/// Anything that can be written as a result file.
pub trait Report: Serialize {
    fn config_hash(&self) -> &str;
    fn dataset(&self) -> &str;
    fn seed(&self) -> u64;
    /// `(metric, value)` pairs, one CSV line each.
    fn metric_rows(&self) -> Vec<(String, f64)>;
}

/// Pretty JSON with object keys in sorted order.
pub fn results_json<R: Report>(report: &R) -> Result<String> {
    let value = serde_json::to_value(report).map_err(|e| TfcwError::Invariant(e.to_string()))?;
    let mut text = serde_json::to_string_pretty(&value).map_err(|e| TfcwError::Invariant(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn results_csv<R: Report>(report: &R) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (metric, value) in report.metric_rows() {
        // Display for f64 prints the shortest string that parses back exactly
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            report.config_hash(),
            csv_field(report.dataset()),
            csv_field(&metric),
            value,
            report.seed()
        );
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn emit_results<R: Report>(report: &R, path: impl AsRef<Path>, format: OutputFormat) -> Result<()> {
    let text = match format {
        OutputFormat::Json => results_json(report)?,
        OutputFormat::Csv => results_csv(report),
    };
    std::fs::write(path, text)?;
    Ok(())
}
