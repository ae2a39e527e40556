//! Machine-readable outputs: selection index files, JSON reports, and
//! configuration digests.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::matching::validate_indices;
use crate::metrics::LossSummary;
use crate::{Error, Result};

/// Bumped whenever a report field changes meaning or is removed.
pub const SCHEMA_VERSION: u32 = 1;

/// First 16 hex digits of the SHA-256 of the value's JSON encoding.
pub fn config_digest<T: Serialize + ?Sized>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config types serialize infallibly");
    Sha256::digest(&json)
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Ascending indices, one per line, newline-terminated.
pub fn format_indices(indices: &[usize]) -> String {
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    sorted.iter().map(|i| format!("{i}\n")).collect()
}

pub fn write_indices(path: impl AsRef<Path>, indices: &[usize]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_indices(indices)).map_err(|e| Error::io(path, e))
}

/// Parses an index file, rejecting blanks inside the list, duplicates, and
/// anything at or beyond `n`. Returns the indices sorted.
pub fn parse_indices(text: &str, n: usize) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let i = line
            .parse::<usize>()
            .map_err(|_| Error::InvalidSelection(format!("line {}: {line:?} is not an index", line_no + 1)))?;
        out.push(i);
    }
    validate_indices(&mut out, n)?;
    Ok(out)
}

pub fn read_indices(path: impl AsRef<Path>, n: usize) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_indices(&text, n)
}

/// Writes any report as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionMetrics {
    pub emd: f64,
    pub min_pairwise: Option<f64>,
    pub mean_nearest: f64,
}

/// Report written next to a selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectReport {
    pub schema_version: u32,
    pub method: String,
    pub config: serde_json::Value,
    pub config_digest: String,
    pub seed: u64,
    pub budget: usize,
    pub pool_size: usize,
    pub metrics: SelectionMetrics,
    /// Full-pool loss at the start and end of optimization (activeft only).
    pub loss: Option<LossSummary>,
    /// Only recorded on request, so reports are reproducible byte for byte.
    pub wall_time_ms: Option<u64>,
}

/// Output of evaluating an existing selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub pool_size: usize,
    pub budget: usize,
    pub metrics: SelectionMetrics,
    pub oracle: Option<OracleCheck>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub emd_closed_form: f64,
    pub emd_oracle: f64,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagReport {
    pub schema_version: u32,
    pub params_source: String,
    pub budget: usize,
    pub seed: u64,
    pub tau: f64,
    pub topk_mean_exp_sim: Vec<f64>,
    pub top1_ratio: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_roundtrip_sorted() {
        let text = format_indices(&[5, 0, 3]);
        assert_eq!(text, "0\n3\n5\n");
        assert_eq!(parse_indices(&text, 6).unwrap(), vec![0, 3, 5]);
    }

    #[test]
    fn indices_validation() {
        assert!(matches!(parse_indices("1\n1\n", 4), Err(Error::InvalidSelection(_))));
        assert!(matches!(parse_indices("7\n", 4), Err(Error::InvalidSelection(_))));
        assert!(matches!(parse_indices("a\n", 4), Err(Error::InvalidSelection(_))));
        assert!(matches!(parse_indices("", 4), Err(Error::InvalidSelection(_))));
    }

    #[test]
    fn digest_is_stable_and_sensitive() {
        let a = config_digest(&serde_json::json!({"b": 2}));
        assert_eq!(a.len(), 16);
        assert_eq!(a, config_digest(&serde_json::json!({"b": 2})));
        assert_ne!(a, config_digest(&serde_json::json!({"b": 3})));
    }
}
