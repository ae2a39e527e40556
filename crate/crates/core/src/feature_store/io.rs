use std::fs;
use std::io::Write;
use std::path::Path;

use super::FeaturePool;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"FPL1";
const HEADER_LEN: usize = 12;

/// On-disk pool encodings.
///
/// `Binary` is `FPL1`: the magic bytes, `N` and `C` as little-endian `u32`,
/// then `N * C` little-endian `f32` values row-major. `Csv` is one row per
/// item, comma-separated, no header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolFormat {
    Binary,
    Csv,
}

impl PoolFormat {
    /// `.csv` maps to CSV, anything else to FPL1.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => PoolFormat::Csv,
            _ => PoolFormat::Binary,
        }
    }
}

pub fn load_pool(path: impl AsRef<Path>, format: PoolFormat, normalize: bool) -> Result<FeaturePool> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        PoolFormat::Binary => decode_binary(&bytes, normalize),
        PoolFormat::Csv => decode_csv(&bytes, normalize),
    }
}

pub fn save_pool(pool: &FeaturePool, path: impl AsRef<Path>, format: PoolFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        PoolFormat::Binary => encode_binary(pool)?,
        PoolFormat::Csv => encode_csv(pool),
    };
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn encode_binary(pool: &FeaturePool) -> Result<Vec<u8>> {
    let n = u32::try_from(pool.n()).map_err(|_| Error::invalid("pool too large for FPL1"))?;
    let c = u32::try_from(pool.dim()).map_err(|_| Error::invalid("dimension too large for FPL1"))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * pool.as_slice().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(&c.to_le_bytes());
    for x in pool.as_slice() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    Ok(out)
}

fn decode_binary(bytes: &[u8], normalize: bool) -> Result<FeaturePool> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("header needs {HEADER_LEN} bytes, file has {}", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("missing FPL1 magic".into()));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let c = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if n == 0 || c == 0 {
        return Err(Error::Format(format!("header declares an empty pool ({n} x {c})")));
    }
    let payload = &bytes[HEADER_LEN..];
    let expected = n
        .checked_mul(c)
        .and_then(|k| k.checked_mul(4))
        .ok_or_else(|| Error::Format("header dimensions overflow".into()))?;
    if payload.len() != expected {
        return Err(Error::DimensionMismatch {
            expected: n * c,
            found: payload.len() / 4,
        });
    }
    let data = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    FeaturePool::new(c, data, normalize)
}

fn encode_csv(pool: &FeaturePool) -> Vec<u8> {
    let mut out = String::new();
    for row in pool.rows() {
        let mut first = true;
        for x in row {
            if !first {
                out.push(',');
            }
            first = false;
            // Display for f32 is the shortest string that parses back to the same value.
            out.push_str(&x.to_string());
        }
        out.push('\n');
    }
    out.into_bytes()
}

fn decode_csv(bytes: &[u8], normalize: bool) -> Result<FeaturePool> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut dim = None;
    let mut data = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::DimensionMismatch {
                expected: *expected_len as usize,
                found: *len as usize,
            },
            _ => Error::Format(e.to_string()),
        })?;
        let width = *dim.get_or_insert(record.len());
        if record.len() != width {
            return Err(Error::DimensionMismatch {
                expected: width,
                found: record.len(),
            });
        }
        for field in &record {
            let x: f32 = field
                .parse()
                .map_err(|_| Error::Format(format!("row {row}: cannot parse {field:?} as a float")))?;
            data.push(x);
        }
    }
    let dim = dim.ok_or_else(|| Error::Format("CSV pool has no rows".into()))?;
    FeaturePool::new(dim, data, normalize)
}
