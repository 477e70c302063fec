//! Dataset files.
//!
//! Binary layout (little-endian): magic `TEDJ`, version `u32 = 1`, `n: u64`,
//! `d: u64`, then `n * d` `f64` values row-major. Padding columns are never
//! stored. CSV holds one point per line with comma-separated decimal fields.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"TEDJ";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Binary,
}

impl Format {
    /// `.csv` / `.txt` map to CSV, anything else to binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") || ext.eq_ignore_ascii_case("txt") => {
                Format::Csv
            }
            _ => Format::Binary,
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "binary" | "bin" => Ok(Format::Binary),
            other => Err(Error::validation(format!("unknown dataset format '{other}'"))),
        }
    }
}

pub fn read_dataset(path: impl AsRef<Path>, format: Format) -> Result<Dataset> {
    let bytes = fs::read(path)?;
    match format {
        Format::Binary => decode_binary(&bytes),
        Format::Csv => decode_csv(&bytes),
    }
}

pub fn write_dataset(dataset: &Dataset, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    match format {
        Format::Binary => out.write_all(&encode_binary(dataset))?,
        Format::Csv => {
            let mut line = String::new();
            for p in dataset.points() {
                line.clear();
                for (j, v) in p.iter().enumerate() {
                    if j > 0 {
                        line.push(',');
                    }
                    // Debug formatting is the shortest string that round-trips.
                    line.push_str(&format!("{v:?}"));
                }
                line.push('\n');
                out.write_all(line.as_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub(crate) fn encode_binary(dataset: &Dataset) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + dataset.len() * dataset.dims() * 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(dataset.len() as u64).to_le_bytes());
    buf.extend_from_slice(&(dataset.dims() as u64).to_le_bytes());
    for v in dataset.points().flatten() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

fn parse_err(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        location: location.into(),
        message: message.into(),
    }
}

fn decode_binary(bytes: &[u8]) -> Result<Dataset> {
    if bytes.len() < HEADER_LEN {
        return Err(parse_err("offset 0", "file shorter than the 24-byte header"));
    }
    if &bytes[0..4] != MAGIC {
        return Err(parse_err("offset 0", "bad magic, expected TEDJ"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(parse_err("offset 4", format!("unsupported version {version}")));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let d = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let expected = n
        .checked_mul(d)
        .and_then(|v| v.checked_mul(8))
        .and_then(|v| v.checked_add(HEADER_LEN as u64));
    if expected != Some(bytes.len() as u64) {
        return Err(parse_err(
            "offset 8",
            format!(
                "header declares {n} x {d} values but payload is {} bytes",
                bytes.len() - HEADER_LEN
            ),
        ));
    }
    let values: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Dataset::from_flat(d as usize, &values)
}

fn decode_csv(bytes: &[u8]) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut values = Vec::new();
    let mut d = None;
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| parse_err(format!("line {line}"), e.to_string()))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match d {
            None => d = Some(record.len()),
            Some(d) if d != record.len() => {
                return Err(Error::validation(format!(
                    "line {line} has {} fields, expected {d}",
                    record.len()
                )))
            }
            Some(_) => {}
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                parse_err(
                    format!("line {line}, field {}", j + 1),
                    format!("'{field}' is not a number"),
                )
            })?;
            values.push(v);
        }
    }
    let d = d.ok_or_else(|| Error::validation("csv file contains no points"))?;
    Dataset::from_flat(d, &values)
}
