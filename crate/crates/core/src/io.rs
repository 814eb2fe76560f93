//! Signal ingestion and export: CSV (one column per channel) and a RAW
//! binary layout.
//!
//! RAW layout, all little-endian: magic `WSMF`, `u32` channel count, `u64`
//! samples per channel, then every channel's `f64` samples in turn.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavelet::Signal;

pub const RAW_MAGIC: &[u8; 4] = b"WSMF";
pub const RAW_HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Csv,
    Raw,
}

impl InputFormat {
    /// `.raw`/`.bin` map to RAW, anything else to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("raw") | Some("bin") => InputFormat::Raw,
            _ => InputFormat::Csv,
        }
    }
}

impl std::str::FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(InputFormat::Csv),
            "raw" => Ok(InputFormat::Raw),
            other => Err(Error::Config(format!("unknown input format '{other}'"))),
        }
    }
}

/// Reads the selected channels (all when `channels` is `None`).
pub fn ingest(path: &Path, format: Option<InputFormat>, channels: Option<&[usize]>) -> Result<Vec<Signal>> {
    let format = format.unwrap_or_else(|| InputFormat::from_path(path));
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (labels, columns) = match format {
        InputFormat::Csv => parse_csv(&bytes)?,
        InputFormat::Raw => parse_raw(&bytes)?,
    };
    select(labels, columns, channels)
}

fn select(labels: Vec<String>, columns: Vec<Vec<f64>>, channels: Option<&[usize]>) -> Result<Vec<Signal>> {
    let available = columns.len();
    let picked: Vec<usize> = match channels {
        Some(c) => c.to_vec(),
        None => (0..available).collect(),
    };
    picked
        .into_iter()
        .map(|ch| {
            if ch >= available {
                return Err(Error::ChannelOutOfRange { channel: ch, available });
            }
            Signal::new(labels[ch].clone(), columns[ch].clone())
        })
        .collect()
}

/// Parses CSV text. The first row is a header when none of its cells is a
/// number. Rows and columns in errors are 1-based.
pub fn parse_csv(bytes: &[u8]) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    parse_delimited(bytes, b',')
}

/// [`parse_csv`] with an arbitrary single-byte delimiter.
pub fn parse_delimited(bytes: &[u8], delimiter: u8) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(bytes);
    let mut labels: Option<Vec<String>> = None;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut width = 0;
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            column: 0,
            message: e.to_string(),
        })?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if i == 0 && record.iter().all(|c| c.parse::<f64>().is_err()) {
            labels = Some(record.iter().map(str::to_string).collect());
            width = record.len();
            columns = vec![Vec::new(); width];
            continue;
        }
        if width == 0 {
            width = record.len();
            columns = vec![Vec::new(); width];
        }
        if record.len() != width {
            return Err(Error::Parse {
                row,
                column: record.len().min(width) + 1,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: c + 1,
                message: format!("'{cell}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: c + 1,
                    message: format!("'{cell}' is not finite"),
                });
            }
            columns[c].push(v);
        }
    }
    if columns.is_empty() || columns[0].is_empty() {
        return Err(Error::Parse {
            row: 1,
            column: 1,
            message: "no data rows".into(),
        });
    }
    let labels = labels.unwrap_or_else(|| (0..width).map(|c| format!("ch{c}")).collect());
    Ok((labels, columns))
}

/// Parses the RAW layout; channels are labelled `ch0`, `ch1`, ….
pub fn parse_raw(bytes: &[u8]) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    if bytes.len() < RAW_HEADER_LEN || &bytes[..4] != RAW_MAGIC {
        return Err(Error::Parse {
            row: 0,
            column: 0,
            message: "missing WSMF header".into(),
        });
    }
    let channels = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let samples = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let expected = channels
        .checked_mul(samples)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(RAW_HEADER_LEN));
    if expected != Some(bytes.len()) {
        return Err(Error::LengthMismatch(format!(
            "header declares {channels} x {samples} samples, payload holds {} bytes",
            bytes.len() - RAW_HEADER_LEN
        )));
    }
    let body = &bytes[RAW_HEADER_LEN..];
    let mut columns = Vec::with_capacity(channels);
    for ch in 0..channels {
        let mut col = Vec::with_capacity(samples);
        for (i, chunk) in body[ch * samples * 8..(ch + 1) * samples * 8]
            .chunks_exact(8)
            .enumerate()
        {
            let v = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: i + 1,
                    column: ch + 1,
                    message: format!("sample {v} is not finite"),
                });
            }
            col.push(v);
        }
        columns.push(col);
    }
    Ok(((0..channels).map(|c| format!("ch{c}")).collect(), columns))
}

/// Two-column `q, ζ(q)` table, comma- or tab-separated.
pub fn read_scaling_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let delimiter = if bytes.contains(&b'\t') { b'\t' } else { b',' };
    let (_, mut columns) = parse_delimited(&bytes, delimiter)?;
    if columns.len() != 2 {
        return Err(Error::Parse {
            row: 1,
            column: columns.len().min(2) + 1,
            message: format!("expected 2 columns (q, zeta), found {}", columns.len()),
        });
    }
    let zeta = columns.pop().expect("two columns");
    let q = columns.pop().expect("two columns");
    Ok((q, zeta))
}

fn equal_lengths(signals: &[Signal]) -> Result<usize> {
    let n = signals.first().map_or(0, Signal::len);
    if signals.iter().any(|s| s.len() != n) {
        return Err(Error::LengthMismatch("channels must share one length".into()));
    }
    Ok(n)
}

pub fn encode_raw(signals: &[Signal]) -> Result<Vec<u8>> {
    let n = equal_lengths(signals)?;
    let mut out = Vec::with_capacity(RAW_HEADER_LEN + 8 * n * signals.len());
    out.extend_from_slice(RAW_MAGIC);
    out.extend_from_slice(&(signals.len() as u32).to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    for s in signals {
        for v in s.samples() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

/// CSV with a header of channel labels; values round-trip exactly.
pub fn encode_csv(signals: &[Signal]) -> Result<Vec<u8>> {
    let n = equal_lengths(signals)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let ser = |e: csv::Error| Error::Serialization(e.to_string());
    w.write_record(signals.iter().map(Signal::label)).map_err(ser)?;
    for i in 0..n {
        w.write_record(signals.iter().map(|s| format!("{:e}", s.samples()[i])))
            .map_err(ser)?;
    }
    w.into_inner().map_err(|e| Error::Serialization(e.to_string()))
}

pub fn write_signals(path: &Path, format: InputFormat, signals: &[Signal]) -> Result<()> {
    let bytes = match format {
        InputFormat::Csv => encode_csv(signals)?,
        InputFormat::Raw => encode_raw(signals)?,
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
