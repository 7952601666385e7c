//! Matrix file formats.
//!
//! * `csv`: comma-separated rows, `.` decimal point, optional single header
//!   line. Values are written with the shortest representation that
//!   round-trips exactly.
//! * `dense_f64`: magic `SNMF1\0`, rows and cols as little-endian `u64`, then
//!   `rows · cols` little-endian IEEE-754 doubles in row-major order.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const DENSE_MAGIC: &[u8; 6] = b"SNMF1\0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    DenseF64,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "dense_f64" | "bin" => Ok(Format::DenseF64),
            other => Err(Error::InvalidArgument(format!("unknown matrix format `{other}`"))),
        }
    }
}

impl Format {
    /// `.bin` / `.snmf` mean `dense_f64`; anything else is read as CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") | Some("snmf") => Format::DenseF64,
            _ => Format::Csv,
        }
    }
}

pub fn parse_csv(text: &str, header: bool) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(usize::from(header)) {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (field_no, field) in line.split(',').enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| Error::Parse {
                location: format!("line {}, field {}", lineno + 1, field_no + 1),
                message: format!("cannot parse `{}` as a number", field.trim()),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    location: format!("line {}, field {}", lineno + 1, field_no + 1),
                    message: "NaN or infinite entry".into(),
                });
            }
            row.push(value);
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    location: format!("line {}", lineno + 1),
                    message: format!("expected {} fields, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            location: "end of file".into(),
            message: "no data rows".into(),
        });
    }
    Matrix::from_rows(&rows)
}

pub fn to_csv(m: &Matrix) -> String {
    let mut out = String::with_capacity(m.rows() * m.cols() * 20);
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn encode_dense(m: &Matrix) -> Vec<u8> {
    let mut buf = Vec::with_capacity(22 + 8 * m.rows() * m.cols());
    buf.extend_from_slice(DENSE_MAGIC);
    buf.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    buf.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for v in m.as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

pub fn decode_dense(bytes: &[u8]) -> Result<Matrix> {
    let err = |offset: usize, message: &str| Error::Parse {
        location: format!("byte offset {offset}"),
        message: message.to_string(),
    };
    if bytes.len() < 22 {
        return Err(err(bytes.len(), "truncated header"));
    }
    if &bytes[..6] != DENSE_MAGIC {
        return Err(err(0, "bad magic, expected SNMF1\\0"));
    }
    let rows = u64::from_le_bytes(bytes[6..14].try_into().expect("8 bytes")) as usize;
    let cols = u64::from_le_bytes(bytes[14..22].try_into().expect("8 bytes")) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| err(6, "dimensions overflow"))?;
    if bytes.len() - 22 != expected {
        return Err(err(22, &format!("expected {expected} payload bytes for {rows}x{cols}, found {}", bytes.len() - 22)));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (k, chunk) in bytes[22..].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        if !v.is_finite() {
            return Err(err(22 + 8 * k, "NaN or infinite entry"));
        }
        data.push(v);
    }
    Matrix::from_vec(rows, cols, data)
}

pub fn load_matrix(path: &Path, format: Format, header: bool) -> Result<Matrix> {
    match format {
        Format::Csv => parse_csv(&fs::read_to_string(path)?, header),
        Format::DenseF64 => decode_dense(&fs::read(path)?),
    }
}

pub fn save_matrix(path: &Path, m: &Matrix, format: Format) -> Result<()> {
    let mut file = fs::File::create(path)?;
    match format {
        Format::Csv => file.write_all(to_csv(m).as_bytes())?,
        Format::DenseF64 => file.write_all(&encode_dense(m))?,
    }
    Ok(())
}
