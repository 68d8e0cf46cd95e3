//! Matrix file formats.
//!
//! Binary: magic `DADL`, `u32` LE rows, `u32` LE cols, then `rows * cols`
//! `f64` LE values in row-major order.
//!
//! CSV: a header row `d,N` followed by `d` rows of `N` values, so each
//! sample is a column.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::Matrix;
use crate::{DadlError, Result};

pub const MAGIC: &[u8; 4] = b"DADL";

pub fn encode_binary(m: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * m.data().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    for v in m.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_binary(bytes: &[u8]) -> Result<Matrix> {
    if bytes.len() < 12 || &bytes[..4] != MAGIC {
        return Err(DadlError::Format("missing DADL magic header".into()));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[12..];
    if body.len() != rows * cols * 8 {
        return Err(DadlError::Format(format!(
            "expected {} payload bytes for {rows}x{cols}, found {}",
            rows * cols * 8,
            body.len()
        )));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Matrix::new(rows, cols, data)
}

pub fn write_csv<W: Write>(m: &Matrix, w: W) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().flexible(true).from_writer(w);
    wr.write_record([m.rows().to_string(), m.cols().to_string()])?;
    for i in 0..m.rows() {
        wr.write_record(m.row(i).iter().map(|v| v.to_string()))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Matrix> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut records = rd.records();
    let header = records
        .next()
        .ok_or_else(|| DadlError::Format("empty csv".into()))??;
    if header.len() != 2 {
        return Err(DadlError::Format("csv header must be `d,N`".into()));
    }
    let parse_dim = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| DadlError::Format(format!("bad csv dimension `{s}`")))
    };
    let (rows, cols) = (parse_dim(&header[0])?, parse_dim(&header[1])?);
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for rec in records {
        let rec = rec?;
        if rec.len() != cols {
            return Err(DadlError::Format(format!(
                "csv row {seen} has {} values, header says {cols}",
                rec.len()
            )));
        }
        for f in rec.iter() {
            data.push(
                f.parse::<f64>()
                    .map_err(|_| DadlError::Format(format!("bad csv value `{f}`")))?,
            );
        }
        seen += 1;
    }
    if seen != rows {
        return Err(DadlError::Format(format!(
            "csv has {seen} data rows, header says {rows}"
        )));
    }
    Matrix::new(rows, cols, data)
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Save a matrix; `.csv` paths get CSV, anything else the binary format.
pub fn save_matrix(m: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if is_csv(path) {
        write_csv(m, fs::File::create(path)?)
    } else {
        fs::write(path, encode_binary(m))?;
        Ok(())
    }
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    if is_csv(path) {
        read_csv(fs::File::open(path)?)
    } else {
        decode_binary(&fs::read(path)?)
    }
}
