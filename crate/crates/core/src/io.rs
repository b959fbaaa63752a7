//! Sample and curve file formats.
//!
//! Samples are CSV with header `time,status` (status 1 = uncensored) or JSON
//! objects `{"x": [...], "delta": [...]}`. Floats are written with Rust's
//! shortest round-trip formatting, so output is byte-stable.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sample::CensoredSample;

#[derive(Debug, Serialize, Deserialize)]
struct SampleJson {
    x: Vec<f64>,
    delta: Vec<u8>,
}

fn parse_error(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Reads a `time,status` CSV. Errors name the offending line (the header is
/// line 1).
pub fn read_sample_csv<R: Read>(reader: R) -> Result<CensoredSample> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "time" || &headers[1] != "status" {
        return Err(parse_error(1, "expected header `time,status`"));
    }
    let mut x = Vec::new();
    let mut delta = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let time: f64 = record[0]
            .parse()
            .map_err(|_| parse_error(line, format!("invalid time {:?}", &record[0])))?;
        if !time.is_finite() || time < 0.0 {
            return Err(parse_error(
                line,
                format!("time must be a finite nonnegative number, got {time}"),
            ));
        }
        let status = match &record[1] {
            "0" => false,
            "1" => true,
            other => return Err(parse_error(line, format!("status must be 0 or 1, got {other:?}"))),
        };
        x.push(time);
        delta.push(status);
    }
    if x.is_empty() {
        return invalid("sample file contains no observations");
    }
    CensoredSample::from_observed(x, delta)
}

/// Writes a sample as `time,status` CSV in its original order.
pub fn write_sample_csv<W: Write>(s: &CensoredSample, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["time", "status"])?;
    for (&x, &d) in s.x().iter().zip(s.delta()) {
        w.write_record([x.to_string(), u8::from(d).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sample_json<R: Read>(reader: R) -> Result<CensoredSample> {
    let raw: SampleJson = serde_json::from_reader(reader)?;
    if raw.x.len() != raw.delta.len() {
        return invalid(format!(
            "x has {} entries but delta has {}",
            raw.x.len(),
            raw.delta.len()
        ));
    }
    let mut delta = Vec::with_capacity(raw.delta.len());
    for (i, &d) in raw.delta.iter().enumerate() {
        match d {
            0 => delta.push(false),
            1 => delta.push(true),
            _ => return invalid(format!("delta[{i}] must be 0 or 1, got {d}")),
        }
    }
    CensoredSample::from_observed(raw.x, delta)
}

pub fn write_sample_json<W: Write>(s: &CensoredSample, writer: W) -> Result<()> {
    let raw = SampleJson {
        x: s.x().to_vec(),
        delta: s.delta().iter().map(|&d| u8::from(d)).collect(),
    };
    serde_json::to_writer(writer, &raw)?;
    Ok(())
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Reads a sample, choosing JSON for a `.json` extension and CSV otherwise.
pub fn read_sample(path: &Path) -> Result<CensoredSample> {
    let file = BufReader::new(File::open(path)?);
    if is_json(path) {
        read_sample_json(file)
    } else {
        read_sample_csv(file)
    }
}

pub fn write_sample(path: &Path, s: &CensoredSample) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    if is_json(path) {
        write_sample_json(s, &mut file)?;
    } else {
        write_sample_csv(s, &mut file)?;
    }
    file.flush()?;
    Ok(())
}

/// Writes equal-length numeric columns as CSV under `header`.
pub fn write_columns<W: Write>(writer: W, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    if header.len() != columns.len() {
        return invalid("header and column counts differ");
    }
    let rows = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != rows) {
        return invalid("columns have different lengths");
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header)?;
    for i in 0..rows {
        w.write_record(columns.iter().map(|c| c[i].to_string()))?;
    }
    w.flush()?;
    Ok(())
}
