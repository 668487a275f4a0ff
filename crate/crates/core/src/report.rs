//! Run reports: checks with the tolerance they were held to, JSON with a
//! fixed 17-significant-digit float format (byte-identical across runs),
//! and CSV tables.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};

use crate::Result;

/// How a value is compared with its tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    /// `value ≤ tolerance`.
    AtMost,
    /// `value ≥ tolerance`.
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, comparison: Comparison::AtMost, passed: value <= tolerance }
    }

    pub fn at_least(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, comparison: Comparison::AtLeast, passed: value >= tolerance }
    }

    /// A boolean outcome recorded as `1 ≥ 1` / `0 ≥ 1`.
    pub fn holds(name: &str, ok: bool) -> Self {
        Self::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }
}

/// Envelope written by every CLI command.
#[derive(Clone, Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub command: String,
    pub seed: Option<u64>,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Files written next to the report, relative to the output directory.
    pub artifacts: Vec<String>,
    pub data: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(command: &str, seed: Option<u64>, checks: Vec<Check>, data: T) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self { command: command.into(), seed, passed, checks, artifacts: Vec::new(), data }
    }
}

/// Compact JSON formatting with every float written as `{:.16e}`.
struct FixedDigits;

impl Formatter for FixedDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serializes with 17 significant digits; non-finite floats become `null`.
pub fn to_json(value: &impl Serialize) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = Serializer::with_formatter(&mut out, FixedDigits);
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}

fn csv_error(e: csv::Error) -> crate::Error {
    crate::Error::Io(std::io::Error::other(e))
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// `iteration,energy` rows.
pub fn write_trace_csv(path: &Path, trace: &[(usize, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(["iteration", "energy"]).map_err(csv_error)?;
    for &(i, e) in trace {
        w.write_record([i.to_string(), fmt(e)]).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Square matrix with `run` header row and column.
pub fn write_matrix_csv(path: &Path, matrix: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    let mut header = vec!["run".to_string()];
    header.extend((0..matrix.len()).map(|j| j.to_string()));
    w.write_record(&header).map_err(csv_error)?;
    for (i, row) in matrix.iter().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(row.iter().map(|&x| fmt(x)));
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// `name,value,tolerance,comparison,passed` rows, one per check.
pub fn write_checks_csv(path: &Path, rows: &[(String, Check)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(["source", "check", "value", "tolerance", "comparison", "passed"]).map_err(csv_error)?;
    for (source, c) in rows {
        let cmp = match c.comparison {
            Comparison::AtMost => "at-most",
            Comparison::AtLeast => "at-least",
        };
        w.write_record([source.clone(), c.name.clone(), fmt(c.value), fmt(c.tolerance), cmp.into(), c.passed.to_string()])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
