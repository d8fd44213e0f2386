//! Aligned tables on stdout, CSV/JSON files via `--out`.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use phisub::{Error, Result};
use serde_json::{Map, Value};

pub const MAX_PRECISION: usize = 15;

/// Fixed-point with `precision` decimals and trailing zeros dropped; switches
/// to scientific notation for very large or very small magnitudes.
pub fn format_number(x: f64, precision: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let a = x.abs();
    if a >= 1e9 || a < 10f64.powi(-(precision.min(6) as i32)) {
        let s = format!("{:.*e}", precision, x);
        let (mant, exp) = s.split_once('e').expect("scientific format has an exponent");
        return format!("{}e{}", trim_zeros(mant), exp);
    }
    trim_zeros(&format!("{:.*}", precision, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn render(&self, precision: usize) -> String {
        match self {
            Cell::Num(x) => format_number(*x, precision),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x).map(Value::Number).unwrap_or(Value::Null),
            Cell::Int(n) => Value::from(*n),
            Cell::Text(s) => Value::from(s.clone()),
            Cell::Bool(b) => Value::from(*b),
        }
    }

    /// CSV keeps full precision so files round-trip.
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => x.to_string(),
            other => other.render(0),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: &[&'static str]) -> Self {
        Table { headers: headers.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn render(&self, precision: usize) -> String {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(|c| c.render(precision)).collect()).collect();
        let widths: Vec<usize> = (0..self.headers.len())
            .map(|j| cells.iter().map(|r| r[j].chars().count()).chain([self.headers[j].len()]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let line = |fields: Vec<&str>, out: &mut String| {
            let padded: Vec<String> = fields.iter().zip(&widths).map(|(f, w)| format!("{f:>w$}")).collect();
            out.push_str(padded.join("  ").trim_end());
            out.push('\n');
        };
        line(self.headers.clone(), &mut out);
        for r in &cells {
            line(r.iter().map(String::as_str).collect(), &mut out);
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let obj: Map<String, Value> = self.headers.iter().zip(r).map(|(h, c)| (h.to_string(), c.json())).collect();
                Value::Object(obj)
            })
            .collect();
        Value::Array(rows)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.headers).map_err(io)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv)).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutFormat {
    Csv,
    Json,
}

pub fn out_format(path: &Path) -> Result<OutFormat> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("csv") => Ok(OutFormat::Csv),
        Some("json") => Ok(OutFormat::Json),
        _ => Err(Error::Config(format!("--out must end in .csv or .json, got {}", path.display()))),
    }
}

/// Writes a table to `path` in the format implied by its extension.
pub fn write_table(table: &Table, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    match out_format(path)? {
        OutFormat::Csv => table.write_csv(file),
        OutFormat::Json => {
            let text = serde_json::to_string_pretty(&table.to_json()).map_err(|e| Error::Io(e.to_string()))?;
            let mut file = file;
            writeln!(file, "{text}")?;
            Ok(())
        }
    }
}
