use std::io::Write;
use std::path::PathBuf;

use clap::ValueEnum;
use heraldiq_core::exact;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliResult;

/// Version of the JSON report layout.
pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// A probability printed both as a decimal and, when recognisable, as an
/// exact fraction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Probability {
    pub value: f64,
    pub exact: Option<String>,
}

impl Probability {
    pub fn new(value: f64) -> Self {
        Self {
            value,
            exact: exact::rational_string(value),
        }
    }

    pub fn exact(r: &exact::Rational) -> Self {
        Self {
            value: exact::to_f64(r),
            exact: Some(exact::display(r)),
        }
    }
}

/// A table with fixed columns.
#[derive(Clone, Debug, Default)]
pub struct Csv {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|c| quote(c)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn quote(c: &str) -> String {
    if c.contains([',', '"', '\n']) {
        format!("\"{}\"", c.replace('"', "\"\""))
    } else {
        c.to_string()
    }
}

pub fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn pattern_string(p: &[u8]) -> String {
    p.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" ")
}

/// Wraps a command's body in the common report envelope.
pub fn envelope(command: &str, body: impl Serialize) -> CliResult<Value> {
    let mut map = Map::new();
    map.insert("report_version".into(), REPORT_VERSION.into());
    map.insert("command".into(), command.into());
    match serde_json::to_value(body)? {
        Value::Object(fields) => map.extend(fields),
        other => {
            map.insert("result".into(), other);
        }
    }
    Ok(Value::Object(map))
}

/// Writes `text` to `out` or stdout.
pub fn emit(text: &str, out: Option<&PathBuf>) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

/// Renders a report in the requested format.
pub fn render(format: Format, json: &Value, csv: &Csv) -> CliResult<String> {
    Ok(match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(json)?;
            s.push('\n');
            s
        }
        Format::Csv => csv.render(),
    })
}

/// Shortest round-trip decimal, switching to exponent form for very small
/// or very large magnitudes.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

pub fn cell_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}
