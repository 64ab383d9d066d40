//! JSON and CSV report emission. Floats carry 17 significant digits.

use serde::Serialize;
use serde_json::ser::Formatter;
use std::io::{self, Write};
use std::path::Path;

/// One inequality row: lhs ≤ rhs is checked as margin = rhs − lhs ≥ −tol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tol: f64,
    /// "pass", "fail" or "n/a".
    pub verdict: String,
}

impl CheckRow {
    pub fn new(name: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        let margin = rhs - lhs;
        Self::with_margin(name, lhs, rhs, margin, tol)
    }

    pub fn with_margin(name: &str, lhs: f64, rhs: f64, margin: f64, tol: f64) -> Self {
        let verdict = if margin >= -tol { "pass" } else { "fail" };
        CheckRow { name: name.to_string(), lhs, rhs, margin, tol, verdict: verdict.to_string() }
    }

    pub fn not_applicable(name: &str, lhs: f64, rhs: f64) -> Self {
        CheckRow { name: name.to_string(), lhs, rhs, margin: rhs - lhs, tol: 0.0, verdict: "n/a".to_string() }
    }

    pub fn failed(&self) -> bool {
        self.verdict == "fail"
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub checks: Vec<CheckRow>,
    /// Named scalar results in insertion order.
    #[serde(serialize_with = "ordered_map")]
    pub values: Vec<(String, f64)>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report { command: command.to_string(), checks: Vec::new(), values: Vec::new(), notes: Vec::new(), pass: true }
    }

    pub fn check(&mut self, row: CheckRow) {
        self.pass &= !row.failed();
        self.checks.push(row);
    }

    pub fn value(&mut self, name: &str, v: f64) {
        self.values.push((name.to_string(), v));
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

fn ordered_map<S: serde::Serializer>(pairs: &[(String, f64)], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut m = s.serialize_map(Some(pairs.len()))?;
    for (k, v) in pairs {
        m.serialize_entry(k, v)?;
    }
    m.end()
}

/// Writes f64 as `{:.16e}`; non-finite values become strings.
struct SigFigs;

impl Formatter for SigFigs {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        if v.is_finite() {
            write!(w, "{:.16e}", v)
        } else {
            write!(w, "\"{}\"", v)
        }
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{:.16e}", v)
}

pub fn to_json<T: Serialize>(value: &T) -> io::Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFigs);
    value.serialize(&mut ser).map_err(io::Error::other)?;
    out.push(b'\n');
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    std::fs::write(path, to_json(value)?)
}

/// A table with fixed columns; numbers are formatted on insertion.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.columns.len());
        self.rows.push(row.iter().map(|v| fmt_f64(*v)).collect());
    }

    pub fn push_raw(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| io::Error::other(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.to_csv()?)
    }
}

pub fn checks_table(checks: &[CheckRow]) -> Table {
    let mut t = Table::new(&["name", "lhs", "rhs", "margin", "tol", "verdict"]);
    for c in checks {
        t.push_raw(vec![
            c.name.clone(),
            fmt_f64(c.lhs),
            fmt_f64(c.rhs),
            fmt_f64(c.margin),
            fmt_f64(c.tol),
            c.verdict.clone(),
        ]);
    }
    t
}
