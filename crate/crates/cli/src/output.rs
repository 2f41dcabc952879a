//! Tabular reports and their CSV and JSON renderings.
//!
//! Floats are written as `{:.16e}` (17 significant digits) in both formats,
//! which round-trips every `f64` exactly. Non-finite values become `null`
//! in JSON.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};

use crate::config::Format;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Flag(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Flag(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Num(v) if v.is_finite() => s.serialize_f64(*v),
            Cell::Num(_) => s.serialize_none(),
            Cell::Int(v) => s.serialize_u64(*v),
            Cell::Text(t) => s.serialize_str(t),
            Cell::Flag(b) => s.serialize_bool(*b),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &'static [&'static str]) -> Self {
        Self {
            name,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(
            row.len(),
            self.columns.len(),
            "row width for table {}",
            self.name
        );
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }
}

struct Records<'a>(&'a Table);

struct Record<'a>(&'a [&'static str], &'a [Cell]);

impl Serialize for Record<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0.iter().zip(self.1) {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl Serialize for Records<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.rows.len()))?;
        for row in &self.0.rows {
            seq.serialize_element(&Record(self.0.columns, row))?;
        }
        seq.end()
    }
}

/// Output of one command. `failures` counts failed checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: &'static str,
    pub tables: Vec<Table>,
    pub failures: usize,
}

impl Report {
    pub fn new(command: &'static str, tables: Vec<Table>) -> Self {
        Self {
            command,
            tables,
            failures: 0,
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

impl Serialize for Report {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.tables.len() + 1))?;
        map.serialize_entry("command", self.command)?;
        for t in &self.tables {
            map.serialize_entry(t.name, &Records(t))?;
        }
        map.end()
    }
}

/// Compact JSON with fixed 17-digit floats.
struct Fixed17;

impl serde_json::ser::Formatter for Fixed17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        w.write_all(format_float(value).as_bytes())
    }
}

pub fn to_json(report: &Report) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed17);
    report
        .serialize(&mut ser)
        .expect("serializing into memory cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON output is UTF-8")
}

pub fn table_to_csv(table: &Table) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(table.columns).expect("in-memory write");
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV output is UTF-8")
}

/// Rendered files: `(suffix, contents)`. CSV gives one file per table, JSON
/// one file per report.
pub fn render(report: &Report, format: Format) -> Vec<(Option<&'static str>, String)> {
    match format {
        Format::Json => vec![(None, to_json(report))],
        Format::Csv if report.tables.len() == 1 => vec![(None, table_to_csv(&report.tables[0]))],
        Format::Csv => report
            .tables
            .iter()
            .map(|t| (Some(t.name), table_to_csv(t)))
            .collect(),
    }
}

/// Paths a report is written to when `out` is given.
pub fn target_paths(report: &Report, format: Format, out: &Path) -> Vec<PathBuf> {
    render(report, format)
        .into_iter()
        .map(|(suffix, _)| suffixed(out, suffix))
        .collect()
}

fn suffixed(out: &Path, suffix: Option<&str>) -> PathBuf {
    match suffix {
        None => out.to_path_buf(),
        Some(s) => {
            let stem = out
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let name = match out.extension() {
                Some(ext) => format!("{stem}_{s}.{}", ext.to_string_lossy()),
                None => format!("{stem}_{s}"),
            };
            out.with_file_name(name)
        }
    }
}

/// A closed pipe downstream is not an error.
pub fn write_stdout(text: &str) -> Result<(), CliError> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(CliError::io(Path::new("<stdout>"), e))
        }
        _ => Ok(()),
    }
}

/// Write to `out`, or to stdout with `# table` headers between CSV tables.
pub fn emit(report: &Report, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    let parts = render(report, format);
    match out {
        Some(path) => {
            for (suffix, text) in parts {
                let target = suffixed(path, suffix);
                std::fs::write(&target, text).map_err(|e| CliError::io(&target, e))?;
            }
        }
        None => {
            let multi = parts.len() > 1;
            let mut text = String::new();
            for (suffix, part) in parts {
                if let (true, Some(s)) = (multi, suffix) {
                    text.push_str(&format!("# {s}\n"));
                }
                text.push_str(&part);
            }
            write_stdout(&text)?;
        }
    }
    Ok(())
}
