//! Report payloads and CSV tables written by a run.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{Command, ExperimentConfig};
use crate::error::Result;

/// One CSV cell. Floats are written in shortest round-trip form, so output
/// does not depend on locale.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) if v.is_nan() => "nan".to_string(),
            Cell::Float(v) if v.is_infinite() => if *v > 0.0 { "inf" } else { "-inf" }.to_string(),
            Cell::Float(v) => format!("{v:?}"),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
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

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match table {}", self.name);
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Everything a command produced. Wall-clock time is kept out of the JSON
/// payload so that reports of identical runs are byte-identical.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub pass: bool,
    pub failures: Vec<String>,
    pub results: serde_json::Value,
    /// CSV file names, relative to the report.
    pub tables: Vec<String>,
    #[serde(skip)]
    pub table_data: Vec<Table>,
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

impl ExperimentReport {
    pub fn file_stem(&self) -> &'static str {
        self.command.name()
    }

    pub fn table_file_name(command: Command, table: &str) -> String {
        format!("{}_{table}.csv", command.name())
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.table_data.iter().find(|t| t.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Paths of the files a run wrote.
#[derive(Debug, Clone)]
pub struct WrittenFiles {
    pub report: PathBuf,
    pub timing: PathBuf,
    pub tables: Vec<PathBuf>,
    pub plot_script: Option<PathBuf>,
}

/// Writes the report, its tables, the timing sidecar and the plot script
/// into `dir`, creating it if needed.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<WrittenFiles> {
    std::fs::create_dir_all(dir)?;
    let stem = report.file_stem();
    let report_path = dir.join(format!("{stem}_report.json"));
    std::fs::write(&report_path, report.to_json()?)?;

    let mut tables = Vec::new();
    for t in &report.table_data {
        let path = dir.join(ExperimentReport::table_file_name(report.command, &t.name));
        std::fs::write(&path, t.to_csv()?)?;
        tables.push(path);
    }

    let timing_path = dir.join(format!("{stem}_timing.json"));
    let timing = serde_json::json!({ "wall_clock_seconds": report.wall_clock_seconds });
    std::fs::write(&timing_path, serde_json::to_string_pretty(&timing)? + "\n")?;

    let plot_script = match super::plot::plot_script(report) {
        Ok(script) => {
            let path = dir.join(format!("{stem}_plot.py"));
            std::fs::write(&path, script)?;
            Some(path)
        }
        Err(_) => None,
    };
    Ok(WrittenFiles { report: report_path, timing: timing_path, tables, plot_script })
}
