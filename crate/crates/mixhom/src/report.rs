//! Experiment reports and their on-disk form: `rows.csv`, one CSV per table,
//! optional SVG plots and a JSON manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::plot::{render_svg, PlotSpec};

/// Bumped whenever a column set changes.
pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(format_cell).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn format_cell(c: &Cell) -> String {
    match c {
        Cell::Num(v) => format_num(*v),
        Cell::Text(s) => s.clone(),
        Cell::Missing => String::new(),
    }
}

/// Shortest round-trip representation; deterministic across runs.
pub fn format_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub tool_version: String,
    pub schema_version: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub rows: Vec<Row>,
    pub tables: Vec<Table>,
    pub plots: Vec<PlotSpec>,
    pub provenance: Provenance,
    pub config: ExperimentConfig,
}

impl ExperimentReport {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            experiment: config.experiment.clone(),
            rows: Vec::new(),
            tables: Vec::new(),
            plots: Vec::new(),
            provenance: Provenance {
                config_hash: config.hash(),
                tool_version: TOOL_VERSION.into(),
                schema_version: SCHEMA_VERSION,
            },
            config: config.clone(),
        }
    }

    pub fn row(&mut self, name: &str, value: f64) {
        self.rows.push(Row { name: name.into(), value });
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.name == name).map(|r| r.value)
    }

    pub fn rows_csv(&self) -> String {
        let mut t = Table::new("rows", &["name", "value"]);
        for r in &self.rows {
            t.push(vec![r.name.as_str().into(), r.value.into()]);
        }
        t.to_csv()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Formats {
    pub svg: bool,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    tool_version: &'a str,
    experiment: &'a str,
    config_hash: &'a str,
    config: &'a ExperimentConfig,
    files: Vec<String>,
}

fn write(dir: &Path, name: &str, text: &str, files: &mut Vec<String>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
    files.push(name.to_string());
    Ok(())
}

/// Write the report into `dir`; returns the written paths.
pub fn emit_report(rep: &ExperimentReport, dir: &Path, formats: Formats) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut files = Vec::new();
    write(dir, "rows.csv", &rep.rows_csv(), &mut files)?;
    for t in &rep.tables {
        write(dir, &format!("{}.csv", t.name), &t.to_csv(), &mut files)?;
    }
    if formats.svg {
        for p in &rep.plots {
            write(dir, &format!("{}.svg", p.name), &render_svg(p), &mut files)?;
        }
    }
    let manifest = Manifest {
        schema_version: rep.provenance.schema_version,
        tool_version: &rep.provenance.tool_version,
        experiment: &rep.experiment,
        config_hash: &rep.provenance.config_hash,
        config: &rep.config,
        files: files.clone(),
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    write(dir, "manifest.json", &json, &mut files)?;
    Ok(files.into_iter().map(|f| dir.join(f)).collect())
}

/// One-line summary per row, for terminal output.
pub fn summary(rep: &ExperimentReport) -> String {
    let mut s = String::new();
    for r in &rep.rows {
        let _ = writeln!(s, "{:<32} {}", r.name, format_num(r.value));
    }
    s
}
