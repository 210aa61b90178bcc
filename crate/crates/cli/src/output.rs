use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use jacobi_histo::matrix::format_float;
use serde::Serialize;

use crate::config::ExperimentConfig;

/// One CSV cell.
pub enum Cell {
    Int(usize),
    Float(f64),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// A CSV table, rendered without locale or platform dependence.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (k, cell) in row.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                match cell {
                    Cell::Int(v) => write!(out, "{v}").unwrap(),
                    Cell::Float(v) => out.push_str(&format_float(*v)),
                    Cell::Text(s) => out.push_str(s),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.render())
    }
}

#[derive(Serialize)]
struct Sidecar<'a, S: Serialize> {
    command: &'static str,
    version: &'static str,
    library_version: &'static str,
    config: &'a ExperimentConfig,
    wall_time_seconds: f64,
    passed: bool,
    outputs: Vec<String>,
    summary: &'a S,
}

pub fn write_sidecar<S: Serialize>(
    cfg: &ExperimentConfig,
    wall: f64,
    passed: bool,
    outputs: &[PathBuf],
    summary: &S,
) -> std::io::Result<PathBuf> {
    let sidecar = Sidecar {
        command: cfg.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        library_version: jacobi_histo::VERSION,
        config: cfg,
        wall_time_seconds: wall,
        passed,
        outputs: outputs.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect(),
        summary,
    };
    let path = cfg.out_dir.join(format!("{}.json", cfg.command.stem()));
    let text = serde_json::to_string_pretty(&sidecar).map_err(std::io::Error::other)?;
    std::fs::write(&path, text + "\n")?;
    Ok(path)
}
