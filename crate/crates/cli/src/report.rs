//! Report assembly and file emission.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use magnetic_hardy::Warning;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::run::{Cell, Table};

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub config_hash: String,
    pub payload: Value,
    pub warnings: Vec<Warning>,
    pub files: Vec<String>,
    pub wall_clock_seconds: f64,
}

/// First 16 hex digits of the SHA-256 of the canonical config JSON.
pub fn config_hash(config: &RunConfig) -> String {
    let text = serde_json::to_string(config).expect("config serializes");
    hex::encode(Sha256::digest(text.as_bytes()))[..16].to_string()
}

fn cell(c: &Cell) -> String {
    match c {
        Cell::Num(x) => format!("{x:.16e}"),
        Cell::Int(i) => i.to_string(),
        Cell::Text(s) => s.clone(),
    }
}

pub fn csv_text(table: &Table) -> String {
    let mut out = table.header.join(",");
    out.push('\n');
    for row in &table.rows {
        out.push_str(&row.iter().map(cell).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

/// Write the CSV tables; returns their file names.
pub fn emit_plotdata(dir: &Path, stem: &str, tables: &[Table]) -> Result<Vec<String>, CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.display().to_string(), source })?;
    let mut names = Vec::new();
    for t in tables {
        let name = format!("{stem}{}.csv", t.suffix);
        write(&dir.join(&name), &csv_text(t))?;
        names.push(name);
    }
    Ok(names)
}

pub fn write_report(dir: &Path, stem: &str, report: &Report) -> Result<PathBuf, CliError> {
    let path = dir.join(format!("{stem}.json"));
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    write(&path, &text)?;
    Ok(path)
}

/// Human-readable view: scalar payload entries, then the tables.
pub fn pretty(report: &Report, tables: &[Table]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}  config {}", report.tool, report.version, report.config_hash);
    if let Value::Object(map) = &report.payload {
        for (k, v) in map {
            if !v.is_array() && !v.is_object() {
                let _ = writeln!(out, "  {k:<24} {v}");
            }
        }
    }
    for t in tables {
        let _ = writeln!(out);
        let _ = writeln!(out, "{}", t.header.iter().map(|h| format!("{h:>16}")).collect::<String>());
        for row in &t.rows {
            let line: String = row
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => format!("{x:>16.6e}"),
                    Cell::Int(i) => format!("{i:>16}"),
                    Cell::Text(s) => format!("{s:>16}"),
                })
                .collect();
            let _ = writeln!(out, "{line}");
        }
    }
    for w in &report.warnings {
        let _ = writeln!(out, "warning: {}", serde_json::to_string(w).unwrap_or_default());
    }
    for f in &report.files {
        let _ = writeln!(out, "wrote {f}");
    }
    out
}
