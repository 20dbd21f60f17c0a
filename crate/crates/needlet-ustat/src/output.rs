//! Result persistence: CSV tables (header row, 17 significant digits) and
//! JSON summary records, one per run.

use crate::error::{Error, Result};
use std::fs;
use std::path::{Path, PathBuf};

/// 17 significant digits, decimal point, round-trips every f64.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// A CSV table under construction.
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Append a row; cells are already formatted.
    pub fn push(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.header.len(), "row width mismatch");
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.render())
    }
}

/// Write text, creating parent directories.
pub fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, content)?;
    Ok(())
}

/// Write a JSON summary record.
pub fn write_summary(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Format(format!("summary serialization: {e}")))?;
    write_text(path, &format!("{text}\n"))
}

/// Output path inside the run's output directory.
pub fn out_path(dir: &str, name: &str) -> PathBuf {
    Path::new(dir).join(name)
}
