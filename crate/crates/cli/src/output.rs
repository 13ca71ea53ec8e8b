//! CSV tables with JSON sidecars.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A header plus rows of already formatted cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Config(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Shortest round-tripping representation.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Metadata written next to every CSV file.
#[derive(Debug, Clone, Serialize)]
pub struct Sidecar<'a> {
    pub command: &'a str,
    pub version: &'a str,
    pub columns: &'a [&'static str],
    pub rows: usize,
    pub config: Value,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub extra: Value,
}

/// `out/<stem>.csv` and `out/<stem>.json`.
pub fn paths(out: &Path, stem: &str) -> (PathBuf, PathBuf) {
    (out.join(format!("{stem}.csv")), out.join(format!("{stem}.json")))
}

/// Writes the table and its sidecar into `out`, or the CSV to stdout when `out` is `None`.
pub fn write_table(
    out: Option<&Path>,
    stem: &str,
    command: &str,
    table: &Table,
    config: &impl Serialize,
    extra: Value,
) -> Result<(), CliError> {
    let csv = table.to_csv()?;
    let Some(dir) = out else {
        std::io::stdout().write_all(csv.as_bytes())?;
        return Ok(());
    };
    std::fs::create_dir_all(dir)?;
    let (csv_path, json_path) = paths(dir, stem);
    std::fs::write(&csv_path, csv)?;
    let sidecar = Sidecar {
        command,
        version: VERSION,
        columns: &table.columns,
        rows: table.rows.len(),
        config: serde_json::to_value(config)?,
        extra,
    };
    std::fs::write(&json_path, serde_json::to_string_pretty(&sidecar)? + "\n")?;
    log::info!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

/// Writes a JSON document to `out/<stem>.json`, or to stdout.
pub fn write_json(out: Option<&Path>, stem: &str, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        None => std::io::stdout().write_all(text.as_bytes())?,
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("{stem}.json"));
            std::fs::write(&path, text)?;
            log::info!("wrote {}", path.display());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![num(0.1), opt(None)]);
        write_table(Some(dir.path()), "x", "test", &t, &serde_json::json!({"k": 1}), Value::Null).unwrap();
        let text = std::fs::read_to_string(dir.path().join("x.csv")).unwrap();
        assert_eq!(text, "a,b\n0.1,\n");
        let side: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("x.json")).unwrap()).unwrap();
        assert_eq!(side["rows"], 1);
        assert_eq!(side["config"]["k"], 1);
        assert_eq!(side["version"], VERSION);
        assert!(side.get("extra").is_none());
    }
}
