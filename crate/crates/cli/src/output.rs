//! Tables, their JSON/CSV rendering, and run directories with manifests.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::{Format, RunConfig};
use crate::error::CliError;

/// A named table with a fixed column list. JSON renders it as an array of
/// objects with keys in column order; CSV renders a header row and one
/// record per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_columns(name: &str, columns: Vec<String>) -> Self {
        Table {
            name: name.to_string(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width for table {}",
            self.name
        );
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&JsonRows(self))
                    .map_err(|e| CliError::Output(e.to_string()))?;
                s.push('\n');
                Ok(s)
            }
            Format::Csv => {
                let mut w = csv::WriterBuilder::new()
                    .terminator(csv::Terminator::CRLF)
                    .from_writer(Vec::new());
                let out = |e: csv::Error| CliError::Output(e.to_string());
                w.write_record(&self.columns).map_err(out)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(csv_cell)).map_err(out)?;
                }
                let bytes = w
                    .into_inner()
                    .map_err(|e| CliError::Output(e.to_string()))?;
                String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
            }
        }
    }
}

struct JsonRows<'a>(&'a Table);

struct JsonRow<'a>(&'a [String], &'a [Value]);

impl Serialize for JsonRows<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.rows.len()))?;
        for row in &self.0.rows {
            seq.serialize_element(&JsonRow(&self.0.columns, row))?;
        }
        seq.end()
    }
}

impl Serialize for JsonRow<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0.iter().zip(self.1) {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

/// Strings verbatim, null as empty, arrays joined with `;`.
fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(csv_cell).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}

/// Output of one subcommand: data tables plus the index of the table echoed
/// to standard output.
#[derive(Debug, Clone)]
pub struct Report {
    pub tables: Vec<Table>,
    pub echo: usize,
}

impl Report {
    pub fn single(table: Table) -> Self {
        Report {
            tables: vec![table],
            echo: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub file: String,
    pub table: String,
    pub rows: usize,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest<'a> {
    pub run_id: String,
    pub timestamp: String,
    pub version: &'static str,
    pub config: &'a RunConfig,
    pub files: Vec<FileEntry>,
}

/// Next zero-padded counter under `outdir`, one past the largest existing
/// `<counter>-...` entry.
fn next_counter(outdir: &Path) -> Result<u64, CliError> {
    if !outdir.exists() {
        return Ok(1);
    }
    let mut max = 0;
    for entry in fs::read_dir(outdir)? {
        let name = entry?.file_name();
        let name = name.to_string_lossy();
        if let Some(n) = name.split('-').next().and_then(|c| c.parse::<u64>().ok()) {
            max = max.max(n);
        }
    }
    Ok(max + 1)
}

/// Writes every table and the manifest into a fresh run directory and
/// returns its path.
pub fn write_run(cfg: &RunConfig, report: &Report) -> Result<PathBuf, CliError> {
    fs::create_dir_all(&cfg.outdir)?;
    let now = Utc::now();
    let stamp = now.format("%Y%m%dT%H%M%S%.3fZ");
    let (run_id, dir) = loop {
        let id = format!("{:04}-{stamp}", next_counter(&cfg.outdir)?);
        let dir = cfg.outdir.join(&id);
        match fs::create_dir(&dir) {
            Ok(()) => break (id, dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    };
    let mut files = Vec::new();
    for table in &report.tables {
        let body = table.render(cfg.format)?;
        let file = format!("{}.{}", table.name, cfg.format.extension());
        fs::write(dir.join(&file), &body)?;
        files.push(FileEntry {
            file,
            table: table.name.clone(),
            rows: table.rows.len(),
            bytes: body.len(),
            sha256: hex::encode(Sha256::digest(body.as_bytes())),
        });
    }
    let manifest = RunManifest {
        run_id,
        timestamp: now.to_rfc3339_opts(SecondsFormat::Millis, true),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        files,
    };
    let mut text =
        serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Output(e.to_string()))?;
    text.push('\n');
    fs::write(dir.join("manifest.json"), text)?;
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> Table {
        let mut t = Table::new("t", &["n", "ratio", "list", "flag", "missing"]);
        t.push(vec![
            json!(3),
            json!("7/9"),
            json!(["1/2", "1/3"]),
            json!(true),
            Value::Null,
        ]);
        t
    }

    #[test]
    fn json_keeps_column_order() {
        let s = sample().render(Format::Json).unwrap();
        let n = s.find("\"n\"").unwrap();
        let r = s.find("\"ratio\"").unwrap();
        let m = s.find("\"missing\"").unwrap();
        assert!(n < r && r < m);
        assert!(s.contains("\"ratio\": \"7/9\""));
        assert!(s.ends_with("]\n"));
    }

    #[test]
    fn csv_has_header_and_flattened_cells() {
        let s = sample().render(Format::Csv).unwrap();
        assert_eq!(s, "n,ratio,list,flag,missing\r\n3,7/9,1/2;1/3,true,\r\n");
    }

    #[test]
    #[should_panic(expected = "row width")]
    fn rejects_ragged_rows() {
        let mut t = Table::new("t", &["a"]);
        t.push(vec![json!(1), json!(2)]);
    }
}
