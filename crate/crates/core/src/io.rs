//! CSV series and the JSON run manifest written next to them.
//!
//! Numbers are printed with Rust's shortest round-trip formatting, so a
//! parsed file reproduces the in-memory doubles bit for bit and two runs with
//! the same parameters produce identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, Value>,
    pub artifact_version: String,
    pub outputs: Vec<PathBuf>,
    pub wall_time_seconds: f64,
    #[serde(skip, default = "Instant::now")]
    started: Instant,
}

impl RunManifest {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            parameters: BTreeMap::new(),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
            wall_time_seconds: 0.0,
            started: Instant::now(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.parameters.insert(key.to_string(), v);
        self
    }

    /// Where the manifest for these outputs lives: next to the first output,
    /// with its extension replaced by `manifest.json`.
    pub fn path(&self) -> Option<PathBuf> {
        self.outputs.first().map(|p| manifest_path_for(p))
    }

    fn record(&mut self, path: &Path) -> Result<()> {
        if !self.outputs.iter().any(|p| p == path) {
            self.outputs.push(path.to_path_buf());
        }
        self.wall_time_seconds = self.started.elapsed().as_secs_f64();
        let target = self.path().expect("an output was just recorded");
        write_text(&target, &(serde_json::to_string_pretty(self)? + "\n"))
    }
}

pub fn manifest_path_for(data: &Path) -> PathBuf {
    data.with_extension("manifest.json")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

/// Formats one row of a CSV series.
pub fn format_row(row: &[f64]) -> String {
    let mut line = String::new();
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        line.push_str(&v.to_string());
    }
    line
}

/// Writes `header` and `rows` as CSV, then refreshes the sibling manifest.
pub fn write_series<H: AsRef<str>>(
    path: &Path,
    header: &[H],
    rows: &[Vec<f64>],
    manifest: &mut RunManifest,
) -> Result<()> {
    if let Some(bad) = rows.iter().position(|r| r.len() != header.len()) {
        return Err(Error::Argument(format!(
            "row {bad} has {} fields, header has {}",
            rows[bad].len(),
            header.len()
        )));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut out = BufWriter::new(fs::File::create(path)?);
    let names: Vec<&str> = header.iter().map(AsRef::as_ref).collect();
    out.write_all(names.join(",").as_bytes())?;
    out.write_all(b"\n")?;
    for row in rows {
        out.write_all(format_row(row).as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    manifest.record(path)
}

/// Writes a pretty-printed JSON document, then refreshes the sibling manifest.
pub fn write_json<T: Serialize>(path: &Path, value: &T, manifest: &mut RunManifest) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))?;
    manifest.record(path)
}

/// Parses a CSV written by [`write_series`].
pub fn read_series(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Argument(format!("{} is empty", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| Error::Argument(format!("bad number {f:?}: {e}")))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok((header, rows))
}
