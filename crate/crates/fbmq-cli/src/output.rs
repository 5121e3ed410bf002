//! Result tables (tab-separated, header row, deterministic formatting)
//! and the per-run manifest.

use std::fmt::Display;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::CliError;

pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.columns.len(), "row width mismatch");
        self.rows.push(cells);
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut out = String::new();
        out.push_str(&self.columns.join("\t"));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        std::fs::write(path, out)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    #[allow(dead_code)]
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Shortest round-trip decimal formatting: deterministic for a given
/// binary, diff-friendly.
pub fn cell(v: impl Display) -> String {
    format!("{v}")
}

pub fn cell_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => cell(x),
        None => "NA".to_string(),
    }
}

pub fn sha256_hex(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

pub struct Manifest {
    pub subcommand: String,
    pub label: String,
    pub config_sha256: String,
    pub master_seed: u64,
    pub artifact_version: String,
    pub wall_clock_secs: f64,
    pub created_unix_secs: u64,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut out = String::new();
        let mut push = |line: String| {
            out.push_str(&line);
            out.push('\n');
        };
        push(format!("subcommand = {:?}", self.subcommand));
        push(format!("label = {:?}", self.label));
        push(format!("config_sha256 = {:?}", self.config_sha256));
        push(format!("master_seed = {}", self.master_seed));
        push(format!("artifact_version = {:?}", self.artifact_version));
        push(format!("wall_clock_secs = {}", self.wall_clock_secs));
        push(format!("created_unix_secs = {}", self.created_unix_secs));
        std::fs::write(path, out)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
    }
}

/// Writes a table plus its manifest next to it.
pub fn write_run(
    dir: &Path,
    label: &str,
    subcommand: &str,
    table: &Table,
    manifest: &Manifest,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    table.write(&dir.join(format!("{label}_{subcommand}.tsv")))?;
    manifest.write(&dir.join(format!("{label}_{subcommand}_manifest.toml")))?;
    Ok(())
}
