//! Result files. Every number is written with 17 significant digits so that
//! parsing it back gives the identical `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use super::CliError;
use crate::numerics::{ComplexMatrix, RealMatrix};

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV table with a fixed header.
pub struct Table {
    header: &'static str,
    body: String,
}

impl Table {
    pub fn new(header: &'static str) -> Self {
        Self {
            header,
            body: String::new(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.body.push_str(&cells.join(","));
        self.body.push('\n');
    }

    pub fn render(&self) -> String {
        format!("{}\n{}", self.header, self.body)
    }
}

pub fn matrix_csv(m: &RealMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| num(m[(i, j)])).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn unitary_table(u: &ComplexMatrix) -> Table {
    let mut t = Table::new("k,j,magnitude,phase");
    for k in 0..u.nrows() {
        for j in 0..u.ncols() {
            t.row(&[
                (k + 1).to_string(),
                (j + 1).to_string(),
                num(u[(k, j)].norm()),
                num(crate::graph::canonical_phase(u[(k, j)])),
            ]);
        }
    }
    t
}

/// Collects the files of one command and writes them with a manifest.
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn finish(mut self, manifest: Manifest) -> Result<(), CliError> {
        let manifest = Manifest {
            files: std::mem::take(&mut self.files),
            ..manifest
        };
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Runtime(format!("cannot serialize manifest: {e}")))?;
        self.write("manifest.json", &(text + "\n"))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub arguments: Vec<String>,
    pub config: Value,
    pub version: &'static str,
    pub timestamp: String,
    /// Units of each output column.
    pub units: Value,
    pub derived: Value,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config: Value, units: Value, derived: Value) -> Self {
        Self {
            command: command.to_string(),
            arguments: std::env::args().collect(),
            config,
            version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339(),
            units,
            derived,
            files: Vec::new(),
        }
    }
}
