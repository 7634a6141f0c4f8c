//! Output helpers: CSV with round-trip number formatting and content hashes.

use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::Result;

/// Decimal with 17 significant digits (round-trip safe for `f64`).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

/// A CSV table assembled in memory and written in one go.
#[derive(Debug, Clone)]
pub struct CsvTable {
    header: Vec<String>,
    body: String,
}

/// One CSV cell.
pub enum Cell {
    Int(u64),
    Float(f64),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            body: String::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        let cells: Vec<String> = row
            .into_iter()
            .map(|c| match c {
                Cell::Int(i) => i.to_string(),
                Cell::Float(f) => fmt_f64(f),
            })
            .collect();
        self.body.push_str(&cells.join(","));
        self.body.push('\n');
    }

    pub fn rows(&self) -> usize {
        self.body.lines().count()
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}", self.header.join(","), self.body)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_bytes(path, self.to_csv().as_bytes())
    }
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_bytes(path, s.as_bytes())
}

/// Tracks files written during one run so they can be listed with hashes.
#[derive(Debug, Default, Clone)]
pub struct OutputSet {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl OutputSet {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            files: Vec::new(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn csv(&mut self, name: &str, table: &CsvTable) -> Result<PathBuf> {
        let p = self.path(name);
        table.write(&p)?;
        self.files.push(p.clone());
        Ok(p)
    }

    pub fn json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let p = self.path(name);
        write_json(&p, value)?;
        self.files.push(p.clone());
        Ok(p)
    }

    pub fn text(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        let p = self.path(name);
        write_bytes(&p, text.as_bytes())?;
        self.files.push(p.clone());
        Ok(p)
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }
}
