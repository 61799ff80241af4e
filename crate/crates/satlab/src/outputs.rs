//! Staged output files with atomic installation.
//!
//! Commands build every artifact in memory first; nothing touches the output
//! directory until the whole computation has succeeded, and each file is
//! then written to a temporary name and renamed into place. Reruns with the
//! same config overwrite byte-identically.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::CliResult;

#[derive(Debug, Default)]
pub struct OutputSet {
    files: BTreeMap<String, Vec<u8>>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.files.insert(name.to_string(), bytes.into());
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(|s| s.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.get(name).map(|v| v.as_slice())
    }

    /// Write every staged file under `dir` via temp-file-plus-rename.
    pub fn write_atomic(&self, dir: &Path) -> CliResult<()> {
        fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            let tmp = dir.join(format!(".tmp.{name}"));
            fs::write(&tmp, bytes)?;
            fs::rename(&tmp, dir.join(name))?;
        }
        Ok(())
    }
}

/// Minimal CSV builder: numeric cells use the shortest round-trip float
/// formatting, so identical values always print identically.
pub struct Csv {
    buf: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = String::new();
        buf.push_str(&header.join(","));
        buf.push('\n');
        Csv {
            buf,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "csv row width mismatch");
        self.buf.push_str(&cells.join(","));
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

pub fn cell_f64(v: f64) -> String {
    let mut s = String::new();
    write!(s, "{v}").expect("formatting f64");
    s
}

pub fn cell_usize(v: usize) -> String {
    v.to_string()
}

/// Semicolon-joined index set, empty string for the empty set.
pub fn cell_indices<'a>(it: impl Iterator<Item = &'a usize>) -> String {
    it.map(|i| i.to_string()).collect::<Vec<_>>().join(";")
}
