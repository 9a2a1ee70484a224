//! Artifact files and the run manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliResult;

/// Collects the files a run produces. Without a directory nothing is
/// written and commands print their main table to stdout instead.
#[derive(Debug, Default)]
pub struct Artifacts {
    dir: Option<PathBuf>,
    files: Vec<String>,
}

impl Artifacts {
    pub fn new(dir: Option<PathBuf>) -> CliResult<Self> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d)?;
        }
        Ok(Self { dir, files: Vec::new() })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn enabled(&self) -> bool {
        self.dir.is_some()
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    /// Writes `name` under the output directory (creating subdirectories);
    /// a no-op without one.
    pub fn write(&mut self, name: &str, contents: &[u8]) -> CliResult<()> {
        if let Some(d) = &self.dir {
            let path = d.join(name);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, contents)?;
            self.files.push(name.to_string());
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    /// Writes the table, or prints it when no directory was given.
    pub fn table(&mut self, name: &str, contents: &[u8]) -> CliResult<()> {
        if self.enabled() {
            self.write(name, contents)
        } else {
            print!("{}", String::from_utf8_lossy(contents));
            Ok(())
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'a str,
    /// The command line after config-file expansion.
    pub argv: Vec<String>,
    pub seed: Option<u64>,
    pub threads: usize,
    pub started_unix_secs: u64,
    pub wall_time_secs: f64,
    pub outputs: &'a [String],
}

/// Renders a CSV into a byte buffer with one of the core writers.
pub fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> bslab_core::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}
