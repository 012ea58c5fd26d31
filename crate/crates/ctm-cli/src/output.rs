//! Output directory handling: every command writes its artifacts under
//! one directory and closes with a manifest listing each file's size and
//! checksum. All writers are deterministic, so identical configurations
//! produce byte-identical output trees.

use anyhow::{Context, Result};
use ctm_core::field::{FrequencyPair, SpinorField};
use ctm_core::io::{write_field, write_pair, Manifest};
use serde::Serialize;
use std::path::{Path, PathBuf};

/// An output directory with its accumulating manifest.
pub struct OutDir {
    dir: PathBuf,
    manifest: Manifest,
}

impl OutDir {
    /// Creates the directory (and parents) and starts an empty manifest.
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: Manifest::new("ctm", env!("CARGO_PKG_VERSION")),
        })
    }

    /// Path of the directory.
    pub fn path(&self) -> &Path {
        &self.dir
    }

    /// Writes a value as pretty JSON and records it.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        self.write_bytes(name, text.as_bytes())
    }

    /// Writes raw bytes and records them.
    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.dir.join(name), bytes)
            .with_context(|| format!("cannot write {name}"))?;
        self.manifest.record(&self.dir, name)?;
        Ok(())
    }

    /// Writes a binary field file and records it.
    pub fn write_field(&mut self, name: &str, field: &SpinorField) -> Result<()> {
        write_field(&self.dir.join(name), field)?;
        self.manifest.record(&self.dir, name)?;
        Ok(())
    }

    /// Writes a binary frequency-pair file and records it.
    pub fn write_pair(&mut self, name: &str, pair: &FrequencyPair) -> Result<()> {
        write_pair(&self.dir.join(name), pair)?;
        self.manifest.record(&self.dir, name)?;
        Ok(())
    }

    /// Records a file some other writer already placed in the directory.
    pub fn record(&mut self, name: &str) -> Result<()> {
        self.manifest.record(&self.dir, name)?;
        Ok(())
    }

    /// Writes the manifest, closing the run.
    pub fn finish(self) -> Result<()> {
        self.manifest.write(&self.dir)?;
        Ok(())
    }
}
