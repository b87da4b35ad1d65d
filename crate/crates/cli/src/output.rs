//! Output files, run manifests and number formatting.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

/// 17 significant digits in scientific notation; NaN for missing values.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), num)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema: u32,
    pub command: String,
    pub tool_version: String,
    pub inputs: Vec<FileRecord>,
    pub parameters: serde_json::Value,
    pub outputs: Vec<FileRecord>,
}

/// Collects the files of one run and writes them, plus the manifest that
/// lists them, into the output directory.
pub struct Run {
    command: String,
    out_dir: PathBuf,
    inputs: Vec<FileRecord>,
    outputs: Vec<FileRecord>,
}

impl Run {
    pub fn new(command: &str, out_dir: &Path) -> Result<Self> {
        fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
        Ok(Self {
            command: command.to_string(),
            out_dir: out_dir.to_path_buf(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    /// Records an input file and its hash; returns its bytes.
    pub fn input(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(FileRecord {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(bytes)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.out_dir.join(name);
        write_atomic(&path, bytes)?;
        self.outputs.push(FileRecord {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes `<stem>.manifest.json` and returns its path.
    pub fn finish<P: Serialize>(self, stem: &str, parameters: &P) -> Result<PathBuf> {
        let manifest = RunManifest {
            schema: SCHEMA_VERSION,
            command: self.command,
            tool_version: format!("potlab {}", env!("CARGO_PKG_VERSION")),
            inputs: self.inputs,
            parameters: serde_json::to_value(parameters)?,
            outputs: self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.out_dir.join(format!("{stem}.manifest.json"));
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// File-name-safe form of a label: `(ii) 1913–1945` becomes `ii_1913-1945`.
pub fn slug(label: &str) -> String {
    let mut out = String::new();
    for ch in label.chars() {
        if ch.is_ascii_alphanumeric() {
            out.push(ch.to_ascii_lowercase());
        } else if matches!(ch, '-' | '–') {
            out.push('-');
        } else if !out.is_empty() && !out.ends_with(['_', '-']) {
            out.push('_');
        }
    }
    let out = out.trim_end_matches(['_', '-']).to_string();
    if out.is_empty() {
        "series".to_string()
    } else {
        out
    }
}
