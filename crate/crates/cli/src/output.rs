//! Atomic output files and run manifests.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Everything needed to repeat a run: the subcommand, its fully resolved
/// configuration and digests of every input file.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: &'static str,
    pub version: &'static str,
    pub seed_root: Option<u64>,
    pub config: serde_json::Value,
    /// Input path as given on the command line → SHA-256 of its bytes.
    pub inputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(subcommand: &'static str, seed_root: Option<u64>, config: &impl Serialize) -> RunManifest {
        RunManifest {
            subcommand,
            version: env!("CARGO_PKG_VERSION"),
            seed_root,
            config: serde_json::to_value(config).expect("configs serialize"),
            inputs: BTreeMap::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.insert(path.display().to_string(), sha256_hex(bytes));
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn read_input(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

pub fn to_json_text(value: &impl Serialize) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("outputs serialize");
    text.push('\n');
    text
}

/// Files produced by one run, written only after the whole run succeeded.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, path: impl Into<PathBuf>, contents: impl Into<Vec<u8>>) {
        self.files.push((path.into(), contents.into()));
    }

    /// Adds `manifest` next to the primary output at `primary`.
    pub fn add_manifest(&mut self, primary: &Path, manifest: &RunManifest) {
        self.add(manifest_path(primary), to_json_text(manifest));
    }

    /// Writes every file through a temporary sibling and an atomic rename.
    pub fn commit(self) -> Result<(), CliError> {
        let mut staged = Vec::with_capacity(self.files.len());
        for (path, contents) in &self.files {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)
                .map_err(|e| CliError::Usage(format!("cannot write to {}: {e}", dir.display())))?;
            tmp.write_all(contents)
                .and_then(|_| tmp.flush())
                .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
            staged.push((tmp, path));
        }
        for (tmp, path) in staged {
            tmp.persist(path)
                .map_err(|e| CliError::Usage(format!("cannot write {}: {}", path.display(), e.error)))?;
        }
        Ok(())
    }
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    primary.with_file_name(name)
}
