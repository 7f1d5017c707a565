//! Output files: every table starts with a provenance comment line.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn header(&self) -> String {
        format!(
            "# camdist {} config_hash={} seed={}\n",
            env!("CARGO_PKG_VERSION"),
            self.config_hash,
            self.seed
        )
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

/// Writes `dir/name` as the provenance line followed by `body`.
pub fn write_table(dir: &Path, name: &str, prov: &Provenance, body: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, format!("{}{body}", prov.header())).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Formats an optional number, empty when absent.
pub fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// First 12 hex digits of the SHA-256 of `text`.
pub fn sha256_prefix(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))[..12].to_string()
}
