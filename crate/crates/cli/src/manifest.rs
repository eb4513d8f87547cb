//! Run manifests: every resolved parameter plus SHA-256 digests of inputs and
//! outputs, written next to each output file.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

/// No wall-clock fields: identical runs must produce identical manifests.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub params: Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut hasher = Sha256::new();
    io::copy(&mut f, &mut hasher).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(hex::encode(hasher.finalize()))
}

impl RunManifest {
    pub fn new(subcommand: &'static str, params: Value) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            params,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<()> {
        self.inputs.push(FileDigest {
            role: role.to_owned(),
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn output(&mut self, role: &str, path: &Path) -> Result<()> {
        self.outputs.push(FileDigest {
            role: role.to_owned(),
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    /// Writes `<primary>.manifest.json` and returns its path.
    pub fn write_beside(&self, primary: &Path) -> Result<PathBuf> {
        let path = sibling(primary, "manifest.json");
        let mut f =
            File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        Ok(path)
    }
}

/// `<path>.<suffix>`, keeping the original extension.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}
