//! Writing results and their run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Everything needed to rerun a command. Thread count and wall-clock time
/// are left out so manifests do not depend on how a run was executed.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub subcommand: &'a str,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub version: &'a str,
    pub outputs: Vec<String>,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

/// `out` with `suffix` spliced before the extension: `a.csv` → `a.scatter.csv`.
pub fn sibling(out: &Path, suffix: &str, ext: &str) -> PathBuf {
    out.with_extension(format!("{suffix}.{ext}"))
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

pub struct Outputs<'a> {
    out: Option<&'a Path>,
    written: Vec<PathBuf>,
}

impl<'a> Outputs<'a> {
    pub fn new(out: Option<&'a Path>) -> Self {
        Self { out, written: Vec::new() }
    }

    pub fn has_file(&self) -> bool {
        self.out.is_some()
    }

    pub fn primary(&self) -> Option<&Path> {
        self.out
    }

    /// Main result: to `--out` if given, else stdout.
    pub fn write_main(&mut self, bytes: &[u8]) -> Result<()> {
        match self.out {
            Some(path) => self.write_file(path.to_path_buf(), bytes),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(bytes)?;
                stdout.flush()?;
                Ok(())
            }
        }
    }

    pub fn write_file(&mut self, path: PathBuf, bytes: &[u8]) -> Result<()> {
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    /// Writes the manifest next to the main output, if there is one.
    pub fn finish(self, subcommand: &str, config: serde_json::Value, seed: Option<u64>) -> Result<()> {
        let Some(out) = self.out else { return Ok(()) };
        let manifest = RunManifest {
            subcommand,
            config,
            seed,
            version: env!("CARGO_PKG_VERSION"),
            outputs: self.written.iter().map(|p| file_name(p)).collect(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = manifest_path(out);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}
