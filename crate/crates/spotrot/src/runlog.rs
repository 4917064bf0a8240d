//! Per-invocation run manifests and staged output directories.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::{CliError, CliResult};

pub const RUN_MANIFEST: &str = "run_manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config_hash: String,
    pub master_seed: Option<u64>,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    /// Paths relative to the output directory, sorted.
    pub outputs: Vec<String>,
}

pub fn unix_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Output directory that only appears at its final path once complete.
///
/// Everything is written under a hidden sibling directory first. Dropping a
/// `Staging` without [`Staging::commit`] removes the partial output.
pub struct Staging {
    target: PathBuf,
    dir: PathBuf,
    committed: bool,
}

impl Staging {
    /// Fails when `target` exists and is not an empty directory.
    pub fn create(target: &Path) -> CliResult<Self> {
        if target.exists() {
            let mut entries = std::fs::read_dir(target).map_err(|e| CliError::input(target, e.to_string()))?;
            if entries.next().is_some() {
                return Err(CliError::input(target, "output directory exists and is not empty"));
            }
        }
        let name = target
            .file_name()
            .ok_or_else(|| CliError::input(target, "output path has no directory name"))?;
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        std::fs::create_dir_all(&parent).map_err(|e| CliError::io(&parent, e))?;
        let dir = parent.join(format!(".{}.staging-{}", name.to_string_lossy(), std::process::id()));
        if dir.exists() {
            std::fs::remove_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        }
        std::fs::create_dir(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Self {
            target: target.to_path_buf(),
            dir,
            committed: false,
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn subdir(&self, name: &str) -> CliResult<PathBuf> {
        let p = self.dir.join(name);
        std::fs::create_dir_all(&p).map_err(|e| CliError::io(&p, e))?;
        Ok(p)
    }

    /// Lists every file written so far, relative and sorted.
    pub fn outputs(&self) -> CliResult<Vec<String>> {
        let mut out = Vec::new();
        collect(&self.dir, &self.dir, &mut out)?;
        out.sort();
        Ok(out)
    }

    /// Writes the run manifest and moves the directory into place.
    pub fn commit(mut self, mut manifest: RunManifest) -> CliResult<PathBuf> {
        manifest.outputs = self.outputs()?;
        manifest.outputs.push(RUN_MANIFEST.to_string());
        manifest.outputs.sort();
        manifest.finished_unix_ms = unix_ms();
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Internal(e.to_string()))?;
        text.push('\n');
        crate::imageio::write_atomic(&self.dir.join(RUN_MANIFEST), text.as_bytes())?;
        if self.target.exists() {
            std::fs::remove_dir(&self.target).map_err(|e| CliError::io(&self.target, e))?;
        }
        std::fs::rename(&self.dir, &self.target).map_err(|e| CliError::io(&self.target, e))?;
        self.committed = true;
        Ok(self.target.clone())
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.committed {
            let _ = std::fs::remove_dir_all(&self.dir);
        }
    }
}

fn collect(root: &Path, dir: &Path, out: &mut Vec<String>) -> CliResult<()> {
    for entry in std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let path = entry.path();
        if path.is_dir() {
            collect(root, &path, out)?;
        } else if let Ok(rel) = path.strip_prefix(root) {
            let rel = rel.to_string_lossy().replace('\\', "/");
            if !rel.rsplit('/').next().is_some_and(|n| n.starts_with('.')) {
                out.push(rel);
            }
        }
    }
    Ok(())
}

pub fn new_manifest(command: &str, config_hash: String, master_seed: Option<u64>) -> RunManifest {
    RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        config_hash,
        master_seed,
        started_unix_ms: unix_ms(),
        finished_unix_ms: 0,
        outputs: Vec::new(),
    }
}
