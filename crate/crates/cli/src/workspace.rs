//! Stage execution scaffolding: every stage writes into a scratch directory
//! that is renamed into place on success or moved under `failed/` on error,
//! and leaves behind a manifest of parameters plus input/output digests so
//! any artifact can be traced to exactly what produced it.

use std::path::{Path, PathBuf};

use serde::Serialize;

use lexiforge_core::digest::fnv1a64_hex;

use crate::error::CliError;

#[derive(Serialize)]
struct StageManifest<'a> {
    stage: &'a str,
    params: serde_json::Value,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

#[derive(Serialize)]
struct FileDigest {
    path: String,
    digest: String,
}

pub fn digest_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(fnv1a64_hex(&bytes))
}

pub struct Stage {
    name: &'static str,
    final_dir: PathBuf,
    scratch: PathBuf,
    params: serde_json::Value,
    inputs: Vec<FileDigest>,
}

impl Stage {
    /// Starts a stage writing under `out`. Existing output is replaced only
    /// once the stage succeeds.
    pub fn begin(
        out: &Path,
        name: &'static str,
        params: serde_json::Value,
    ) -> Result<Stage, CliError> {
        let scratch = scratch_path(out);
        if scratch.exists() {
            std::fs::remove_dir_all(&scratch)?;
        }
        std::fs::create_dir_all(&scratch)?;
        Ok(Stage {
            name,
            final_dir: out.to_path_buf(),
            scratch,
            params,
            inputs: Vec::new(),
        })
    }

    pub fn record_input(&mut self, path: &Path) -> Result<(), CliError> {
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            digest: digest_file(path)?,
        });
        Ok(())
    }

    /// Path for an output file inside the scratch directory.
    pub fn out(&self, file: &str) -> PathBuf {
        self.scratch.join(file)
    }

    pub fn dir(&self) -> &Path {
        &self.scratch
    }

    /// Digests outputs, writes the stage manifest, and moves the scratch
    /// directory into place.
    pub fn finish(self) -> Result<PathBuf, CliError> {
        let mut outputs = Vec::new();
        let mut names: Vec<PathBuf> = std::fs::read_dir(&self.scratch)?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()?;
        names.sort();
        for path in names {
            if path.is_file() {
                outputs.push(FileDigest {
                    path: path
                        .file_name()
                        .map(|n| n.to_string_lossy().into_owned())
                        .unwrap_or_default(),
                    digest: digest_file(&path)?,
                });
            }
        }
        let manifest = StageManifest {
            stage: self.name,
            params: self.params,
            inputs: self.inputs,
            outputs,
        };
        std::fs::write(
            self.scratch.join("manifest.json"),
            serde_json::to_string_pretty(&manifest)?,
        )?;
        if self.final_dir.exists() {
            std::fs::remove_dir_all(&self.final_dir)?;
        }
        if let Some(parent) = self.final_dir.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::rename(&self.scratch, &self.final_dir)
            .map_err(|e| CliError::internal(format!("finalizing {}: {e}", self.name)))?;
        Ok(self.final_dir)
    }

    /// Moves partial outputs under `<parent>/failed/<stage>`.
    pub fn quarantine(self) -> PathBuf {
        let parent = self
            .final_dir
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        let failed = parent.join("failed").join(self.name);
        let _ = std::fs::create_dir_all(failed.parent().unwrap());
        let _ = std::fs::remove_dir_all(&failed);
        let _ = std::fs::rename(&self.scratch, &failed);
        failed
    }
}

fn scratch_path(out: &Path) -> PathBuf {
    let name = out
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "stage".to_string());
    out.with_file_name(format!(".tmp-{name}"))
}

/// Runs a stage body with quarantine-on-failure semantics.
pub fn run_stage<F>(
    out: &Path,
    name: &'static str,
    params: serde_json::Value,
    body: F,
) -> Result<PathBuf, CliError>
where
    F: FnOnce(&mut Stage) -> Result<(), CliError>,
{
    let mut stage = Stage::begin(out, name, params)?;
    match body(&mut stage) {
        Ok(()) => stage.finish(),
        Err(err) => {
            let failed = stage.quarantine();
            Err(CliError::data(format!(
                "stage {name} failed: {err} (partial outputs under {})",
                failed.display()
            )))
        }
    }
}

/// One pipeline instance per workdir.
pub struct WorkdirLock {
    path: PathBuf,
}

impl WorkdirLock {
    pub fn acquire(workdir: &Path) -> Result<WorkdirLock, CliError> {
        std::fs::create_dir_all(workdir)?;
        let path = workdir.join(".lock");
        match std::fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(WorkdirLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::data(
                format!(
                    "workdir {} is locked by another pipeline instance (remove {} if stale)",
                    workdir.display(),
                    path.display()
                ),
            )),
            Err(e) => Err(CliError::internal(format!("lock: {e}"))),
        }
    }
}

impl Drop for WorkdirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}
