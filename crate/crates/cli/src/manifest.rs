//! Run manifests and staged, atomic output.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Derived {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub onset_g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pe_eq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_dpe_dt: Option<f64>,
    /// Experiment-specific scalars.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Convergence {
    pub converged: bool,
    pub localized: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub experiment: String,
    pub version: &'static str,
    pub config: C,
    pub wall_time_seconds: f64,
    pub derived: Derived,
    pub convergence: Convergence,
    /// Data files relative to the manifest's directory.
    pub files: Vec<String>,
}

/// Writes `value` as pretty JSON via a temporary file and a rename.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let tmp = path.with_extension("json.tmp");
    let result = (|| -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(&tmp)?);
        serde_json::to_writer_pretty(&mut w, value)?;
        w.write_all(b"\n")?;
        w.into_inner()?.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| CliError::io(path, e))
}

/// Collects data files in a hidden directory and moves them into place only
/// once the run has succeeded. Dropping an uncommitted stage deletes it.
pub struct Stage {
    out: PathBuf,
    dir: PathBuf,
    files: Vec<String>,
    committed: bool,
}

impl Stage {
    pub fn new(out: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
        let dir = out.join(format!(".staging-{}", std::process::id()));
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        }
        fs::create_dir(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Stage {
            out: out.to_path_buf(),
            dir,
            files: Vec::new(),
            committed: false,
        })
    }

    /// Creates a staged file through `write`.
    pub fn write<F>(&mut self, name: &str, write: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let path = self.dir.join(name);
        let result = (|| {
            let mut w = BufWriter::new(File::create(&path)?);
            write(&mut w)?;
            w.flush()
        })();
        result.map_err(|e| CliError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Moves the data into the output directory, then writes the manifest.
    pub fn commit<C: Serialize>(self, manifest: RunManifest<C>) -> Result<(), CliError> {
        let manifest = RunManifest {
            files: self.files.clone(),
            ..manifest
        };
        self.commit_with(|out| write_json_atomic(&out.join(MANIFEST_NAME), &manifest))
    }

    /// Like [`Stage::commit`] with a caller-written manifest.
    pub fn commit_with<F>(mut self, write_manifest: F) -> Result<(), CliError>
    where
        F: FnOnce(&Path) -> Result<(), CliError>,
    {
        for name in &self.files {
            let to = self.out.join(name);
            fs::rename(self.dir.join(name), &to).map_err(|e| CliError::io(&to, e))?;
        }
        write_manifest(&self.out)?;
        self.committed = true;
        fs::remove_dir_all(&self.dir).map_err(|e| CliError::io(&self.dir, e))
    }
}

impl Drop for Stage {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.dir);
        }
    }
}
