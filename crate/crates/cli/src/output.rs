//! Output directory, data files and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

pub struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        s.push('\n');
        self.write(name, &s)
    }

    /// Plot-ready two-column file.
    pub fn dat(&mut self, name: &str, columns: (&str, &str), rows: &[(f64, f64)]) -> Result<(), CliError> {
        let mut s = format!("# {} {}\n", columns.0, columns.1);
        for (x, y) in rows {
            s.push_str(&format!("{x:e} {y:e}\n"));
        }
        self.write(name, &s)
    }

    pub fn finish(self, manifest: &mut Manifest) -> Result<(), CliError> {
        manifest.files = self.files.clone();
        let mut s = serde_json::to_string_pretty(manifest).map_err(|e| CliError::Io(e.to_string()))?;
        s.push('\n');
        let path = self.dir.join(MANIFEST);
        fs::write(&path, s).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

/// Inputs of a run: re-running `command` with `config` reproduces the outputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub seed: u64,
    pub version: String,
    pub threads: usize,
    pub files: Vec<String>,
    pub exit_code: i32,
    pub wall_time_s: f64,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }
}
