//! Staged output directory and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use tempfile::TempDir;

/// Files are written into a hidden directory inside the destination and
/// renamed into place by [`Staging::commit`]. Dropping an uncommitted
/// staging area removes everything written so far.
pub struct Staging {
    dest: PathBuf,
    tmp: TempDir,
    names: Vec<String>,
}

impl Staging {
    pub fn new(dest: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dest)?;
        let tmp = tempfile::Builder::new()
            .prefix(".convint-")
            .tempdir_in(dest)?;
        Ok(Self {
            dest: dest.to_path_buf(),
            tmp,
            names: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        let mut f = fs::File::create(self.tmp.path().join(name))?;
        f.write_all(bytes)?;
        f.sync_all()?;
        self.names.push(name.to_string());
        Ok(())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn commit(self) -> std::io::Result<Vec<PathBuf>> {
        let mut out = Vec::with_capacity(self.names.len());
        for name in &self.names {
            let to = self.dest.join(name);
            fs::rename(self.tmp.path().join(name), &to)?;
            out.push(to);
        }
        Ok(out)
    }
}

/// Writes one file atomically via a sibling temporary file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn unix_seconds() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Record of one `solve` invocation. `config` is a self-contained TOML
/// snapshot, so solving it again with `seed` reproduces the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config_path: String,
    pub output_dir: String,
    pub outputs: Vec<String>,
    pub status: String,
    pub accepted_steps: usize,
    pub step_wall_seconds: Vec<f64>,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub config: String,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncommitted_staging_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut s = Staging::new(dir.path()).unwrap();
            s.write("a.txt", b"x").unwrap();
        }
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn commit_moves_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Staging::new(dir.path()).unwrap();
        s.write("a.txt", b"x").unwrap();
        s.commit().unwrap();
        assert_eq!(fs::read(dir.path().join("a.txt")).unwrap(), b"x");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn manifest_round_trips() {
        let m = RunManifest {
            tool: "convint".into(),
            version: "0.1.0".into(),
            seed: 3,
            config_path: "c.toml".into(),
            output_dir: "out".into(),
            outputs: vec!["field.waves".into()],
            status: "max-steps".into(),
            accepted_steps: 5,
            step_wall_seconds: vec![0.5],
            started_unix: 1.0,
            finished_unix: 2.0,
            config: "dimension = 2\n".into(),
        };
        assert_eq!(RunManifest::from_json(&m.to_json()).unwrap(), m);
    }
}
