use std::fs::OpenOptions;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::rng::fnv1a64;

pub const MANIFEST_NAME: &str = "manifest.json";
const LOCK_NAME: &str = ".lock";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Path relative to the run directory.
    pub path: String,
    pub bytes: u64,
    /// FNV-1a 64 of the contents, hex.
    pub checksum: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Record of one command invocation, written last and atomically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub tool_version: String,
    pub timings: Vec<StageTiming>,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Corrupt(format!("manifest {}: {e}", path.display())))
    }

    /// Re-hash every listed file under `root`; returns the mismatching paths.
    pub fn verify(&self, root: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for f in &self.files {
            let bytes = std::fs::read(root.join(&f.path))?;
            if format!("{:016x}", fnv1a64(&bytes)) != f.checksum || bytes.len() as u64 != f.bytes {
                bad.push(f.path.clone());
            }
        }
        Ok(bad)
    }
}

/// An output directory owned by one invocation: holds a lock file for its
/// lifetime and tracks every file written through it.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    lock: PathBuf,
    command: String,
    config_hash: u64,
    files: Vec<FileEntry>,
    timings: Vec<StageTiming>,
    stage_start: Instant,
}

impl RunDir {
    pub fn open(root: &Path, command: &str, config_hash: u64) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        let lock = root.join(LOCK_NAME);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(_) => {}
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                return Err(Error::Config(format!(
                    "output directory {} is in use by another run (remove {} if stale)",
                    root.display(),
                    lock.display()
                )))
            }
            Err(e) => return Err(e.into()),
        }
        Ok(RunDir {
            root: root.to_path_buf(),
            lock,
            command: command.to_string(),
            config_hash,
            files: Vec::new(),
            timings: Vec::new(),
            stage_start: Instant::now(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Write `bytes` atomically to `name` and record it.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.path(name);
        write_atomic(&path, bytes)?;
        self.record(name)?;
        Ok(path)
    }

    /// Record a file some other writer already placed under the run directory.
    pub fn record(&mut self, name: &str) -> Result<()> {
        let bytes = std::fs::read(self.path(name))?;
        let entry = FileEntry {
            path: name.replace('\\', "/"),
            bytes: bytes.len() as u64,
            checksum: format!("{:016x}", fnv1a64(&bytes)),
        };
        self.files.retain(|f| f.path != entry.path);
        self.files.push(entry);
        Ok(())
    }

    /// Record every regular file below `sub` (recursively).
    pub fn record_tree(&mut self, sub: &Path) -> Result<()> {
        let mut stack = vec![self.root.join(sub)];
        let mut found = Vec::new();
        while let Some(dir) = stack.pop() {
            for entry in std::fs::read_dir(&dir)? {
                let path = entry?.path();
                if path.is_dir() {
                    stack.push(path);
                } else if let Ok(rel) = path.strip_prefix(&self.root) {
                    let rel = rel.to_string_lossy().into_owned();
                    if rel != LOCK_NAME && rel != MANIFEST_NAME {
                        found.push(rel);
                    }
                }
            }
        }
        found.sort();
        for rel in found {
            self.record(&rel)?;
        }
        Ok(())
    }

    /// Close the current timing stage.
    pub fn stage(&mut self, name: &str) {
        let now = Instant::now();
        self.timings.push(StageTiming { stage: name.to_string(), seconds: (now - self.stage_start).as_secs_f64() });
        self.stage_start = now;
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    /// Write the manifest and release the lock.
    pub fn finish(mut self) -> Result<RunManifest> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = RunManifest {
            command: self.command.clone(),
            config_hash: format!("{:016x}", self.config_hash),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timings: std::mem::take(&mut self.timings),
            files: std::mem::take(&mut self.files),
        };
        let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Internal(e.to_string()))?;
        write_atomic(&self.path(MANIFEST_NAME), json.as_bytes())?;
        Ok(manifest)
    }
}

impl Drop for RunDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.lock);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lock_excludes_second_run_and_is_released() {
        let dir = tempfile::tempdir().unwrap();
        let first = RunDir::open(dir.path(), "test", 1).unwrap();
        assert!(matches!(RunDir::open(dir.path(), "test", 1), Err(Error::Config(_))));
        drop(first);
        assert!(RunDir::open(dir.path(), "test", 1).is_ok());
    }

    #[test]
    fn manifest_lists_files_with_checksums() {
        let dir = tempfile::tempdir().unwrap();
        let mut run = RunDir::open(dir.path(), "test", 0xabc).unwrap();
        run.write("a.csv", b"x,y\n").unwrap();
        std::fs::create_dir_all(dir.path().join("cells/one")).unwrap();
        std::fs::write(dir.path().join("cells/one/b.bin"), [1u8, 2, 3]).unwrap();
        run.record_tree(Path::new("cells")).unwrap();
        run.stage("all");
        let m = run.finish().unwrap();
        assert_eq!(m.config_hash, "0000000000000abc");
        assert_eq!(m.files.iter().map(|f| f.path.as_str()).collect::<Vec<_>>(), vec!["a.csv", "cells/one/b.bin"]);
        let back = RunManifest::read(&dir.path().join(MANIFEST_NAME)).unwrap();
        assert_eq!(back, m);
        assert!(back.verify(dir.path()).unwrap().is_empty());
        std::fs::write(dir.path().join("a.csv"), b"tampered").unwrap();
        assert_eq!(back.verify(dir.path()).unwrap(), vec!["a.csv".to_string()]);
        assert!(!dir.path().join(".lock").exists());
    }
}
