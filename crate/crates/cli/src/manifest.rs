//! Run manifests: what ran, with which inputs, and what it wrote.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stark_mbl::io::{file_sha256, read_json, write_json};

use crate::error::CliResult;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Done,
    Skipped,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub id: String,
    pub kind: String,
    /// Hash of everything the task's outputs depend on.
    pub fingerprint: String,
    pub status: TaskStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub outputs: Vec<FileEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub version: String,
    pub seed: u64,
    pub tasks: Vec<TaskRecord>,
}

impl RunManifest {
    pub fn new(config_hash: String, seed: u64) -> Self {
        RunManifest { config_hash, version: env!("CARGO_PKG_VERSION").to_string(), seed, tasks: Vec::new() }
    }

    pub fn load(dir: &Path) -> Option<Self> {
        read_json(&dir.join(MANIFEST_FILE)).ok()
    }

    pub fn save(&self, dir: &Path) -> CliResult<()> {
        Ok(write_json(&dir.join(MANIFEST_FILE), self)?)
    }

    pub fn find(&self, id: &str) -> Option<&TaskRecord> {
        self.tasks.iter().find(|t| t.id == id)
    }

    pub fn count(&self, status: TaskStatus) -> usize {
        self.tasks.iter().filter(|t| t.status == status).count()
    }

    pub fn failed(&self) -> usize {
        self.count(TaskStatus::Failed)
    }
}

pub fn relative(dir: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(dir).unwrap_or(path);
    rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
}

pub fn checksum_entries(dir: &Path, files: &[PathBuf]) -> CliResult<Vec<FileEntry>> {
    let mut out: Vec<FileEntry> = files
        .iter()
        .map(|f| Ok(FileEntry { path: relative(dir, f), sha256: file_sha256(f)? }))
        .collect::<CliResult<_>>()?;
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}

/// A completed record whose outputs are all still present and unchanged.
pub fn still_valid(dir: &Path, record: &TaskRecord, fingerprint: &str) -> bool {
    matches!(record.status, TaskStatus::Done | TaskStatus::Skipped)
        && record.fingerprint == fingerprint
        && record
            .outputs
            .iter()
            .all(|f| file_sha256(&dir.join(&f.path)).map(|h| h == f.sha256).unwrap_or(false))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validity_tracks_checksums() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("sub").join("a.csv");
        std::fs::create_dir_all(file.parent().unwrap()).unwrap();
        std::fs::write(&file, "x\n").unwrap();
        let outputs = checksum_entries(dir.path(), std::slice::from_ref(&file)).unwrap();
        assert_eq!(outputs[0].path, "sub/a.csv");
        let rec = TaskRecord {
            id: "t".into(),
            kind: "spectrum".into(),
            fingerprint: "f".into(),
            status: TaskStatus::Done,
            error: None,
            outputs,
        };
        assert!(still_valid(dir.path(), &rec, "f"));
        assert!(!still_valid(dir.path(), &rec, "g"));
        std::fs::write(&file, "y\n").unwrap();
        assert!(!still_valid(dir.path(), &rec, "f"));
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let m = RunManifest::new("abc".into(), 1);
        m.save(dir.path()).unwrap();
        assert_eq!(RunManifest::load(dir.path()).unwrap(), m);
    }
}
