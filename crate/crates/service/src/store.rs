//! On-disk store: content-addressed blobs plus one JSON index replaced
//! atomically on every write.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use optimshare_core::pipeline::{Progress, RunConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt index: {0}")]
    Index(#[from] serde_json::Error),
    #[error("blob {0} failed its hash check")]
    Corrupt(String),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub name: String,
    pub sha256: String,
    pub n_rows: usize,
    pub n_cols: usize,
    pub columns: Vec<String>,
    pub uploaded_at: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskState {
    Queued,
    Running,
    Finished,
    Failed,
    Published,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Released,
    Rejected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub id: String,
    pub dataset_id: String,
    pub config: RunConfig,
    pub state: TaskState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub progress: Option<Progress>,
    pub outcome: Option<Outcome>,
    pub error: Option<String>,
    pub report_sha256: Option<String>,
    pub released_sha256: Option<String>,
    pub published_id: Option<String>,
    pub created_at: u64,
    pub updated_at: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PublishedRecord {
    pub id: String,
    pub task_id: String,
    pub dataset_name: String,
    pub sha256: String,
    pub n_rows: usize,
    pub columns: Vec<String>,
    pub epsilon: f64,
    pub delta: f64,
    pub utility: f64,
    pub effectiveness: f64,
    pub published_at: u64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Index {
    pub next_id: u64,
    pub datasets: BTreeMap<String, DatasetRecord>,
    pub tasks: BTreeMap<String, TaskRecord>,
    pub published: BTreeMap<String, PublishedRecord>,
    #[serde(default)]
    pub defaults: RunConfig,
}

pub struct Store {
    root: PathBuf,
    pub index: Index,
}

impl Store {
    /// Opens or creates a store. Tasks left running by a previous process
    /// are marked failed; the returned ids are queued tasks to resume.
    pub fn open(root: impl Into<PathBuf>) -> Result<(Self, Vec<String>), StoreError> {
        let root = root.into();
        let blobs = root.join("blobs");
        fs::create_dir_all(&blobs).map_err(io(&blobs))?;
        let path = root.join("index.json");
        let index = if path.exists() {
            serde_json::from_slice(&fs::read(&path).map_err(io(&path))?)?
        } else {
            Index::default()
        };
        let mut store = Store { root, index };
        let mut interrupted = false;
        for t in store.index.tasks.values_mut() {
            if t.state == TaskState::Running {
                t.state = TaskState::Failed;
                t.error = Some("interrupted by service restart".into());
                t.updated_at = now();
                interrupted = true;
            }
        }
        if interrupted {
            store.persist()?;
        }
        let queued = store
            .index
            .tasks
            .values()
            .filter(|t| t.state == TaskState::Queued)
            .map(|t| t.id.clone())
            .collect();
        Ok((store, queued))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn next_id(&mut self, prefix: &str) -> String {
        self.index.next_id += 1;
        format!("{prefix}-{:06}", self.index.next_id)
    }

    /// Writes the index to a temporary file and renames it into place.
    pub fn persist(&self) -> Result<(), StoreError> {
        let tmp = self.root.join("index.json.tmp");
        let path = self.root.join("index.json");
        let mut f = fs::File::create(&tmp).map_err(io(&tmp))?;
        f.write_all(&serde_json::to_vec_pretty(&self.index)?).map_err(io(&tmp))?;
        f.sync_all().map_err(io(&tmp))?;
        fs::rename(&tmp, &path).map_err(io(&path))
    }

    fn blob_path(&self, sha: &str) -> PathBuf {
        self.root.join("blobs").join(sha)
    }

    pub fn put_blob(&self, bytes: &[u8]) -> Result<String, StoreError> {
        let sha = sha256_hex(bytes);
        let path = self.blob_path(&sha);
        if !path.exists() {
            let tmp = path.with_extension("tmp");
            fs::write(&tmp, bytes).map_err(io(&tmp))?;
            fs::rename(&tmp, &path).map_err(io(&path))?;
        }
        Ok(sha)
    }

    /// Reads a blob and verifies its hash.
    pub fn read_blob(&self, sha: &str) -> Result<Vec<u8>, StoreError> {
        let path = self.blob_path(sha);
        let bytes = fs::read(&path).map_err(io(&path))?;
        if sha256_hex(&bytes) != sha {
            return Err(StoreError::Corrupt(sha.to_string()));
        }
        Ok(bytes)
    }
}
