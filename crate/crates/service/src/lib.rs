//! Role-gated release service.
//!
//! Curators upload datasets, run the pipeline and publish released tables;
//! operators manage synthesizers and default configuration; data users read
//! the published catalog. Original datasets are never served back.

pub mod api;
pub mod auth;
pub mod store;

use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};

use optimshare_core::pipeline::{run_with_progress, Progress, RunStatus};
use optimshare_core::synth::SynthRegistry;
use optimshare_core::tabular::{read_csv, write_csv, CsvOptions};
use tokio::sync::mpsc;

pub use api::router;
pub use auth::{Role, Tokens};
use store::{now, Outcome, Store, StoreError, TaskState};

pub const DEFAULT_WORKERS: usize = 2;

pub struct AppState {
    pub tokens: Tokens,
    pub registry: SynthRegistry,
    store: Mutex<Store>,
    queue: mpsc::UnboundedSender<String>,
}

impl AppState {
    /// Opens the store and starts `workers` pipeline workers on the current
    /// Tokio runtime. Tasks still queued from an earlier process are resumed.
    pub fn start(store_dir: impl Into<PathBuf>, tokens: Tokens, workers: usize) -> Result<Arc<Self>, StoreError> {
        let (store, queued) = Store::open(store_dir)?;
        let (tx, rx) = mpsc::unbounded_channel();
        let state = Arc::new(AppState {
            tokens,
            registry: SynthRegistry::default(),
            store: Mutex::new(store),
            queue: tx,
        });
        let rx = Arc::new(tokio::sync::Mutex::new(rx));
        for _ in 0..workers.max(1) {
            let (state, rx) = (Arc::clone(&state), Arc::clone(&rx));
            tokio::spawn(async move {
                loop {
                    let next = rx.lock().await.recv().await;
                    let Some(id) = next else { break };
                    let s = Arc::clone(&state);
                    if let Err(e) = tokio::task::spawn_blocking(move || s.execute(&id)).await {
                        log::error!("worker panicked: {e}");
                    }
                }
            });
        }
        for id in queued {
            state.enqueue(id);
        }
        Ok(state)
    }

    pub fn store(&self) -> MutexGuard<'_, Store> {
        self.store.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn enqueue(&self, id: String) {
        if self.queue.send(id).is_err() {
            log::error!("task queue closed");
        }
    }

    /// Runs one queued task to completion. A task that is not queued is
    /// skipped, so each task executes at most once.
    fn execute(self: &Arc<Self>, id: &str) {
        let started = {
            let mut st = self.store();
            let Some(task) = st.index.tasks.get_mut(id) else { return };
            if task.state != TaskState::Queued {
                return;
            }
            task.state = TaskState::Running;
            task.updated_at = now();
            let job = (task.config.clone(), task.dataset_id.clone());
            if let Err(e) = st.persist() {
                log::error!("persisting task {id}: {e}");
            }
            job
        };
        let (config, dataset_id) = started;
        let result = self.run_task(id, &dataset_id, &config);
        let mut st = self.store();
        let stored = result.and_then(|(report, released, outcome)| {
            let report_sha = st.put_blob(&report).map_err(|e| e.to_string())?;
            let released_sha = released.map(|b| st.put_blob(&b)).transpose().map_err(|e| e.to_string())?;
            Ok((report_sha, released_sha, outcome))
        });
        let Some(task) = st.index.tasks.get_mut(id) else { return };
        task.progress = None;
        task.updated_at = now();
        match stored {
            Ok((report_sha, released_sha, outcome)) => {
                task.report_sha256 = Some(report_sha);
                task.released_sha256 = released_sha;
                match outcome {
                    Ok(o) => {
                        task.state = TaskState::Finished;
                        task.outcome = Some(o);
                    }
                    Err(msg) => {
                        task.state = TaskState::Failed;
                        task.error = Some(msg);
                    }
                }
            }
            Err(msg) => {
                task.state = TaskState::Failed;
                task.error = Some(msg);
            }
        }
        if let Err(e) = st.persist() {
            log::error!("persisting task {id}: {e}");
        }
    }

    /// Report bytes, released CSV bytes, and the outcome or failure message.
    #[allow(clippy::type_complexity)]
    fn run_task(
        self: &Arc<Self>,
        id: &str,
        dataset_id: &str,
        config: &optimshare_core::pipeline::RunConfig,
    ) -> Result<(Vec<u8>, Option<Vec<u8>>, Result<Outcome, String>), String> {
        let (bytes, name) = {
            let st = self.store();
            let rec = st.index.datasets.get(dataset_id).ok_or("dataset vanished")?.clone();
            (st.read_blob(&rec.sha256).map_err(|e| e.to_string())?, rec.name)
        };
        let dataset = read_csv(bytes.as_slice(), &name, &CsvOptions::default()).map_err(|e| e.to_string())?;
        let progress = |p: &Progress| {
            if let Some(t) = self.store().index.tasks.get_mut(id) {
                t.progress = Some(p.clone());
            }
        };
        let outcome = run_with_progress(&dataset, config, &self.registry, Some(&progress)).map_err(|e| e.to_string())?;
        let report = serde_json::to_vec_pretty(&outcome.report).map_err(|e| e.to_string())?;
        let released = outcome
            .released
            .as_ref()
            .map(|d| {
                let mut buf = Vec::new();
                write_csv(d, &mut buf).map(|_| buf)
            })
            .transpose()
            .map_err(|e| e.to_string())?;
        let result = match &outcome.report.status {
            RunStatus::Released => Ok(Outcome::Released),
            RunStatus::Rejected => Ok(Outcome::Rejected),
            RunStatus::Failed { stage, message } => Err(format!("{stage}: {message}")),
        };
        Ok((report, released, result))
    }
}
