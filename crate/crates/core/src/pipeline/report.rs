use serde::{Deserialize, Serialize};

use crate::fis::EpsDeltaGrid;
use crate::profiler::{CsfTable, DistributionSource, PifSummary, Refinement};
use crate::score::{InstanceId, PerturbationInstance, Selection};
use crate::tabular::DatasetMeta;

use super::RunConfig;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputFingerprint {
    pub name: String,
    pub n_rows: usize,
    pub n_cols: usize,
    /// SHA-256 of the input rendered as CSV.
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriageSummary {
    pub quasi: Vec<String>,
    pub sensitive: Vec<String>,
    pub dropped: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub source: DistributionSource,
    pub k: usize,
    pub sizes: Vec<usize>,
    pub silhouette: Option<f64>,
    pub scores: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceAccounting {
    pub id: InstanceId,
    pub epsilon: f64,
    pub delta: f64,
    pub f: f64,
    pub f_d: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Accounting {
    pub per_instance: Vec<InstanceAccounting>,
    /// Sequential composition over every generated instance.
    pub cumulative_epsilon: f64,
    pub cumulative_delta: f64,
    pub released: Option<InstanceAccounting>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub instance_count: usize,
    pub mean_utility: f64,
    pub mean_effectiveness: f64,
    pub best_effectiveness: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub secs: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub stages: Vec<StageTiming>,
    pub total_secs: f64,
    pub per_record_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RunStatus {
    Released,
    Rejected,
    Failed { stage: String, message: String },
}

/// Audit trail of one run. Every field except `timings` is a deterministic
/// function of the input and the config.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReleaseReport {
    pub status: RunStatus,
    pub config: RunConfig,
    pub input: InputFingerprint,
    pub metadata: Option<DatasetMeta>,
    pub triage: Option<TriageSummary>,
    pub tuple_distribution: Option<DistributionSummary>,
    pub refinement: Option<Refinement>,
    pub pif: Option<PifSummary>,
    pub csf: Option<CsfTable>,
    pub delta_base: f64,
    pub delta_max: f64,
    pub grid: Option<EpsDeltaGrid>,
    /// `(eps_norm, delta_norm, pif)` on a 21 x 21 lattice.
    pub surface: Vec<(f64, f64, f64)>,
    pub instances: Vec<PerturbationInstance>,
    pub selection: Option<Selection>,
    pub accounting: Option<Accounting>,
    pub summary: Option<RunSummary>,
    pub warnings: Vec<String>,
    pub timings: Option<Timings>,
}

impl ReleaseReport {
    pub fn without_timings(&self) -> Self {
        Self {
            timings: None,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> crate::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> crate::Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn released_id(&self) -> Option<InstanceId> {
        self.selection.as_ref().and_then(Selection::released)
    }

    pub fn instance(&self, id: InstanceId) -> Option<&PerturbationInstance> {
        self.instances.iter().find(|i| i.id == id)
    }
}
