//! Differentially private synthesis of the sensitive partition.
//!
//! Synthesizers implement [`Synthesizer`] and are looked up by name in a
//! [`SynthRegistry`]. The built-in [`NoisyMarginals`] synthesizer releases
//! Laplace-noised per-cluster marginals and samples from them.

pub mod laplace;
mod marginal;

pub use marginal::{fit, sample, AttributeDomain, AttributeModel, NoisyMarginals, SynthModel, DEFAULT_SYNTH_BINS};

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::profiler::TupleDistribution;
use crate::tabular::Dataset;
use crate::{Error, Result};

pub const DEFAULT_WEIGHT_SHARE: f64 = 0.2;

/// Allocation of one instance's `(epsilon, delta)`.
///
/// A share of epsilon pays for the noisy cluster sizes; the rest is split
/// evenly over attributes (sequential composition). Clusters are disjoint
/// row groups, so every cluster reuses the same per-attribute split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    /// Carried for accounting; the Laplace mechanism itself is `(epsilon, 0)`-DP.
    pub delta: f64,
    pub weight_epsilon: f64,
    pub attribute_epsilon: Vec<f64>,
    pub n_clusters: usize,
}

impl PrivacyBudget {
    pub fn allocation(&self, _cluster: usize, attribute: usize) -> f64 {
        self.attribute_epsilon[attribute]
    }

    /// Total epsilon implied by the allocations.
    pub fn composed_epsilon(&self) -> f64 {
        self.weight_epsilon + self.attribute_epsilon.iter().sum::<f64>()
    }
}

pub fn compose_budget(epsilon: f64, delta: f64, n_attrs: usize, n_clusters: usize, weight_share: f64) -> Result<PrivacyBudget> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(delta >= 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be non-negative, got {delta}")));
    }
    if n_attrs == 0 || n_clusters == 0 {
        return Err(Error::InvalidArgument("budget needs at least one attribute and one cluster".into()));
    }
    if !(weight_share > 0.0 && weight_share < 1.0) {
        return Err(Error::InvalidArgument(format!("weight share must lie in (0, 1), got {weight_share}")));
    }
    let weight_epsilon = weight_share * epsilon;
    let per_attr = if epsilon.is_infinite() {
        f64::INFINITY
    } else {
        (epsilon - weight_epsilon) / n_attrs as f64
    };
    Ok(PrivacyBudget {
        epsilon,
        delta,
        weight_epsilon,
        attribute_epsilon: vec![per_attr; n_attrs],
        n_clusters,
    })
}

/// One step on the path from input to released table. Only steps with
/// `consumes_budget` touch the data through noise; the rest are
/// post-processing of a differentially private output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanismStep {
    pub stage: String,
    pub consumes_budget: bool,
    pub epsilon: f64,
}

impl MechanismStep {
    pub fn noise(stage: impl Into<String>, epsilon: f64) -> Self {
        Self {
            stage: stage.into(),
            consumes_budget: true,
            epsilon,
        }
    }

    pub fn post_processing(stage: impl Into<String>) -> Self {
        Self {
            stage: stage.into(),
            consumes_budget: false,
            epsilon: 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Synthesized {
    pub data: Dataset,
    pub steps: Vec<MechanismStep>,
    pub warnings: Vec<String>,
}

/// A differentially private generator for the sensitive partition.
///
/// Implementations must spend at most `budget.epsilon` on `s_data`, return
/// exactly `n_rows` rows with the same schema, and be deterministic in `seed`.
pub trait Synthesizer: Send + Sync {
    fn name(&self) -> &str;

    fn synthesize(
        &self,
        s_data: &Dataset,
        labels: &TupleDistribution,
        budget: &PrivacyBudget,
        n_rows: usize,
        seed: u64,
    ) -> Result<Synthesized>;
}

#[derive(Clone)]
pub struct SynthRegistry {
    entries: BTreeMap<String, Arc<dyn Synthesizer>>,
}

impl Default for SynthRegistry {
    fn default() -> Self {
        let mut r = Self { entries: BTreeMap::new() };
        r.register(Arc::new(NoisyMarginals::default()));
        r
    }
}

impl SynthRegistry {
    pub fn register(&mut self, synth: Arc<dyn Synthesizer>) {
        self.entries.insert(synth.name().to_string(), synth);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Synthesizer>> {
        self.entries
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownSynthesizer(name.to_string()))
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }
}
