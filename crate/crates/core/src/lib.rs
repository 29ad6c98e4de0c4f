//! Controlled partially-perturbed tabular data sharing.
//!
//! The crate takes a table, measures how much each attribute helps single out
//! a record, derives a set of candidate `(epsilon, delta)` pairs from that risk
//! level through a small fuzzy inference system, perturbs only the sensitive
//! vertical partition with a differentially private synthesizer and picks the
//! candidate release with the best combined utility / linkage score.
//!
//! Module map:
//!
//! - [`tabular`]: data model, CSV ingestion, attribute triage, binning, rescaling
//! - [`profiler`]: tuple distribution, cell surprise factor, personal information factor
//! - [`fis`]: fuzzy mapping between normalized `(epsilon, delta)` and risk
//! - [`synth`]: Laplace noisy-marginal synthesizer and the synthesizer plug-in trait
//! - [`risk`]: similarity groups and worst-case linkable records
//! - [`score`]: utility, effectiveness and instance selection
//! - [`pipeline`]: run configuration and the end-to-end release run

pub mod error;
pub mod fis;
pub mod pipeline;
pub mod profiler;
pub mod risk;
pub mod seed;
pub mod score;
pub mod synth;
pub mod tabular;

pub use error::{Error, FieldError, Result};
