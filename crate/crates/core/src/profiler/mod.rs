//! Re-identification risk profiling.
//!
//! For every attribute the profiler measures how much the rest of the record
//! narrows down the attribute's value (cell surprise factor, CSF) and
//! condenses the per-row values into a personal information factor (PIF).
//! Quasi identifiers whose PIF grows markedly once sensitive attributes are
//! added to the context are moved into the sensitive partition.

mod cluster;
mod csf;
mod encode;

pub use cluster::{kmeans, silhouette, tuple_distribution, DistributionSource, KmeansParams, TupleDistribution};
pub use csf::{csf, pif, CsfMatrix};
pub use encode::Discretized;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::io_err;
use crate::tabular::{Dataset, Role};
use crate::{Error, Result};

pub const DEFAULT_ATTR_BINS: usize = 10;
pub const DEFAULT_PIF_BINS: usize = 100;
pub const DEFAULT_TAU_FLOOR: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    pub attr_bins: usize,
    pub pif_bins: usize,
}

impl Default for ProfileParams {
    fn default() -> Self {
        Self {
            attr_bins: DEFAULT_ATTR_BINS,
            pif_bins: DEFAULT_PIF_BINS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    KeepQuasi,
    MoveToSensitive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeProfile {
    pub attribute: String,
    /// PIF with the other quasi identifiers as context.
    pub qpif: f64,
    /// PIF with every other QS attribute as context.
    pub qspif: f64,
    pub delta_pif: f64,
    pub verdict: Verdict,
}

fn pif_of(disc: &Discretized, target: usize, ctx: &[usize], params: ProfileParams) -> Result<f64> {
    let m = csf::csf_codes(disc, target, ctx);
    pif(&m.csf, params.pif_bins)
}

/// QPIF and QSPIF of every quasi identifier (leave-one-out contexts).
pub fn assess_q(dataset: &Dataset, params: ProfileParams) -> Result<Vec<AttributeProfile>> {
    let quasi = dataset.quasi();
    if quasi.is_empty() {
        return Err(Error::InvalidArgument("no quasi identifiers to assess".into()));
    }
    let disc = Discretized::new(dataset, params.attr_bins)?;
    let idx = |name: &String| disc.index_of(name).expect("column from the same dataset");
    let q_idx: Vec<usize> = quasi.iter().map(idx).collect();
    let s_idx: Vec<usize> = dataset.sensitive().iter().map(idx).collect();

    q_idx
        .iter()
        .map(|&t| {
            let q_ctx: Vec<usize> = q_idx.iter().copied().filter(|&a| a != t).collect();
            let qs_ctx: Vec<usize> = q_ctx.iter().chain(&s_idx).copied().collect();
            let qpif = pif_of(&disc, t, &q_ctx, params)?;
            let qspif = pif_of(&disc, t, &qs_ctx, params)?;
            Ok(AttributeProfile {
                attribute: disc.names[t].clone(),
                qpif,
                qspif,
                delta_pif: qspif - qpif,
                verdict: Verdict::KeepQuasi,
            })
        })
        .collect()
}

/// The refinement rule: `delta >= alpha * qpif` and `delta > tau_floor`.
pub fn moves_to_sensitive(delta_pif: f64, qpif: f64, alpha: f64, tau_floor: f64) -> bool {
    delta_pif >= alpha * qpif && delta_pif > tau_floor
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub alpha: f64,
    pub tau_floor: f64,
    pub profiles: Vec<AttributeProfile>,
    pub quasi: Vec<String>,
    pub moved_to_sensitive: Vec<String>,
}

impl Refinement {
    /// Applies the role changes to `dataset`.
    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset> {
        dataset.with_roles(&self.moved_to_sensitive, Role::Sensitive)
    }
}

pub fn refine_q(profiles: &[AttributeProfile], alpha: f64, tau_floor: f64) -> Result<Refinement> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("sensitivity coefficient must be positive, got {alpha}")));
    }
    let profiles: Vec<AttributeProfile> = profiles
        .iter()
        .cloned()
        .map(|mut p| {
            p.verdict = if moves_to_sensitive(p.delta_pif, p.qpif, alpha, tau_floor) {
                Verdict::MoveToSensitive
            } else {
                Verdict::KeepQuasi
            };
            p
        })
        .collect();
    let pick = |v: Verdict| profiles.iter().filter(|p| p.verdict == v).map(|p| p.attribute.clone()).collect();
    Ok(Refinement {
        alpha,
        tau_floor,
        quasi: pick(Verdict::KeepQuasi),
        moved_to_sensitive: pick(Verdict::MoveToSensitive),
        profiles,
    })
}

/// Per-row CSF of every attribute against all other attributes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsfTable {
    pub attributes: Vec<String>,
    /// Column-major: `csf[a][row]`.
    pub csf: Vec<Vec<f64>>,
}

impl CsfTable {
    pub fn compute(dataset: &Dataset, attr_bins: usize) -> Result<Self> {
        let disc = Discretized::new(dataset, attr_bins)?;
        let m = disc.names.len();
        let csf = (0..m)
            .map(|t| {
                let ctx: Vec<usize> = (0..m).filter(|&a| a != t).collect();
                csf::csf_codes(&disc, t, &ctx).csf
            })
            .collect();
        Ok(Self {
            attributes: disc.names,
            csf,
        })
    }

    /// Rows x attributes heatmap data with a leading `row` column.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(std::iter::once("row").chain(self.attributes.iter().map(String::as_str)))?;
        let n = self.csf.first().map_or(0, Vec::len);
        for r in 0..n {
            let mut rec = vec![r.to_string()];
            rec.extend(self.csf.iter().map(|c| c[r].to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(io_err("<csf csv>"))?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PifSummary {
    pub per_attribute: Vec<(String, f64)>,
    pub qs_max_pif: f64,
    pub pif_thresh: f64,
}

impl PifSummary {
    pub fn from_csf(table: &CsfTable, pif_bins: usize) -> Result<Self> {
        let per_attribute = table
            .attributes
            .iter()
            .zip(&table.csf)
            .map(|(a, v)| Ok((a.clone(), pif(v, pif_bins)?)))
            .collect::<Result<Vec<_>>>()?;
        let qs_max_pif = per_attribute.iter().map(|(_, p)| *p).fold(0.0, f64::max);
        Ok(Self {
            per_attribute,
            qs_max_pif,
            pif_thresh: threshold_from_max(qs_max_pif),
        })
    }
}

/// `QSMaxPIF` if it is below one, otherwise one.
pub fn threshold_from_max(qs_max_pif: f64) -> f64 {
    if qs_max_pif < 1.0 {
        qs_max_pif.max(0.0)
    } else {
        1.0
    }
}

/// PIF of every attribute over the full (refined) QS table and the
/// resulting privacy threshold.
pub fn pif_threshold(dataset: &Dataset, params: ProfileParams) -> Result<(PifSummary, CsfTable)> {
    let table = CsfTable::compute(dataset, params.attr_bins)?;
    Ok((PifSummary::from_csf(&table, params.pif_bins)?, table))
}
