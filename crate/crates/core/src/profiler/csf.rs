use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::encode::Discretized;
use crate::tabular::Dataset;
use crate::{Error, Result};

/// Per-row prior, posterior and cell surprise factor of one target
/// attribute given a set of context attributes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsfMatrix {
    pub target: String,
    pub context: Vec<String>,
    pub prior: Vec<f64>,
    pub posterior: Vec<f64>,
    pub csf: Vec<f64>,
}

impl CsfMatrix {
    /// Unclamped `posterior - prior` per row.
    pub fn delta(&self) -> Vec<f64> {
        self.posterior.iter().zip(&self.prior).map(|(po, pr)| po - pr).collect()
    }
}

/// Cell surprise factor of `target` given `context`, counted over the
/// discretized table. Numeric attributes are binned into `attr_bins` bins.
pub fn csf(dataset: &Dataset, target: &str, context: &[String], attr_bins: usize) -> Result<CsfMatrix> {
    let disc = Discretized::new(dataset, attr_bins)?;
    let t = disc.index_of(target).ok_or_else(|| Error::UnknownColumn(target.to_string()))?;
    let ctx = context
        .iter()
        .map(|c| disc.index_of(c).ok_or_else(|| Error::UnknownColumn(c.clone())))
        .collect::<Result<Vec<_>>>()?;
    if ctx.contains(&t) {
        return Err(Error::InvalidArgument(format!("target `{target}` is part of its own context")));
    }
    Ok(csf_codes(&disc, t, &ctx))
}

pub(crate) fn csf_codes(disc: &Discretized, target: usize, context: &[usize]) -> CsfMatrix {
    let n = disc.n_rows;
    let tcodes = &disc.codes[target];

    let mut target_counts: HashMap<u32, u32> = HashMap::new();
    for &c in tcodes {
        *target_counts.entry(c).or_default() += 1;
    }
    let prior: Vec<f64> = tcodes.iter().map(|c| target_counts[c] as f64 / n as f64).collect();

    let posterior: Vec<f64> = if context.is_empty() {
        prior.clone()
    } else {
        let keys: Vec<Vec<u32>> = (0..n)
            .map(|r| context.iter().map(|&a| disc.codes[a][r]).collect())
            .collect();
        let mut ctx_counts: HashMap<&[u32], u32> = HashMap::new();
        let mut joint_counts: HashMap<(&[u32], u32), u32> = HashMap::new();
        for (k, &tc) in keys.iter().zip(tcodes) {
            *ctx_counts.entry(k.as_slice()).or_default() += 1;
            *joint_counts.entry((k.as_slice(), tc)).or_default() += 1;
        }
        keys.iter()
            .zip(tcodes)
            .map(|(k, &tc)| joint_counts[&(k.as_slice(), tc)] as f64 / ctx_counts[k.as_slice()] as f64)
            .collect()
    };
    let csf = prior
        .iter()
        .zip(&posterior)
        .map(|(pr, po)| (po - pr).max(0.0))
        .collect();
    CsfMatrix {
        target: disc.names[target].clone(),
        context: context.iter().map(|&a| disc.names[a].clone()).collect(),
        prior,
        posterior,
        csf,
    }
}

/// Bin-weighted mean of CSF values.
///
/// Values are histogrammed into `bins + 1` bins of width `1 / bins` centred
/// on `0, 1/bins, ..., 1`, so that zero surprise aggregates to exactly zero
/// and a value sitting on a bin centre aggregates to itself.
pub fn pif(values: &[f64], bins: usize) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("no CSF values to aggregate".into()));
    }
    if bins == 0 {
        return Err(Error::InvalidArgument("PIF bin count must be at least 1".into()));
    }
    let mut counts = vec![0u64; bins + 1];
    for &v in values {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidArgument(format!("CSF value {v} outside [0, 1]")));
        }
        let idx = ((v * bins as f64) + 0.5).floor().min(bins as f64) as usize;
        counts[idx] += 1;
    }
    let weighted: f64 = counts
        .iter()
        .enumerate()
        .map(|(i, &h)| (i as f64 / bins as f64) * h as f64)
        .sum();
    Ok((weighted / values.len() as f64).clamp(0.0, 1.0))
}
