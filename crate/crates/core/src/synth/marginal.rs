use std::collections::BTreeSet;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::laplace::{clamp_normalize, noisy_counts};
use super::{MechanismStep, PrivacyBudget, Synthesized, Synthesizer};
use crate::profiler::TupleDistribution;
use crate::tabular::{bin_index, rescale_values, Column, ColumnData, Dataset, Role};
use crate::{seed, Error, Result};

pub const DEFAULT_SYNTH_BINS: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttributeDomain {
    /// Equal-width bins over the original range.
    Numeric { edges: Vec<f64>, min: f64, max: f64 },
    Categorical { tokens: Vec<String> },
}

impl AttributeDomain {
    fn bins(&self) -> usize {
        match self {
            AttributeDomain::Numeric { edges, .. } => edges.len() - 1,
            AttributeDomain::Categorical { tokens } => tokens.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeModel {
    pub name: String,
    pub domain: AttributeDomain,
}

/// Fitted noisy-marginal model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthModel {
    pub attributes: Vec<AttributeModel>,
    pub cluster_weights: Vec<f64>,
    /// `histograms[cluster][attribute][bin]`, each summing to one.
    pub histograms: Vec<Vec<Vec<f64>>>,
    pub budget: PrivacyBudget,
    pub seed: u64,
    pub warnings: Vec<String>,
}

fn domain_of(col: &Column, bins: usize) -> Result<(AttributeDomain, Vec<usize>)> {
    match &col.data {
        ColumnData::Numeric(v) => {
            let values = col.numeric_values()?;
            let (lo, hi) = col.observed_range().ok_or_else(|| Error::AllMissing(col.name.clone()))?;
            let nb = if lo == hi { 1 } else { bins };
            let width = (hi - lo) / nb as f64;
            let mut edges: Vec<f64> = (0..nb).map(|i| lo + width * i as f64).collect();
            edges.push(hi);
            debug_assert_eq!(values.len(), v.len());
            let codes = values.iter().map(|&x| bin_index(x, lo, hi, nb) as usize).collect();
            Ok((AttributeDomain::Numeric { edges, min: lo, max: hi }, codes))
        }
        ColumnData::Categorical(v) => {
            let tokens: Vec<String> = v
                .iter()
                .map(|c| c.clone().ok_or_else(|| Error::InvalidArgument(format!("column `{}` has missing cells", col.name))))
                .collect::<Result<BTreeSet<_>>>()?
                .into_iter()
                .collect();
            let codes = v
                .iter()
                .map(|c| tokens.binary_search(c.as_ref().unwrap()).unwrap())
                .collect();
            Ok((AttributeDomain::Categorical { tokens }, codes))
        }
    }
}

/// Fits per-cluster Laplace-noised marginals.
///
/// Cluster sizes are released with `budget.weight_epsilon`; every attribute
/// histogram inside a cluster with that attribute's allocation. One record
/// changes one bin of each histogram by one, so the sensitivity is 1.
pub fn fit(s_data: &Dataset, labels: &TupleDistribution, budget: &PrivacyBudget, bins: usize, seed: u64) -> Result<SynthModel> {
    if budget.epsilon.is_nan() || budget.epsilon <= 0.0 {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", budget.epsilon)));
    }
    if labels.labels.len() != s_data.n_rows() {
        return Err(Error::Schema(format!(
            "{} cluster labels for {} rows",
            labels.labels.len(),
            s_data.n_rows()
        )));
    }
    if budget.attribute_epsilon.len() != s_data.n_cols() {
        return Err(Error::Schema(format!(
            "budget covers {} attributes, data has {}",
            budget.attribute_epsilon.len(),
            s_data.n_cols()
        )));
    }
    if bins < 1 {
        return Err(Error::InvalidArgument("synthesis needs at least one bin".into()));
    }
    let k = labels.k.max(1);
    let mut rng = seed::rng(seed);
    let mut warnings = Vec::new();

    let sizes: Vec<f64> = labels.sizes().into_iter().map(|s| s as f64).collect();
    let cluster_weights = clamp_normalize(&noisy_counts(&mut rng, &sizes, budget.weight_epsilon, 1.0));

    let mut attributes = Vec::with_capacity(s_data.n_cols());
    let mut codes = Vec::with_capacity(s_data.n_cols());
    for col in s_data.columns() {
        let (domain, c) = domain_of(col, bins)?;
        attributes.push(AttributeModel {
            name: col.name.clone(),
            domain,
        });
        codes.push(c);
    }

    let mut histograms = vec![Vec::with_capacity(attributes.len()); k];
    for (c, hists) in histograms.iter_mut().enumerate() {
        let empty = sizes.get(c).copied().unwrap_or(0.0) == 0.0;
        if empty {
            let msg = format!("cluster {c} is empty; using uniform marginals");
            log::warn!("{msg}");
            warnings.push(msg);
        }
        for (a, attr) in attributes.iter().enumerate() {
            let nb = attr.domain.bins();
            if empty {
                hists.push(vec![1.0 / nb as f64; nb]);
                continue;
            }
            let mut counts = vec![0.0; nb];
            for (row, &code) in codes[a].iter().enumerate() {
                if labels.labels[row] == c {
                    counts[code] += 1.0;
                }
            }
            let noisy = noisy_counts(&mut rng, &counts, budget.allocation(c, a), 1.0);
            hists.push(clamp_normalize(&noisy));
        }
    }

    Ok(SynthModel {
        attributes,
        cluster_weights,
        histograms,
        budget: budget.clone(),
        seed,
        warnings,
    })
}

/// Draws `n` rows: a cluster per row from the cluster weights, then a bin per
/// attribute from that cluster's marginal, then a value uniformly inside the
/// bin. Numeric columns are min-max rescaled onto the original range.
pub fn sample(model: &SynthModel, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("cannot sample zero rows".into()));
    }
    let mut rng = seed::rng(seed);
    let cluster_dist = WeightedIndex::new(&model.cluster_weights)
        .map_err(|e| Error::InvalidArgument(format!("cluster weights: {e}")))?;
    let bin_dists = model
        .histograms
        .iter()
        .map(|hs| {
            hs.iter()
                .map(|h| WeightedIndex::new(h).map_err(|e| Error::InvalidArgument(format!("histogram: {e}"))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let m = model.attributes.len();
    let mut numeric: Vec<Vec<f64>> = vec![Vec::with_capacity(n); m];
    let mut tokens: Vec<Vec<String>> = vec![Vec::new(); m];
    for _ in 0..n {
        let c = cluster_dist.sample(&mut rng);
        for (a, attr) in model.attributes.iter().enumerate() {
            let b = bin_dists[c][a].sample(&mut rng);
            match &attr.domain {
                AttributeDomain::Numeric { edges, .. } => {
                    let (lo, hi) = (edges[b], edges[b + 1]);
                    let x = if hi > lo { rng.gen_range(lo..hi) } else { lo };
                    numeric[a].push(x);
                }
                AttributeDomain::Categorical { tokens: t } => tokens[a].push(t[b].clone()),
            }
        }
    }

    let columns = model
        .attributes
        .iter()
        .enumerate()
        .map(|(a, attr)| {
            let data = match &attr.domain {
                AttributeDomain::Numeric { min, max, .. } => {
                    let v = &numeric[a];
                    let plo = v.iter().copied().fold(f64::INFINITY, f64::min);
                    let phi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let (out, degenerate) = rescale_values(v, plo, phi, *min, *max);
                    if degenerate {
                        log::warn!("synthetic column `{}` came out constant", attr.name);
                    }
                    ColumnData::Numeric(out.into_iter().map(Some).collect())
                }
                AttributeDomain::Categorical { .. } => {
                    ColumnData::Categorical(std::mem::take(&mut tokens[a]).into_iter().map(Some).collect())
                }
            };
            Column {
                name: attr.name.clone(),
                data,
                role: Some(Role::Sensitive),
            }
        })
        .collect();
    Dataset::new("synthetic", columns)
}

/// Cluster-conditional noisy marginal synthesizer.
#[derive(Clone, Debug)]
pub struct NoisyMarginals {
    pub bins: usize,
}

impl Default for NoisyMarginals {
    fn default() -> Self {
        Self { bins: DEFAULT_SYNTH_BINS }
    }
}

impl Synthesizer for NoisyMarginals {
    fn name(&self) -> &str {
        "noisy_marginals"
    }

    fn synthesize(
        &self,
        s_data: &Dataset,
        labels: &TupleDistribution,
        budget: &PrivacyBudget,
        n_rows: usize,
        seed: u64,
    ) -> Result<Synthesized> {
        let model = fit(s_data, labels, budget, self.bins, seed::derive(seed, &[0]))?;
        let data = sample(&model, n_rows, seed::derive(seed, &[1]))?;
        let mut steps = vec![MechanismStep::noise("laplace_cluster_sizes", budget.weight_epsilon)];
        steps.extend(
            model
                .attributes
                .iter()
                .zip(&budget.attribute_epsilon)
                .map(|(a, &e)| MechanismStep::noise(format!("laplace_marginal:{}", a.name), e)),
        );
        steps.push(MechanismStep::post_processing("sample_from_marginals"));
        steps.push(MechanismStep::post_processing("rescale_minmax"));
        Ok(Synthesized {
            data,
            steps,
            warnings: model.warnings,
        })
    }
}
