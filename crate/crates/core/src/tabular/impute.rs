use std::collections::HashMap;

use super::{Column, ColumnData, Dataset, ImputedCell};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumericFill {
    #[default]
    Median,
    Mode,
}

/// Numeric columns use `numeric`; categorical columns always use the mode.
#[derive(Clone, Copy, Debug, Default)]
pub struct ImputePolicy {
    pub numeric: NumericFill,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Most frequent value; ties go to the smallest key.
fn mode<K: Ord + Clone + std::hash::Hash>(values: impl Iterator<Item = K>) -> Option<K> {
    let mut counts: HashMap<K, usize> = HashMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|(ka, ca), (kb, cb)| ca.cmp(cb).then_with(|| kb.cmp(ka)))
        .map(|(k, _)| k)
}

/// Fills every missing cell and records its position in the provenance list.
pub fn impute_missing(dataset: &Dataset, policy: ImputePolicy) -> Result<Dataset> {
    let mut imputed = dataset.imputed.clone();
    let mut columns = Vec::with_capacity(dataset.n_cols());
    for col in dataset.columns() {
        let holes: Vec<usize> = match &col.data {
            ColumnData::Numeric(v) => v.iter().enumerate().filter(|(_, c)| c.is_none()).map(|(i, _)| i).collect(),
            ColumnData::Categorical(v) => v.iter().enumerate().filter(|(_, c)| c.is_none()).map(|(i, _)| i).collect(),
        };
        if holes.is_empty() {
            columns.push(col.clone());
            continue;
        }
        if holes.len() == col.len() {
            return Err(Error::AllMissing(col.name.clone()));
        }
        let data = match &col.data {
            ColumnData::Numeric(v) => {
                let fill = match policy.numeric {
                    NumericFill::Median => median(v.iter().flatten().copied().collect()),
                    NumericFill::Mode => {
                        f64::from_bits(mode(v.iter().flatten().map(|x| x.to_bits())).expect("non-empty"))
                    }
                };
                ColumnData::Numeric(v.iter().map(|c| Some(c.unwrap_or(fill))).collect())
            }
            ColumnData::Categorical(v) => {
                let fill = mode(v.iter().flatten().cloned()).expect("non-empty");
                ColumnData::Categorical(v.iter().map(|c| Some(c.clone().unwrap_or_else(|| fill.clone()))).collect())
            }
        };
        imputed.extend(holes.into_iter().map(|row| ImputedCell {
            column: col.name.clone(),
            row,
        }));
        columns.push(Column {
            name: col.name.clone(),
            data,
            role: col.role,
        });
    }
    let mut out = dataset.replace_columns(columns)?;
    out.imputed = imputed;
    Ok(out)
}
