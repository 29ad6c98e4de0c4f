use std::collections::BTreeMap;

use crate::tabular::{bin_numeric, Column, ColumnData, Dataset};
use crate::Result;

/// Code assigned to missing cells; distinct from every observed code.
pub(crate) const MISSING_CODE: u32 = u32::MAX;

/// Every column reduced to small integer codes so frequency counting is
/// well-defined: numeric columns are equal-width binned, categorical
/// columns are indexed by their sorted distinct tokens.
#[derive(Clone, Debug)]
pub struct Discretized {
    pub names: Vec<String>,
    pub codes: Vec<Vec<u32>>,
    pub n_rows: usize,
}

impl Discretized {
    pub fn new(dataset: &Dataset, attr_bins: usize) -> Result<Self> {
        let codes = dataset
            .columns()
            .iter()
            .map(|c| column_codes(c, attr_bins))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            names: dataset.column_names(),
            codes,
            n_rows: dataset.n_rows(),
        })
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

pub(crate) fn column_codes(col: &Column, attr_bins: usize) -> Result<Vec<u32>> {
    Ok(match &col.data {
        ColumnData::Numeric(_) => bin_numeric(col, attr_bins)?
            .codes
            .into_iter()
            .map(|c| c.unwrap_or(MISSING_CODE))
            .collect(),
        ColumnData::Categorical(v) => {
            let index: BTreeMap<&str, u32> = v
                .iter()
                .flatten()
                .map(String::as_str)
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .enumerate()
                .map(|(i, s)| (s, i as u32))
                .collect();
            v.iter()
                .map(|c| c.as_deref().map(|s| index[s]).unwrap_or(MISSING_CODE))
                .collect()
        }
    })
}

/// Feature matrix for clustering: z-scored numeric columns, one-of-k
/// encoded categorical columns.
pub(crate) fn standardized_features(dataset: &Dataset, skip: Option<&str>) -> Vec<Vec<f64>> {
    let n = dataset.n_rows();
    let mut rows = vec![Vec::new(); n];
    for col in dataset.columns() {
        if Some(col.name.as_str()) == skip {
            continue;
        }
        match &col.data {
            ColumnData::Numeric(v) => {
                let obs: Vec<f64> = v.iter().flatten().copied().collect();
                let mean = obs.iter().sum::<f64>() / obs.len().max(1) as f64;
                let var = obs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / obs.len().max(1) as f64;
                let sd = var.sqrt();
                for (row, c) in rows.iter_mut().zip(v) {
                    let z = match c {
                        Some(x) if sd > 0.0 => (x - mean) / sd,
                        _ => 0.0,
                    };
                    row.push(z);
                }
            }
            ColumnData::Categorical(_) => {
                let codes = column_codes(col, 2).expect("categorical coding is infallible");
                let k = codes.iter().filter(|&&c| c != MISSING_CODE).max().map_or(0, |m| m + 1) as usize;
                for (row, &c) in rows.iter_mut().zip(&codes) {
                    let start = row.len();
                    row.resize(start + k, 0.0);
                    if c != MISSING_CODE {
                        row[start + c as usize] = 1.0;
                    }
                }
            }
        }
    }
    rows
}
