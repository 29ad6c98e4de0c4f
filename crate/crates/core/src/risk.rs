//! Worst-case linkability of a partially perturbed release.
//!
//! The adversary knows the released quasi identifiers exactly. Rows sharing a
//! quasi-identifier tuple form a similarity group; within each group the row
//! whose perturbed sensitive vector sits at the extreme cosine similarity to
//! its original is counted as linkable.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::tabular::{ColumnData, Dataset};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimilarityGroup {
    pub key: Vec<String>,
    pub rows: Vec<usize>,
}

/// Exact-match groups over the `quasi` columns, ordered by first occurrence.
/// Without quasi identifiers every row belongs to a single group.
pub fn similarity_groups(released: &Dataset, quasi: &[String]) -> Result<Vec<SimilarityGroup>> {
    let n = released.n_rows();
    if quasi.is_empty() {
        return Ok(vec![SimilarityGroup {
            key: Vec::new(),
            rows: (0..n).collect(),
        }]);
    }
    let cols = quasi.iter().map(|q| released.column(q)).collect::<Result<Vec<_>>>()?;
    let mut index: HashMap<Vec<String>, usize> = HashMap::new();
    let mut groups: Vec<SimilarityGroup> = Vec::new();
    for r in 0..n {
        let key: Vec<String> = cols.iter().map(|c| c.render(r)).collect();
        match index.get(&key) {
            Some(&g) => groups[g].rows.push(r),
            None => {
                index.insert(key.clone(), groups.len());
                groups.push(SimilarityGroup { key, rows: vec![r] });
            }
        }
    }
    Ok(groups)
}

/// Which end of the within-group similarity ordering counts as linkable.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkageExtreme {
    #[default]
    Min,
    Max,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkageResult {
    /// Sorted linkable row ids.
    pub linkable: Vec<usize>,
    pub cosine: Vec<f64>,
    pub leak_fraction: f64,
    pub group_count: usize,
    /// Rows whose original or perturbed vector was all zeros (cosine set to 0).
    pub zero_vector_rows: usize,
    /// Normalized residual leak, once an epsilon is attached.
    pub p_n: Option<f64>,
}

impl LinkageResult {
    pub fn with_residual_leak(mut self, epsilon: f64, t_eps: f64) -> Result<Self> {
        self.p_n = Some(residual_leak(epsilon, self.leak_fraction, t_eps)?);
        Ok(self)
    }

    /// Counts of cosine similarities in `bins` equal bins over `[-1, 1]`.
    pub fn cosine_histogram(&self, bins: usize) -> Vec<usize> {
        let mut h = vec![0; bins.max(1)];
        let nb = h.len();
        for &c in &self.cosine {
            let i = (((c + 1.0) / 2.0) * nb as f64).floor().clamp(0.0, (nb - 1) as f64) as usize;
            h[i] += 1;
        }
        h
    }
}

/// Row vectors for the cosine: numeric attributes z-scored with the original
/// column's mean and standard deviation, categorical attributes one-of-k over
/// the union of tokens.
fn encode_pair(original: &Dataset, perturbed: &Dataset) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    if original.n_rows() != perturbed.n_rows() {
        return Err(Error::Schema(format!(
            "original has {} rows, perturbed has {}",
            original.n_rows(),
            perturbed.n_rows()
        )));
    }
    if original.column_names() != perturbed.column_names() {
        return Err(Error::Schema("sensitive partitions have different columns".into()));
    }
    let n = original.n_rows();
    let mut a = vec![Vec::new(); n];
    let mut b = vec![Vec::new(); n];
    for (co, cp) in original.columns().iter().zip(perturbed.columns()) {
        match (&co.data, &cp.data) {
            (ColumnData::Numeric(_), ColumnData::Numeric(_)) => {
                let vo = co.numeric_values()?;
                let vp = cp.numeric_values()?;
                let mean = vo.iter().sum::<f64>() / n as f64;
                let sd = (vo.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
                let z = |x: f64| if sd > 0.0 { (x - mean) / sd } else { 0.0 };
                for r in 0..n {
                    a[r].push(z(vo[r]));
                    b[r].push(z(vp[r]));
                }
            }
            (ColumnData::Categorical(vo), ColumnData::Categorical(vp)) => {
                let tokens: Vec<&String> = vo.iter().chain(vp).flatten().collect::<BTreeSet<_>>().into_iter().collect();
                for (rows, vals) in [(&mut a, vo), (&mut b, vp)] {
                    for (row, cell) in rows.iter_mut().zip(vals) {
                        let start = row.len();
                        row.resize(start + tokens.len(), 0.0);
                        if let Some(t) = cell {
                            row[start + tokens.binary_search(&t).unwrap()] = 1.0;
                        }
                    }
                }
            }
            _ => return Err(Error::Schema(format!("column `{}` changed kind", co.name))),
        }
    }
    Ok((a, b))
}

/// Cosine similarity clamped to `[-1, 1]`; bitwise identical vectors give
/// exactly 1 and a zero vector gives `None`.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Option<f64> {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    if a == b {
        return Some(1.0);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Some((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Linkable rows: in every group, all rows attaining the group's extreme
/// cosine similarity between original and perturbed sensitive vectors.
pub fn linkable_set(
    original_s: &Dataset,
    perturbed_s: &Dataset,
    groups: &[SimilarityGroup],
    extreme: LinkageExtreme,
) -> Result<LinkageResult> {
    let (a, b) = encode_pair(original_s, perturbed_s)?;
    let n = a.len();
    let mut zero_vector_rows = 0;
    let cosine: Vec<f64> = a
        .iter()
        .zip(&b)
        .map(|(x, y)| {
            cosine_similarity(x, y).unwrap_or_else(|| {
                zero_vector_rows += 1;
                0.0
            })
        })
        .collect();
    if zero_vector_rows > 0 {
        log::warn!("{zero_vector_rows} rows had a zero sensitive vector; cosine set to 0");
    }
    let mut linkable = Vec::new();
    for g in groups {
        let pick = g.rows.iter().map(|&r| cosine[r]);
        let target = match extreme {
            LinkageExtreme::Min => pick.fold(f64::INFINITY, f64::min),
            LinkageExtreme::Max => pick.fold(f64::NEG_INFINITY, f64::max),
        };
        linkable.extend(g.rows.iter().copied().filter(|&r| cosine[r] == target));
    }
    linkable.sort_unstable();
    Ok(LinkageResult {
        leak_fraction: if n == 0 { 0.0 } else { linkable.len() as f64 / n as f64 },
        linkable,
        cosine,
        group_count: groups.len(),
        zero_vector_rows,
        p_n: None,
    })
}

/// `epsilon * leak_fraction / t_eps` while below one, else 1.
pub fn residual_leak(epsilon: f64, leak_fraction: f64, t_eps: f64) -> Result<f64> {
    if !(t_eps > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon threshold must be positive, got {t_eps}")));
    }
    let exposure = epsilon * leak_fraction;
    Ok(if t_eps > exposure { (exposure / t_eps).max(0.0) } else { 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::Column;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn grouping() {
        let d = Dataset::new("q", vec![Column::categorical("q", vec!["a", "a", "b"])]).unwrap();
        let g = similarity_groups(&d, &names(&["q"])).unwrap();
        assert_eq!(g.iter().map(|g| g.rows.clone()).collect::<Vec<_>>(), vec![vec![0, 1], vec![2]]);

        let d = Dataset::new("q", vec![Column::numeric("q", vec![1.0, 2.0, 3.0])]).unwrap();
        assert_eq!(similarity_groups(&d, &names(&["q"])).unwrap().len(), 3);
        let g = similarity_groups(&d, &[]).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].rows, vec![0, 1, 2]);
    }

    #[test]
    fn group_minimum_is_linkable() {
        let orig = Dataset::new("s", vec![Column::numeric("x", vec![1.0, 0.0, 0.0]), Column::numeric("y", vec![0.0, 1.0, 1.0])]).unwrap();
        let groups = vec![SimilarityGroup { key: vec![], rows: vec![0, 1, 2] }];
        let r = linkable_set(&orig, &orig, &groups, LinkageExtreme::Min).unwrap();
        assert!(r.cosine.iter().all(|&c| c == 1.0));
        // all tie at 1
        assert_eq!(r.linkable, vec![0, 1, 2]);
    }

    #[test]
    fn argmin_within_group() {
        // hand-build cosines through direct vectors
        let a = Dataset::new("s", vec![Column::numeric("x", vec![1.0, 1.0, 1.0, -1.0]), Column::numeric("y", vec![0.0, 0.0, 0.0, 0.0])]).unwrap();
        let b = Dataset::new("s", vec![Column::numeric("x", vec![1.0, -1.0, 0.5, -1.0]), Column::numeric("y", vec![0.1, 0.5, 0.9, 0.0])]).unwrap();
        let groups = vec![
            SimilarityGroup { key: vec!["g".into()], rows: vec![0, 1, 2] },
            SimilarityGroup { key: vec!["h".into()], rows: vec![3] },
        ];
        let r = linkable_set(&a, &b, &groups, LinkageExtreme::Min).unwrap();
        assert_eq!(r.linkable, vec![1, 3]);
        assert_eq!(r.leak_fraction, 0.5);
        let r = linkable_set(&a, &b, &groups, LinkageExtreme::Max).unwrap();
        assert!(r.linkable.contains(&3));
    }

    #[test]
    fn zero_vector_gives_zero_cosine() {
        let a = Dataset::new("s", vec![Column::numeric("x", vec![2.0, 2.0])]).unwrap();
        let groups = vec![SimilarityGroup { key: vec![], rows: vec![0, 1] }];
        let r = linkable_set(&a, &a, &groups, LinkageExtreme::Min).unwrap();
        assert_eq!(r.zero_vector_rows, 2);
        assert_eq!(r.cosine, vec![0.0, 0.0]);
    }

    #[test]
    fn schema_mismatch() {
        let a = Dataset::new("s", vec![Column::numeric("x", vec![1.0])]).unwrap();
        let b = Dataset::new("s", vec![Column::numeric("y", vec![1.0])]).unwrap();
        assert!(linkable_set(&a, &b, &[], LinkageExtreme::Min).is_err());
    }

    #[test]
    fn residual_leak_formula() {
        assert_eq!(residual_leak(2.0, 0.5, 8.0).unwrap(), 0.125);
        assert_eq!(residual_leak(8.0, 1.0, 8.0).unwrap(), 1.0);
        assert_eq!(residual_leak(16.0, 0.75, 8.0).unwrap(), 1.0);
        assert_eq!(residual_leak(3.0, 0.0, 8.0).unwrap(), 0.0);
        assert!(residual_leak(1.0, 0.5, 0.0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn cosine_bounded_and_symmetric(
            a in proptest::collection::vec(-1e3f64..1e3, 1..8),
            b in proptest::collection::vec(-1e3f64..1e3, 1..8),
        ) {
            let m = a.len().min(b.len());
            let (a, b) = (&a[..m], &b[..m]);
            if let Some(c) = cosine_similarity(a, b) {
                proptest::prop_assert!((-1.0..=1.0).contains(&c));
                proptest::prop_assert_eq!(Some(c), cosine_similarity(b, a));
            }
            if cosine_similarity(a, a).is_some() {
                proptest::prop_assert_eq!(cosine_similarity(a, a), Some(1.0));
            }
        }

        #[test]
        fn residual_leak_in_unit_interval(eps in 0.0f64..100.0, lf in 0.0f64..=1.0, t in 1e-6f64..100.0) {
            let p = residual_leak(eps, lf, t).unwrap();
            proptest::prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}
