use std::ops::RangeInclusive;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::encode::standardized_features;
use crate::tabular::Dataset;
use crate::{seed, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionSource {
    ClassLabels,
    Kmeans,
}

/// Group id per row, used by synthesizers to keep the tuple distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TupleDistribution {
    pub labels: Vec<usize>,
    pub k: usize,
    /// Best silhouette; `None` when class labels were used or only one group exists.
    pub silhouette: Option<f64>,
    pub source: DistributionSource,
    /// Silhouette of every evaluated cluster count.
    pub scores: Vec<(usize, f64)>,
}

impl TupleDistribution {
    pub fn single(n: usize) -> Self {
        Self {
            labels: vec![0; n],
            k: 1,
            silhouette: None,
            source: DistributionSource::Kmeans,
            scores: Vec::new(),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }
}

#[derive(Clone, Copy, Debug)]
pub struct KmeansParams {
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for KmeansParams {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 100,
            seed: 0,
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's k-means with k-means++ seeding; best of `restarts` by inertia.
pub fn kmeans(points: &[Vec<f64>], k: usize, params: KmeansParams) -> Result<Vec<usize>> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("cannot form {k} clusters from {n} points")));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for restart in 0..params.restarts.max(1) {
        let mut rng = seed::rng(seed::derive(params.seed, &[k as u64, restart as u64]));
        let mut centres = vec![points[rng.gen_range(0..n)].clone()];
        let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centres[0])).collect();
        while centres.len() < k {
            let total: f64 = d2.iter().sum();
            let next = if total > 0.0 {
                let mut target = rng.gen::<f64>() * total;
                let mut pick = n - 1;
                for (i, &w) in d2.iter().enumerate() {
                    if target < w {
                        pick = i;
                        break;
                    }
                    target -= w;
                }
                pick
            } else {
                rng.gen_range(0..n)
            };
            centres.push(points[next].clone());
            for (d, p) in d2.iter_mut().zip(points) {
                *d = d.min(sq_dist(p, centres.last().unwrap()));
            }
        }

        let mut labels = vec![0usize; n];
        for iter in 0..params.max_iter {
            let mut changed = false;
            for (l, p) in labels.iter_mut().zip(points) {
                let nearest = (0..k)
                    .min_by(|&a, &b| sq_dist(p, &centres[a]).total_cmp(&sq_dist(p, &centres[b])))
                    .unwrap();
                if *l != nearest {
                    *l = nearest;
                    changed = true;
                }
            }
            if !changed && iter > 0 {
                break;
            }
            let dim = points[0].len();
            let mut sums = vec![vec![0.0; dim]; k];
            let mut counts = vec![0usize; k];
            for (&l, p) in labels.iter().zip(points) {
                counts[l] += 1;
                for (s, x) in sums[l].iter_mut().zip(p) {
                    *s += x;
                }
            }
            for c in 0..k {
                if counts[c] > 0 {
                    centres[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
                }
            }
        }
        let inertia: f64 = labels.iter().zip(points).map(|(&l, p)| sq_dist(p, &centres[l])).sum();
        if best.as_ref().map_or(true, |(b, _)| inertia < *b) {
            best = Some((inertia, labels));
        }
    }
    Ok(best.expect("at least one restart").1)
}

/// Mean silhouette coefficient with Euclidean distance. Points in singleton
/// clusters score 0. Returns `None` unless `2 <= k < n`.
pub fn silhouette(points: &[Vec<f64>], labels: &[usize], k: usize) -> Option<f64> {
    let n = points.len();
    if k < 2 || k >= n {
        return None;
    }
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    let total: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = labels[i];
            if sizes[own] <= 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for j in 0..n {
                if j != i {
                    sums[labels[j]] += sq_dist(&points[i], &points[j]).sqrt();
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own && sizes[c] > 0)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            if !b.is_finite() {
                return 0.0;
            }
            let m = a.max(b);
            if m > 0.0 {
                (b - a) / m
            } else {
                0.0
            }
        })
        .sum();
    Some(total / n as f64)
}

fn class_labels(qs: &Dataset, label: &str) -> Result<TupleDistribution> {
    let col = qs.column(label)?;
    let tokens: Vec<String> = (0..qs.n_rows()).map(|r| col.render(r)).collect();
    let mut distinct: Vec<&String> = tokens.iter().collect();
    distinct.sort_by(|a, b| match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        _ => a.cmp(b),
    });
    distinct.dedup();
    let labels = tokens
        .iter()
        .map(|t| distinct.iter().position(|d| *d == t).unwrap())
        .collect();
    Ok(TupleDistribution {
        labels,
        k: distinct.len(),
        silhouette: None,
        source: DistributionSource::ClassLabels,
        scores: Vec::new(),
    })
}

/// Tuple distribution of the QS table: class labels when the table has
/// them, otherwise the k-means labelling with the highest silhouette over
/// `cn_range` (ties resolve to the smaller cluster count).
pub fn tuple_distribution(qs: &Dataset, cn_range: RangeInclusive<usize>, params: KmeansParams) -> Result<TupleDistribution> {
    let n = qs.n_rows();
    if n < 2 {
        return Err(Error::InvalidArgument("tuple distribution needs at least two rows".into()));
    }
    if cn_range.is_empty() || *cn_range.start() > n {
        return Err(Error::InvalidArgument(format!(
            "cluster range {}..={} is empty or exceeds {n} rows",
            cn_range.start(),
            cn_range.end()
        )));
    }
    if let Some(label) = qs.class_label() {
        return class_labels(qs, label);
    }
    let points = standardized_features(qs, None);
    let mut distinct: Vec<&Vec<f64>> = points.iter().collect();
    distinct.sort_by(|a, b| a.iter().zip(b.iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    distinct.dedup();
    let n_distinct = distinct.len();

    let mut best: Option<(usize, f64, Vec<usize>)> = None;
    let mut scores = Vec::new();
    for cn in cn_range.filter(|&c| c >= 2 && c <= n_distinct && c < n) {
        let labels = kmeans(&points, cn, params)?;
        let Some(s) = silhouette(&points, &labels, cn) else { continue };
        scores.push((cn, s));
        if best.as_ref().map_or(true, |(_, b, _)| s > *b) {
            best = Some((cn, s, labels));
        }
    }
    Ok(match best {
        Some((k, s, labels)) => TupleDistribution {
            labels,
            k,
            silhouette: Some(s),
            source: DistributionSource::Kmeans,
            scores,
        },
        None => TupleDistribution::single(n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::Column;
    use rand::Rng;

    /// Direct O(n^2) silhouette from a full distance matrix.
    fn brute_silhouette(points: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
        let n = points.len();
        let d: Vec<Vec<f64>> = points
            .iter()
            .map(|p| points.iter().map(|q| p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()).collect())
            .collect();
        let mut s = 0.0;
        for i in 0..n {
            let same: Vec<usize> = (0..n).filter(|&j| j != i && labels[j] == labels[i]).collect();
            if same.is_empty() {
                continue;
            }
            let a = same.iter().map(|&j| d[i][j]).sum::<f64>() / same.len() as f64;
            let mut b = f64::INFINITY;
            for c in (0..k).filter(|&c| c != labels[i]) {
                let other: Vec<usize> = (0..n).filter(|&j| labels[j] == c).collect();
                if !other.is_empty() {
                    b = b.min(other.iter().map(|&j| d[i][j]).sum::<f64>() / other.len() as f64);
                }
            }
            s += (b - a) / a.max(b);
        }
        s / n as f64
    }

    fn blobs(seed: u64) -> Dataset {
        let mut rng = crate::seed::rng(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for centre in [0.0, 100.0] {
            for _ in 0..50 {
                x.push(centre + rng.gen_range(-1.0..1.0));
                y.push(centre + rng.gen_range(-1.0..1.0));
            }
        }
        Dataset::new("blobs", vec![Column::numeric("x", x), Column::numeric("y", y)]).unwrap()
    }

    #[test]
    fn silhouette_matches_pairwise_oracle() {
        let mut rng = crate::seed::rng(5);
        for n in [10usize, 57, 300] {
            let points: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect();
            for k in [2usize, 3, 7] {
                let labels = kmeans(&points, k, KmeansParams::default()).unwrap();
                let fast = silhouette(&points, &labels, k).unwrap();
                let slow = brute_silhouette(&points, &labels, k);
                assert!((fast - slow).abs() < 1e-9, "n={n} k={k}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn two_blobs_pick_two_clusters() {
        let td = tuple_distribution(&blobs(1), 2..=6, KmeansParams::default()).unwrap();
        assert_eq!(td.k, 2);
        assert_eq!(td.source, DistributionSource::Kmeans);
        assert!(td.labels[..50].iter().all(|&l| l == td.labels[0]));
        assert!(td.labels[50..].iter().all(|&l| l != td.labels[0]));
    }

    #[test]
    fn identical_points_fall_back_to_one_group() {
        let d = Dataset::new("c", vec![Column::numeric("x", vec![1.0; 20])]).unwrap();
        let td = tuple_distribution(&d, 2..=10, KmeansParams::default()).unwrap();
        assert_eq!(td.k, 1);
        assert!(td.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn class_labels_skip_clustering() {
        let d = Dataset::new(
            "c",
            vec![
                Column::numeric("x", vec![1.0, 2.0, 3.0, 4.0]),
                Column::numeric("q", vec![6.0, 5.0, 6.0, 10.0]),
            ],
        )
        .unwrap()
        .with_class_label("q")
        .unwrap();
        let td = tuple_distribution(&d, 2..=3, KmeansParams::default()).unwrap();
        assert_eq!(td.source, DistributionSource::ClassLabels);
        assert_eq!(td.k, 3);
        assert_eq!(td.labels, vec![1, 0, 1, 2]);
        assert!(td.scores.is_empty());
    }

    #[test]
    fn bad_ranges() {
        let d = blobs(2);
        #[allow(clippy::reversed_empty_ranges)]
        let empty = 5..=4;
        assert!(tuple_distribution(&d, empty, KmeansParams::default()).is_err());
        assert!(tuple_distribution(&d, 500..=600, KmeansParams::default()).is_err());
    }
}
