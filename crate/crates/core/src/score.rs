//! Utility, effectiveness and selection of candidate releases.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::risk::LinkageResult;
use crate::synth::MechanismStep;
use crate::tabular::{bin_index, ColumnData, Dataset};
use crate::{seed, Error, Result};

pub const KL_SMOOTHING: f64 = 1e-6;
pub const DEFAULT_UTILITY_BINS: usize = 32;
pub const DEFAULT_TEST_FRACTION: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityMode {
    KlGeneric,
    Classification,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierMetrics {
    pub accuracy: f64,
    /// Macro average over classes present in the test split.
    pub precision: f64,
    pub recall: f64,
    pub rmse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    pub mode: UtilityMode,
    pub u_original: f64,
    pub u_perturbed: f64,
    pub u_loss: f64,
    pub kl_per_attribute: Vec<(String, f64)>,
    pub perturbed_metrics: Option<ClassifierMetrics>,
    pub original_metrics: Option<ClassifierMetrics>,
}

/// `KL(p || q)` in nats.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, qi)| pi * (pi / qi).ln())
        .sum()
}

fn smoothed(counts: &[f64]) -> Vec<f64> {
    let total: f64 = counts.iter().sum();
    let k = counts.len() as f64;
    counts
        .iter()
        .map(|c| (c / total + KL_SMOOTHING) / (1.0 + KL_SMOOTHING * k))
        .collect()
}

fn check_schema(original: &Dataset, perturbed: &Dataset) -> Result<()> {
    if original.column_names() != perturbed.column_names() {
        return Err(Error::Schema(format!(
            "columns differ: {:?} vs {:?}",
            original.column_names(),
            perturbed.column_names()
        )));
    }
    for (a, b) in original.columns().iter().zip(perturbed.columns()) {
        if a.kind() != b.kind() {
            return Err(Error::Schema(format!("column `{}` changed kind", a.name)));
        }
    }
    Ok(())
}

/// Smoothed binned marginals of one column in both tables.
fn marginals(original: &Dataset, perturbed: &Dataset, idx: usize, bins: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (co, cp) = (&original.columns()[idx], &perturbed.columns()[idx]);
    Ok(match (&co.data, &cp.data) {
        (ColumnData::Numeric(_), ColumnData::Numeric(_)) => {
            let (lo, hi) = co.observed_range().ok_or_else(|| Error::AllMissing(co.name.clone()))?;
            let nb = if lo == hi { 1 } else { bins };
            let mut p = vec![0.0; nb];
            let mut q = vec![0.0; nb];
            for x in co.numeric_values()? {
                p[bin_index(x, lo, hi, nb) as usize] += 1.0;
            }
            for x in cp.numeric_values()? {
                q[bin_index(x, lo, hi, nb) as usize] += 1.0;
            }
            (smoothed(&p), smoothed(&q))
        }
        (ColumnData::Categorical(vo), ColumnData::Categorical(vp)) => {
            let tokens: Vec<&String> = vo.iter().chain(vp).flatten().collect::<BTreeSet<_>>().into_iter().collect();
            let mut p = vec![0.0; tokens.len()];
            let mut q = vec![0.0; tokens.len()];
            for t in vo.iter().flatten() {
                p[tokens.binary_search(&t).unwrap()] += 1.0;
            }
            for t in vp.iter().flatten() {
                q[tokens.binary_search(&t).unwrap()] += 1.0;
            }
            (smoothed(&p), smoothed(&q))
        }
        _ => unreachable!("schema checked"),
    })
}

/// Generic utility: the largest per-attribute KL divergence between original
/// and perturbed marginals, mapped to `exp(-KL)`.
pub fn utility_kl(original_s: &Dataset, perturbed_s: &Dataset, bins: usize) -> Result<UtilityReport> {
    check_schema(original_s, perturbed_s)?;
    let mut kl_per_attribute = Vec::with_capacity(original_s.n_cols());
    for (i, c) in original_s.columns().iter().enumerate() {
        let (p, q) = marginals(original_s, perturbed_s, i, bins)?;
        kl_per_attribute.push((c.name.clone(), kl_divergence(&p, &q).max(0.0)));
    }
    let kl = kl_per_attribute.iter().map(|(_, k)| *k).fold(0.0, f64::max);
    let u_perturbed = (-kl).exp();
    Ok(UtilityReport {
        mode: UtilityMode::KlGeneric,
        u_original: 1.0,
        u_perturbed,
        u_loss: utility_loss(1.0, u_perturbed),
        kl_per_attribute,
        perturbed_metrics: None,
        original_metrics: None,
    })
}

/// Gaussian naive Bayes with variance smoothing `1e-9 * max feature variance`.
#[derive(Clone, Debug)]
pub struct GaussianNb {
    log_priors: Vec<f64>,
    means: Vec<Vec<f64>>,
    vars: Vec<Vec<f64>>,
    present: Vec<bool>,
}

impl GaussianNb {
    pub fn fit(features: &[Vec<f64>], labels: &[usize], n_classes: usize) -> Result<Self> {
        if features.is_empty() || features.len() != labels.len() {
            return Err(Error::InvalidArgument("naive Bayes needs matching non-empty features and labels".into()));
        }
        let d = features[0].len();
        let n = features.len();
        let mut counts = vec![0usize; n_classes];
        let mut sums = vec![vec![0.0; d]; n_classes];
        for (x, &y) in features.iter().zip(labels) {
            counts[y] += 1;
            for (s, v) in sums[y].iter_mut().zip(x) {
                *s += v;
            }
        }
        let means: Vec<Vec<f64>> = sums
            .iter()
            .zip(&counts)
            .map(|(s, &c)| s.iter().map(|v| if c > 0 { v / c as f64 } else { 0.0 }).collect())
            .collect();
        let mut vars = vec![vec![0.0; d]; n_classes];
        for (x, &y) in features.iter().zip(labels) {
            for j in 0..d {
                vars[y][j] += (x[j] - means[y][j]).powi(2);
            }
        }
        let global_var = (0..d)
            .map(|j| {
                let m = features.iter().map(|x| x[j]).sum::<f64>() / n as f64;
                features.iter().map(|x| (x[j] - m).powi(2)).sum::<f64>() / n as f64
            })
            .fold(0.0, f64::max);
        let eps = 1e-9 * global_var.max(f64::MIN_POSITIVE);
        for (v, &c) in vars.iter_mut().zip(&counts) {
            for vj in v.iter_mut() {
                *vj = if c > 0 { *vj / c as f64 } else { 0.0 } + eps;
            }
        }
        let floor = 1.0 / (n + n_classes) as f64;
        let log_priors = counts
            .iter()
            .map(|&c| (c as f64 / n as f64).max(floor).ln())
            .collect();
        Ok(Self {
            log_priors,
            means,
            vars,
            present: counts.iter().map(|&c| c > 0).collect(),
        })
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        (0..self.log_priors.len())
            .filter(|&c| self.present[c])
            .map(|c| {
                let ll: f64 = x
                    .iter()
                    .zip(&self.means[c])
                    .zip(&self.vars[c])
                    .map(|((xi, m), v)| -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (xi - m).powi(2) / v))
                    .sum();
                (c, self.log_priors[c] + ll)
            })
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
            .0
    }
}

/// Class tokens sorted numerically when they all parse, else lexically.
fn class_index(col: &crate::tabular::Column, n: usize) -> (Vec<String>, Vec<usize>) {
    let tokens: Vec<String> = (0..n).map(|r| col.render(r)).collect();
    let mut classes: Vec<String> = tokens.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    if classes.iter().all(|c| c.parse::<f64>().is_ok()) {
        classes.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
    }
    let idx = tokens.iter().map(|t| classes.iter().position(|c| c == t).unwrap()).collect();
    (classes, idx)
}

/// Feature rows excluding `label`. Numeric columns as-is, categorical
/// columns one-of-k over the original's tokens.
fn features(table: &Dataset, reference: &Dataset, label: &str) -> Result<Vec<Vec<f64>>> {
    let n = table.n_rows();
    let mut rows = vec![Vec::new(); n];
    for (c, rc) in table.columns().iter().zip(reference.columns()) {
        if c.name == label {
            continue;
        }
        match (&c.data, &rc.data) {
            (ColumnData::Numeric(_), _) => {
                for (row, x) in rows.iter_mut().zip(c.numeric_values()?) {
                    row.push(x);
                }
            }
            (ColumnData::Categorical(v), ColumnData::Categorical(rv)) => {
                let tokens: Vec<&String> = rv.iter().flatten().collect::<BTreeSet<_>>().into_iter().collect();
                for (row, cell) in rows.iter_mut().zip(v) {
                    let start = row.len();
                    row.resize(start + tokens.len(), 0.0);
                    if let Some(i) = cell.as_ref().and_then(|t| tokens.binary_search(&t).ok()) {
                        row[start + i] = 1.0;
                    }
                }
            }
            _ => return Err(Error::Schema(format!("column `{}` changed kind", c.name))),
        }
    }
    Ok(rows)
}

/// Stratified split: `test_fraction` of every class (rounded, at least one
/// row when the class has two or more) goes to the test side.
pub fn stratified_split(labels: &[usize], n_classes: usize, test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = seed::rng(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for c in 0..n_classes {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&r| labels[r] == c).collect();
        rows.shuffle(&mut rng);
        let mut k = (rows.len() as f64 * test_fraction).round() as usize;
        if k == 0 && rows.len() >= 2 && test_fraction > 0.0 {
            k = 1;
        }
        test.extend_from_slice(&rows[..k]);
        train.extend_from_slice(&rows[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

fn evaluate(model: &GaussianNb, x: &[Vec<f64>], y: &[usize], classes: &[String]) -> ClassifierMetrics {
    let k = classes.len();
    let pred: Vec<usize> = x.iter().map(|r| model.predict(r)).collect();
    let correct = pred.iter().zip(y).filter(|(p, t)| p == t).count();
    let mut precision = 0.0;
    let mut recall = 0.0;
    let mut present = 0;
    for c in 0..k {
        let actual = y.iter().filter(|&&t| t == c).count();
        if actual == 0 {
            continue;
        }
        present += 1;
        let predicted = pred.iter().filter(|&&p| p == c).count();
        let tp = pred.iter().zip(y).filter(|(&p, &t)| p == c && t == c).count();
        recall += tp as f64 / actual as f64;
        if predicted > 0 {
            precision += tp as f64 / predicted as f64;
        }
    }
    let numeric: Option<Vec<f64>> = classes.iter().map(|c| c.parse::<f64>().ok()).collect();
    let value = |i: usize| numeric.as_ref().map_or(i as f64, |v| v[i]);
    let mse = pred.iter().zip(y).map(|(&p, &t)| (value(p) - value(t)).powi(2)).sum::<f64>() / y.len().max(1) as f64;
    ClassifierMetrics {
        accuracy: correct as f64 / y.len().max(1) as f64,
        precision: precision / present.max(1) as f64,
        recall: recall / present.max(1) as f64,
        rmse: mse.sqrt(),
    }
}

/// Classification utility: Gaussian naive Bayes trained on the perturbed
/// training rows and on the original training rows, both tested on the same
/// held-out stratified split of the original table.
pub fn utility_classification(
    original_qs: &Dataset,
    perturbed_qs: &Dataset,
    label: &str,
    test_fraction: f64,
    seed: u64,
) -> Result<UtilityReport> {
    check_schema(original_qs, perturbed_qs)?;
    if original_qs.n_rows() != perturbed_qs.n_rows() {
        return Err(Error::Schema("classification utility needs row-aligned tables".into()));
    }
    let n = original_qs.n_rows();
    let (classes, y_orig) = class_index(original_qs.column(label)?, n);
    let pcol = perturbed_qs.column(label)?;
    let y_pert: Vec<usize> = (0..n)
        .map(|r| {
            let t = pcol.render(r);
            classes
                .iter()
                .position(|c| *c == t)
                .ok_or_else(|| Error::Schema(format!("perturbed label `{t}` not among original classes")))
        })
        .collect::<Result<_>>()?;
    let (train, test) = stratified_split(&y_orig, classes.len(), test_fraction, seed);
    if train.is_empty() || test.is_empty() {
        return Err(Error::InvalidArgument("split left an empty train or test side".into()));
    }
    let x_orig = features(original_qs, original_qs, label)?;
    let x_pert = features(perturbed_qs, original_qs, label)?;
    let pick = |x: &[Vec<f64>], idx: &[usize]| idx.iter().map(|&i| x[i].clone()).collect::<Vec<_>>();
    let pick_y = |y: &[usize], idx: &[usize]| idx.iter().map(|&i| y[i]).collect::<Vec<_>>();

    let x_test = pick(&x_orig, &test);
    let y_test = pick_y(&y_orig, &test);
    let base = GaussianNb::fit(&pick(&x_orig, &train), &pick_y(&y_orig, &train), classes.len())?;
    let pert = GaussianNb::fit(&pick(&x_pert, &train), &pick_y(&y_pert, &train), classes.len())?;
    let original_metrics = evaluate(&base, &x_test, &y_test, &classes);
    let perturbed_metrics = evaluate(&pert, &x_test, &y_test, &classes);
    Ok(UtilityReport {
        mode: UtilityMode::Classification,
        u_original: original_metrics.accuracy,
        u_perturbed: perturbed_metrics.accuracy,
        u_loss: utility_loss(original_metrics.accuracy, perturbed_metrics.accuracy),
        kl_per_attribute: Vec::new(),
        perturbed_metrics: Some(perturbed_metrics),
        original_metrics: Some(original_metrics),
    })
}

/// Relative utility loss clamped to `[0, 1]`.
pub fn utility_loss(u_original: f64, u_perturbed: f64) -> f64 {
    if u_original <= 0.0 {
        log::warn!("original utility is zero; reporting no utility loss");
        return 0.0;
    }
    ((u_original - u_perturbed) / u_original.max(1e-9)).clamp(0.0, 1.0)
}

/// `(E_l, e)` with `E_l = c * u_loss + (1 - c) * p_n` and `e = 1 - E_l`.
pub fn effectiveness(u_loss: f64, p_n: f64, c: f64) -> (f64, f64) {
    let e_loss = c * u_loss + (1.0 - c) * p_n;
    (e_loss, 1.0 - e_loss)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InstanceId {
    pub sweep: usize,
    pub grid_index: usize,
    pub replicate: usize,
}

impl std::fmt::Display for InstanceId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "s{}-g{}-r{}", self.sweep, self.grid_index, self.replicate)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkageSummary {
    pub leak_fraction: f64,
    pub p_n: Option<f64>,
    pub group_count: usize,
    pub linkable_count: usize,
    pub zero_vector_rows: usize,
    pub max_cosine: Option<f64>,
    /// Cosine similarity counts over 20 equal bins on `[-1, 1]`.
    pub cosine_histogram: Vec<usize>,
}

impl LinkageSummary {
    pub fn from_result(r: &LinkageResult) -> Self {
        Self {
            leak_fraction: r.leak_fraction,
            p_n: r.p_n,
            group_count: r.group_count,
            linkable_count: r.linkable.len(),
            zero_vector_rows: r.zero_vector_rows,
            max_cosine: r.cosine.iter().copied().reduce(f64::max),
            cosine_histogram: r.cosine_histogram(20),
        }
    }
}

/// One scored candidate release.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerturbationInstance {
    pub id: InstanceId,
    pub epsilon: f64,
    pub delta: f64,
    pub utility: UtilityReport,
    pub linkage: LinkageSummary,
    pub e_loss: f64,
    pub effectiveness: f64,
    pub steps: Vec<MechanismStep>,
    pub warnings: Vec<String>,
    /// The released QS table; kept out of serialized reports.
    #[serde(skip)]
    pub table: Option<Dataset>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Selection {
    Released { id: InstanceId, effectiveness: f64 },
    /// No instance met the threshold; carries the best one anyway.
    Rejected { best: InstanceId, effectiveness: f64, threshold: f64 },
}

impl Selection {
    pub fn released(&self) -> Option<InstanceId> {
        match self {
            Selection::Released { id, .. } => Some(*id),
            Selection::Rejected { .. } => None,
        }
    }
}

/// Highest effectiveness among instances with `e >= threshold`; ties go to
/// the lower epsilon, then the lower instance id.
pub fn select_best(instances: &[PerturbationInstance], threshold: f64) -> Result<Selection> {
    if instances.is_empty() {
        return Err(Error::Empty("no instances to select from".into()));
    }
    let better = |a: &PerturbationInstance, b: &PerturbationInstance| {
        a.effectiveness
            .total_cmp(&b.effectiveness)
            .then_with(|| b.epsilon.total_cmp(&a.epsilon))
            .then_with(|| b.id.cmp(&a.id))
    };
    let best = |it: &mut dyn Iterator<Item = &PerturbationInstance>| it.max_by(|a, b| better(a, b)).cloned();
    match best(&mut instances.iter().filter(|i| i.effectiveness >= threshold)) {
        Some(i) => Ok(Selection::Released {
            id: i.id,
            effectiveness: i.effectiveness,
        }),
        None => {
            let b = best(&mut instances.iter()).expect("non-empty");
            Ok(Selection::Rejected {
                best: b.id,
                effectiveness: b.effectiveness,
                threshold,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::Column;
    use proptest::prelude::*;
    use rand::Rng;

    pub(crate) fn instance(grid_index: usize, epsilon: f64, e: f64) -> PerturbationInstance {
        PerturbationInstance {
            id: InstanceId { sweep: 0, grid_index, replicate: 0 },
            epsilon,
            delta: 1e-8,
            utility: UtilityReport {
                mode: UtilityMode::KlGeneric,
                u_original: 1.0,
                u_perturbed: 1.0,
                u_loss: 0.0,
                kl_per_attribute: vec![],
                perturbed_metrics: None,
                original_metrics: None,
            },
            linkage: LinkageSummary {
                leak_fraction: 0.0,
                p_n: Some(0.0),
                group_count: 1,
                linkable_count: 0,
                zero_vector_rows: 0,
                max_cosine: Some(1.0),
                cosine_histogram: vec![],
            },
            e_loss: 1.0 - e,
            effectiveness: e,
            steps: vec![],
            warnings: vec![],
            table: None,
        }
    }

    #[test]
    fn kl_examples() {
        let d = Dataset::new("s", vec![Column::numeric("x", vec![1.0, 2.0, 3.0, 3.0]), Column::categorical("c", vec!["a", "b", "a", "a"])]).unwrap();
        let r = utility_kl(&d, &d, 32).unwrap();
        assert!(r.kl_per_attribute.iter().all(|(_, k)| k.abs() < 1e-12));
        assert!((r.u_perturbed - 1.0).abs() < 1e-12);
        assert!(r.u_loss < 1e-12);

        let kl = kl_divergence(&[0.5, 0.5], &[0.9, 0.1]);
        let hand = 0.5 * (0.5f64 / 0.9).ln() + 0.5 * (0.5f64 / 0.1).ln();
        assert!((kl - hand).abs() < 1e-15);
        assert!((kl - 0.5108).abs() < 1e-4);

        let a = Dataset::new("s", vec![Column::categorical("c", vec!["a"; 10])]).unwrap();
        let b = Dataset::new("s", vec![Column::categorical("c", vec!["b"; 10])]).unwrap();
        let r = utility_kl(&a, &b, 32).unwrap();
        assert!(r.kl_per_attribute[0].1.is_finite() && r.kl_per_attribute[0].1 > 10.0);
        assert!(r.u_perturbed < 1e-4);
    }

    #[test]
    fn kl_schema_mismatch() {
        let a = Dataset::new("s", vec![Column::numeric("x", vec![1.0])]).unwrap();
        let b = Dataset::new("s", vec![Column::numeric("y", vec![1.0])]).unwrap();
        assert!(matches!(utility_kl(&a, &b, 8), Err(Error::Schema(_))));
    }

    #[test]
    fn smoothed_kl_matches_hand_computation() {
        let a = Dataset::new("s", vec![Column::categorical("c", vec!["a", "b"])]).unwrap();
        let b = Dataset::new("s", vec![Column::categorical("c", (0..10).map(|i| if i < 9 { "a" } else { "b" }).collect())]).unwrap();
        let r = utility_kl(&a, &b, 8).unwrap();
        assert!((r.kl_per_attribute[0].1 - 0.5108256).abs() < 1e-5);
    }

    fn labelled(n: usize, seed: u64, informative: bool) -> Dataset {
        let mut rng = crate::seed::rng(seed);
        let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let x: Vec<f64> = y
            .iter()
            .map(|&c| if informative { c as f64 * 3.0 } else { 0.0 } + rng.gen::<f64>())
            .collect();
        Dataset::new("c", vec![Column::numeric("x", x), Column::categorical("y", y.iter().map(|c| c.to_string()).collect())])
            .unwrap()
            .with_class_label("y")
            .unwrap()
    }

    #[test]
    fn identical_tables_give_identical_utility() {
        let d = labelled(300, 1, true);
        let r = utility_classification(&d, &d, "y", 0.2, 4).unwrap();
        assert_eq!(r.u_original, r.u_perturbed);
        assert_eq!(r.u_loss, 0.0);
        assert!(r.u_original > 0.95);
        let m = r.perturbed_metrics.unwrap();
        assert!(m.precision > 0.9 && m.recall > 0.9);
    }

    #[test]
    fn uninformative_features_give_chance_accuracy() {
        let mean: f64 = (0..20)
            .map(|s| {
                let d = labelled(400, 100 + s, false);
                utility_classification(&d, &d, "y", 0.2, s).unwrap().u_original
            })
            .sum::<f64>()
            / 20.0;
        assert!((mean - 0.5).abs() <= 0.05, "{mean}");
    }

    #[test]
    fn absent_class_is_floored() {
        let nb = GaussianNb::fit(&[vec![0.0], vec![1.0]], &[0, 0], 2).unwrap();
        assert!((nb.log_priors[1] - (1.0f64 / 4.0).ln()).abs() < 1e-12);
        assert_eq!(nb.predict(&[100.0]), 0);
    }

    #[test]
    fn stratified_split_keeps_proportions() {
        let labels: Vec<usize> = (0..1000).map(|i| usize::from(i % 10 == 0)).collect();
        let (train, test) = stratified_split(&labels, 2, 0.2, 3);
        assert_eq!(train.len() + test.len(), 1000);
        assert_eq!(test.iter().filter(|&&r| labels[r] == 1).count(), 20);
    }

    #[test]
    fn utility_loss_examples() {
        assert!((utility_loss(0.8, 0.72) - 0.1).abs() < 1e-12);
        assert_eq!(utility_loss(0.7, 0.9), 0.0);
        assert_eq!(utility_loss(0.0, 0.3), 0.0);
    }

    #[test]
    fn effectiveness_examples() {
        let (el, e) = effectiveness(0.2, 0.1, 0.5);
        assert!((el - 0.15).abs() < 1e-12 && (e - 0.85).abs() < 1e-12);
        assert_eq!(effectiveness(1.0, 1.0, 0.5), (1.0, 0.0));
    }

    #[test]
    fn selection_examples() {
        let v = vec![instance(0, 1.0, 0.4), instance(1, 2.0, 0.7), instance(2, 3.0, 0.6)];
        assert_eq!(select_best(&v, 0.5).unwrap().released(), Some(v[1].id));

        let v = vec![instance(0, 1.0, 0.4), instance(1, 2.0, 0.3)];
        match select_best(&v, 0.5).unwrap() {
            Selection::Rejected { best, effectiveness, .. } => {
                assert_eq!(best, v[0].id);
                assert_eq!(effectiveness, 0.4);
            }
            s => panic!("{s:?}"),
        }

        let v = vec![instance(5, 4.0, 0.7), instance(3, 2.0, 0.7)];
        assert_eq!(select_best(&v, 0.5).unwrap().released(), Some(v[1].id));
        assert!(select_best(&[], 0.5).is_err());
    }

    proptest! {
        #[test]
        fn selection_is_permutation_invariant(
            es in prop::collection::vec((0.0f64..1.0, 0usize..4), 1..20),
            seed in any::<u64>(),
        ) {
            let v: Vec<_> = es.iter().enumerate().map(|(i, &(e, k))| instance(i, 1.0 + k as f64, (e * 10.0).round() / 10.0)).collect();
            let mut w = v.clone();
            w.shuffle(&mut crate::seed::rng(seed));
            prop_assert_eq!(select_best(&v, 0.5).unwrap(), select_best(&w, 0.5).unwrap());
        }

        #[test]
        fn effectiveness_loss_is_a_convex_combination(u in 0.0f64..=1.0, p in 0.0f64..=1.0, c in 0.0f64..=1.0) {
            let (el, e) = effectiveness(u, p, c);
            prop_assert!(el >= u.min(p) - 1e-12 && el <= u.max(p) + 1e-12);
            prop_assert!((el + e - 1.0).abs() < 1e-12);
        }

        #[test]
        fn kl_non_negative(a in prop::collection::vec(0u8..5, 5..40), b in prop::collection::vec(0u8..5, 5..40)) {
            let ca = Dataset::new("s", vec![Column::categorical("c", a.iter().map(|x| x.to_string()).collect())]).unwrap();
            let cb = Dataset::new("s", vec![Column::categorical("c", b.iter().map(|x| x.to_string()).collect())]).unwrap();
            let r = utility_kl(&ca, &cb, 8).unwrap();
            prop_assert!(r.kl_per_attribute[0].1 >= 0.0);
        }
    }
}
