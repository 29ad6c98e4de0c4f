//! Mamdani fuzzy inference linking normalized `(epsilon, delta)` to a PIF
//! level, and inversion of its rule surface into an ordered candidate grid.
//!
//! Inputs are normalized onto `[0, 1]` (`epsilon / T_eps`, `delta / delta_max`).
//! Each variable carries Gaussian LOW / MEDIUM / HIGH sets. Rule strengths use
//! MIN over antecedents, clipped consequents are aggregated with MAX and the
//! crisp output is the discrete centroid of the aggregate.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::io_err;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Level {
    Low,
    Medium,
    High,
}

impl Level {
    const ALL: [Level; 3] = [Level::Low, Level::Medium, Level::High];

    fn index(self) -> usize {
        self as usize
    }
}

/// Gaussian membership `exp(-(x - mu)^2 / (2 sigma^2))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipFunction {
    pub label: Level,
    pub mu: f64,
    pub sigma: f64,
}

impl MembershipFunction {
    pub fn degree(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        (-0.5 * z * z).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Input {
    Epsilon,
    Delta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub when: Vec<(Input, Level)>,
    pub then_pif: Level,
}

fn standard_sets(sigma: f64) -> [MembershipFunction; 3] {
    [(Level::Low, 0.0), (Level::Medium, 0.5), (Level::High, 1.0)].map(|(label, mu)| MembershipFunction { label, mu, sigma })
}

/// Serializable description of a [`FuzzySystem`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FisConfig {
    pub epsilon_sets: [MembershipFunction; 3],
    pub delta_sets: [MembershipFunction; 3],
    pub pif_sets: [MembershipFunction; 3],
    pub rules: Vec<Rule>,
    /// Number of points discretizing the output universe `[0, 1]`.
    pub resolution: usize,
}

impl FisConfig {
    pub fn standard(sigma: f64) -> Self {
        use Input::*;
        use Level::*;
        Self {
            epsilon_sets: standard_sets(sigma),
            delta_sets: standard_sets(sigma),
            pif_sets: standard_sets(sigma),
            rules: vec![
                Rule { when: vec![(Epsilon, Low)], then_pif: High },
                Rule { when: vec![(Delta, Low)], then_pif: High },
                Rule { when: vec![(Epsilon, Medium), (Delta, Medium)], then_pif: Medium },
                Rule { when: vec![(Epsilon, High)], then_pif: Low },
                Rule { when: vec![(Delta, High)], then_pif: Low },
            ],
            resolution: 10_001,
        }
    }
}

impl Default for FisConfig {
    fn default() -> Self {
        Self::standard(1.0)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "FisConfig", into = "FisConfig")]
pub struct FuzzySystem {
    config: FisConfig,
    /// Output universe points with the three PIF membership degrees.
    universe: Vec<(f64, [f64; 3])>,
}

impl TryFrom<FisConfig> for FuzzySystem {
    type Error = Error;

    fn try_from(config: FisConfig) -> Result<Self> {
        Self::new(config)
    }
}

impl From<FuzzySystem> for FisConfig {
    fn from(f: FuzzySystem) -> Self {
        f.config
    }
}

impl Default for FuzzySystem {
    fn default() -> Self {
        Self::new(FisConfig::default()).expect("standard configuration is valid")
    }
}

impl FuzzySystem {
    pub fn new(config: FisConfig) -> Result<Self> {
        let sets = config.epsilon_sets.iter().chain(&config.delta_sets).chain(&config.pif_sets);
        for mf in sets {
            if !(mf.sigma > 0.0 && mf.sigma.is_finite()) {
                return Err(Error::InvalidArgument(format!("membership width must be positive, got {}", mf.sigma)));
            }
        }
        if config.resolution < 2 {
            return Err(Error::InvalidArgument("defuzzification needs at least two universe points".into()));
        }
        if config.rules.is_empty() || config.rules.iter().any(|r| r.when.is_empty()) {
            return Err(Error::InvalidArgument("every rule needs at least one antecedent".into()));
        }
        let steps = (config.resolution - 1) as f64;
        let universe = (0..config.resolution)
            .map(|i| {
                let x = i as f64 / steps;
                (x, config.pif_sets.map(|mf| mf.degree(x)))
            })
            .collect();
        Ok(Self { config, universe })
    }

    pub fn config(&self) -> &FisConfig {
        &self.config
    }

    fn set(&self, input: Input, level: Level) -> &MembershipFunction {
        let sets = match input {
            Input::Epsilon => &self.config.epsilon_sets,
            Input::Delta => &self.config.delta_sets,
        };
        &sets[level.index()]
    }

    /// Firing strength of each rule.
    pub fn firing_strengths(&self, eps_norm: f64, delta_norm: f64) -> Vec<f64> {
        let (e, d) = (eps_norm.clamp(0.0, 1.0), delta_norm.clamp(0.0, 1.0));
        self.config
            .rules
            .iter()
            .map(|r| {
                r.when
                    .iter()
                    .map(|&(input, level)| {
                        let x = if input == Input::Epsilon { e } else { d };
                        self.set(input, level).degree(x)
                    })
                    .fold(1.0, f64::min)
            })
            .collect()
    }

    /// Crisp PIF estimate for normalized inputs; inputs are clamped to `[0, 1]`.
    pub fn infer_pif(&self, eps_norm: f64, delta_norm: f64) -> f64 {
        let strengths = self.firing_strengths(eps_norm, delta_norm);
        let mut clip = [0.0f64; 3];
        for (r, w) in self.config.rules.iter().zip(strengths) {
            let slot = &mut clip[r.then_pif.index()];
            *slot = slot.max(w);
        }
        let (mut num, mut den) = (0.0, 0.0);
        for (x, mu) in &self.universe {
            let agg = Level::ALL
                .iter()
                .map(|l| mu[l.index()].min(clip[l.index()]))
                .fold(0.0, f64::max);
            num += agg * x;
            den += agg;
        }
        if den > 0.0 {
            (num / den).clamp(0.0, 1.0)
        } else {
            0.5
        }
    }

    /// `(eps_norm, delta_norm, pif)` on a `(steps + 1)^2` lattice.
    pub fn surface(&self, steps: usize) -> Vec<(f64, f64, f64)> {
        let steps = steps.max(1);
        let mut out = Vec::with_capacity((steps + 1) * (steps + 1));
        for i in 0..=steps {
            for j in 0..=steps {
                let (e, d) = (i as f64 / steps as f64, j as f64 / steps as f64);
                out.push((e, d, self.infer_pif(e, d)));
            }
        }
        out
    }
}

pub fn write_surface_csv<W: Write>(surface: &[(f64, f64, f64)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["eps_norm", "delta_norm", "pif"])?;
    for (e, d, p) in surface {
        w.write_record([e.to_string(), d.to_string(), p.to_string()])?;
    }
    w.flush().map_err(io_err("<surface csv>"))?;
    Ok(())
}

/// One candidate privacy setting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsDelta {
    pub epsilon: f64,
    pub delta: f64,
    pub eps_norm: f64,
    pub delta_norm: f64,
    /// Surface value at the chosen normalized point.
    pub inferred_pif: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsDeltaGrid {
    pub pairs: Vec<EpsDelta>,
    pub pif_target: f64,
    pub t_eps: f64,
    pub delta_max: f64,
}

const DELTA_SEARCH_STEPS: usize = 1000;
const DELTA_ISOTONIC_STEP: f64 = 1e-4;

/// `count` candidate pairs with strictly increasing epsilon and delta.
///
/// Normalized epsilon takes the values `i / count`. For each one the delta
/// on a `1e-3` lattice over `(0, 1]` whose inferred PIF is closest to
/// `pif_thresh` is chosen; the delta sequence is then made strictly
/// increasing in `1e-4` steps while staying inside `(0, 1]`.
pub fn generate_grid(fis: &FuzzySystem, pif_thresh: f64, count: usize, t_eps: f64, delta_max: f64) -> Result<EpsDeltaGrid> {
    if count == 0 {
        return Err(Error::InvalidArgument("grid size must be at least 1".into()));
    }
    if count as f64 * DELTA_ISOTONIC_STEP >= 1.0 {
        return Err(Error::InvalidArgument(format!("grid size {count} too large for a strictly increasing delta sequence")));
    }
    if !(t_eps > 0.0 && t_eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon ceiling must be positive, got {t_eps}")));
    }
    if !(delta_max > 0.0 && delta_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("delta ceiling must be positive, got {delta_max}")));
    }
    let eps_norm: Vec<f64> = (1..=count).map(|i| i as f64 / count as f64).collect();
    let mut delta_norm: Vec<f64> = eps_norm
        .iter()
        .map(|&e| {
            let mut best = (f64::INFINITY, 1.0);
            for k in 1..=DELTA_SEARCH_STEPS {
                let d = k as f64 / DELTA_SEARCH_STEPS as f64;
                let gap = (fis.infer_pif(e, d) - pif_thresh).abs();
                if gap < best.0 {
                    best = (gap, d);
                }
            }
            best.1
        })
        .collect();

    for i in 1..count {
        delta_norm[i] = delta_norm[i].max(delta_norm[i - 1] + DELTA_ISOTONIC_STEP);
    }
    if delta_norm[count - 1] > 1.0 {
        delta_norm[count - 1] = 1.0;
        for i in (0..count - 1).rev() {
            delta_norm[i] = delta_norm[i].min(delta_norm[i + 1] - DELTA_ISOTONIC_STEP);
        }
    }

    let pairs = eps_norm
        .iter()
        .zip(&delta_norm)
        .map(|(&e, &d)| EpsDelta {
            epsilon: e * t_eps,
            delta: d * delta_max,
            eps_norm: e,
            delta_norm: d,
            inferred_pif: fis.infer_pif(e, d),
        })
        .collect();
    Ok(EpsDeltaGrid {
        pairs,
        pif_target: pif_thresh,
        t_eps,
        delta_max,
    })
}

/// Dataset-level privacy bound and the generic `(epsilon, delta)` privacy metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyMeasure {
    /// `pif_thresh + delta`.
    pub f_d: f64,
    /// `(1 - exp(-epsilon)) + delta`.
    pub f: f64,
}

pub fn privacy_measure(pif_thresh: f64, epsilon: f64, delta: f64) -> PrivacyMeasure {
    PrivacyMeasure {
        f_d: pif_thresh + delta,
        f: -(-epsilon).exp_m1() + delta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent centroid on a trapezoid-free grid, written directly from
    /// the rule list without the cached universe.
    fn oracle(e: f64, d: f64, points: usize) -> f64 {
        let g = |x: f64, m: f64| (-(x - m) * (x - m) / 2.0).exp();
        let high = g(e, 0.0).max(g(d, 0.0));
        let med = g(e, 0.5).min(g(d, 0.5));
        let low = g(e, 1.0).max(g(d, 1.0));
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..points {
            let x = i as f64 / (points - 1) as f64;
            let mu = g(x, 1.0).min(high).max(g(x, 0.5).min(med)).max(g(x, 0.0).min(low));
            num += mu * x;
            den += mu;
        }
        num / den
    }

    #[test]
    fn corners_match_oracle_and_are_symmetric() {
        let fis = FuzzySystem::default();
        let lo = fis.infer_pif(0.0, 0.0);
        let hi = fis.infer_pif(1.0, 1.0);
        assert!((lo - oracle(0.0, 0.0, 10_001)).abs() < 1e-12);
        // frozen from the oracle
        assert!((lo - 0.513_188_713_408_118_2).abs() < 1e-9, "{lo}");
        assert!(lo > hi);
        assert!(((lo - 0.5) - (0.5 - hi)).abs() < 1e-6);
        assert!((fis.infer_pif(0.5, 0.5) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn monotone_surface() {
        let fis = FuzzySystem::default();
        let s: Vec<Vec<f64>> = (0..=20)
            .map(|i| (0..=20).map(|j| fis.infer_pif(i as f64 / 20.0, j as f64 / 20.0)).collect())
            .collect();
        for i in 0..=20 {
            for j in 0..=20 {
                if i < 20 {
                    assert!(s[i + 1][j] <= s[i][j] + 1e-9);
                }
                if j < 20 {
                    assert!(s[i][j + 1] <= s[i][j] + 1e-9);
                }
                assert!((0.0..=1.0).contains(&s[i][j]));
            }
        }
    }

    #[test]
    fn resolution_doubling_is_stable() {
        let a = FuzzySystem::default();
        let mut cfg = FisConfig::default();
        cfg.resolution = 20_001;
        let b = FuzzySystem::new(cfg).unwrap();
        for (e, d) in [(0.0, 0.0), (0.3, 0.8), (0.9, 0.1), (1.0, 1.0)] {
            assert!((a.infer_pif(e, d) - b.infer_pif(e, d)).abs() < 1e-4);
        }
    }

    #[test]
    fn grid_is_strictly_increasing() {
        let fis = FuzzySystem::default();
        for target in [0.0, 0.49, 0.5, 0.51, 0.8, 1.0] {
            let g = generate_grid(&fis, target, 12, 8.0, 2.04e-6).unwrap();
            assert_eq!(g.pairs.len(), 12);
            assert_eq!(g.pairs.last().unwrap().epsilon, 8.0);
            for w in g.pairs.windows(2) {
                assert!(w[0].epsilon < w[1].epsilon);
                assert!(w[0].delta < w[1].delta, "target {target}");
            }
            assert!(g.pairs.iter().all(|p| p.delta > 0.0 && p.delta <= 2.04e-6));
        }
    }

    #[test]
    fn zero_target_pushes_delta_high() {
        let fis = FuzzySystem::default();
        let g = generate_grid(&fis, 0.0, 12, 8.0, 1.0).unwrap();
        // the unconstrained optimum is delta_norm = 1 for every epsilon
        assert!(g.pairs.iter().all(|p| p.delta_norm > 0.99));
        assert_eq!(g.pairs.last().unwrap().delta_norm, 1.0);
    }

    #[test]
    fn single_pair_and_zero_count() {
        let fis = FuzzySystem::default();
        assert_eq!(generate_grid(&fis, 0.5, 1, 8.0, 1.0).unwrap().pairs.len(), 1);
        assert!(generate_grid(&fis, 0.5, 0, 8.0, 1.0).is_err());
    }

    #[test]
    fn privacy_measures() {
        let m = privacy_measure(0.7, 0.0, 1e-8);
        assert!((m.f_d - 0.700_000_01).abs() < 1e-15);
        assert_eq!(privacy_measure(0.0, 0.0, 0.0).f, 0.0);
        let m = privacy_measure(0.0, 8.0, 2.04e-8);
        assert!((m.f - 0.999_665).abs() < 1e-6);
    }

    #[test]
    fn config_round_trips_through_json() {
        let fis = FuzzySystem::default();
        let json = serde_json::to_string(&fis).unwrap();
        let back: FuzzySystem = serde_json::from_str(&json).unwrap();
        assert_eq!(back.infer_pif(0.2, 0.7), fis.infer_pif(0.2, 0.7));
        let mut bad = FisConfig::default();
        bad.pif_sets[0].sigma = 0.0;
        assert!(FuzzySystem::new(bad).is_err());
    }
}
