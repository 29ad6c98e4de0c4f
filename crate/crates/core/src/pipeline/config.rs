//! Run configuration: defaults, parsing and validation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{io_err, FieldError};
use crate::risk::LinkageExtreme;
use crate::{Error, Result};

/// Utility measure used when scoring instances.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Application {
    #[serde(rename = "kl_generic")]
    KlGeneric,
    #[default]
    #[serde(rename = "classification:gaussian_nb")]
    GaussianNb,
}

impl std::str::FromStr for Application {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kl_generic" | "kl" => Ok(Self::KlGeneric),
            "classification:gaussian_nb" | "classification" | "gaussian_nb" => Ok(Self::GaussianNb),
            _ => Err(Error::InvalidArgument(format!("unknown application `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Upper end of the epsilon grid.
    pub t_eps: f64,
    /// Leak percentage used for the base delta.
    pub p_l: f64,
    pub tn: usize,
    pub ts: usize,
    pub t: usize,
    pub app: Application,
    pub c: f64,
    pub e_t: f64,
    pub alpha: f64,
    pub tau_floor: f64,
    pub gq: Vec<String>,
    /// Class label for classification utility; falls back to the dataset's own.
    pub label: Option<String>,
    pub seed: Option<u64>,
    pub synthesizer: String,
    pub attr_bins: usize,
    pub pif_bins: usize,
    pub utility_bins: usize,
    pub uniqueness_threshold: f64,
    pub cn_min: usize,
    pub cn_max: usize,
    pub kmeans_restarts: usize,
    pub weight_share: f64,
    pub linkage_extreme: LinkageExtreme,
    pub fis_sigma: f64,
    pub delta_max_factor: f64,
    pub test_fraction: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            t_eps: 8.0,
            p_l: 0.01,
            tn: 12,
            ts: 1,
            t: 4,
            app: Application::GaussianNb,
            c: 0.5,
            e_t: 0.5,
            alpha: 1.0,
            tau_floor: crate::profiler::DEFAULT_TAU_FLOOR,
            gq: Vec::new(),
            label: None,
            seed: None,
            synthesizer: "noisy_marginals".into(),
            attr_bins: crate::profiler::DEFAULT_ATTR_BINS,
            pif_bins: crate::profiler::DEFAULT_PIF_BINS,
            utility_bins: crate::score::DEFAULT_UTILITY_BINS,
            uniqueness_threshold: crate::tabular::DEFAULT_UNIQUENESS_THRESHOLD,
            cn_min: 2,
            cn_max: 10,
            kmeans_restarts: 10,
            weight_share: crate::synth::DEFAULT_WEIGHT_SHARE,
            linkage_extreme: LinkageExtreme::Min,
            fis_sigma: 1.0,
            delta_max_factor: 100.0,
            test_fraction: crate::score::DEFAULT_TEST_FRACTION,
        }
    }
}

impl RunConfig {
    /// `P_l / (100 n)`.
    pub fn delta_base(&self, n_rows: usize) -> f64 {
        self.p_l / (100.0 * n_rows as f64)
    }

    /// Seed after validation; zero if validation was skipped.
    pub fn seed_value(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Parses JSON (when the text starts with `{`) or flat `key = value` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let value = if text.trim_start().starts_with('{') {
            serde_json::from_str(text)?
        } else {
            Value::Object(parse_flat(text)?)
        };
        from_value(value)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text)
    }

    /// Applies `key = value` style overrides on top of this config.
    pub fn with_overrides(&self, pairs: &[(String, String)]) -> Result<Self> {
        let Value::Object(mut base) = serde_json::to_value(self)? else {
            unreachable!("config serializes to an object")
        };
        for (k, v) in pairs {
            let key = normalize_key(k);
            base.insert(key.clone(), flat_value(&key, v));
        }
        from_value(Value::Object(base))
    }
}

fn from_value(value: Value) -> Result<RunConfig> {
    serde_json::from_value(value).map_err(|e| Error::Config(vec![FieldError::new("config", e.to_string())]))
}

fn normalize_key(k: &str) -> String {
    k.trim().to_ascii_lowercase().replace(['-', ' '], "_")
}

fn flat_value(key: &str, raw: &str) -> Value {
    let raw = raw.trim();
    if key == "gq" {
        return Value::Array(
            raw.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| Value::String(s.to_string()))
                .collect(),
        );
    }
    if matches!(key, "app" | "synthesizer" | "label" | "linkage_extreme") {
        return Value::String(raw.trim_matches('"').to_string());
    }
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn parse_flat(text: &str) -> Result<Map<String, Value>> {
    let mut map = Map::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(vec![FieldError::new(
                format!("line {}", i + 1),
                "expected `key = value`",
            )]));
        };
        let key = normalize_key(k);
        map.insert(key.clone(), flat_value(&key, v));
    }
    Ok(map)
}

/// Checks every range and returns the config with a concrete seed.
/// All violations are reported together.
pub fn validate_config(config: &RunConfig) -> Result<RunConfig, Vec<FieldError>> {
    let mut errs = Vec::new();
    let mut check = |ok: bool, field: &str, msg: &str| {
        if !ok {
            errs.push(FieldError::new(field, msg));
        }
    };
    let c = config;
    check(c.t_eps > 0.0 && c.t_eps.is_finite(), "t_eps", "must be a positive finite number");
    check(c.p_l > 0.0 && c.p_l <= 100.0, "p_l", "must lie in (0, 100]");
    check(c.tn >= 1, "tn", "must be at least 1");
    check(c.tn < 10_000, "tn", "must be below 10000");
    check(c.ts >= 1, "ts", "must be at least 1");
    check(c.t >= 1, "t", "must be at least 1");
    check((0.0..=1.0).contains(&c.c), "c", "must lie in [0, 1]");
    check((0.0..=1.0).contains(&c.e_t), "e_t", "must lie in [0, 1]");
    check(c.alpha > 0.0 && c.alpha.is_finite(), "alpha", "must be positive");
    check(c.tau_floor >= 0.0 && c.tau_floor.is_finite(), "tau_floor", "must be non-negative");
    check(!c.synthesizer.is_empty(), "synthesizer", "must not be empty");
    check(c.attr_bins >= 2, "attr_bins", "must be at least 2");
    check(c.pif_bins >= 1, "pif_bins", "must be at least 1");
    check(c.utility_bins >= 1, "utility_bins", "must be at least 1");
    check(
        c.uniqueness_threshold > 0.0 && c.uniqueness_threshold <= 1.0,
        "uniqueness_threshold",
        "must lie in (0, 1]",
    );
    check(c.cn_min >= 2, "cn_min", "must be at least 2");
    check(c.cn_max >= c.cn_min, "cn_max", "must be at least cn_min");
    check(c.kmeans_restarts >= 1, "kmeans_restarts", "must be at least 1");
    check(c.weight_share > 0.0 && c.weight_share < 1.0, "weight_share", "must lie in (0, 1)");
    check(c.fis_sigma > 0.0 && c.fis_sigma.is_finite(), "fis_sigma", "must be positive");
    check(
        c.delta_max_factor > 0.0 && c.delta_max_factor.is_finite(),
        "delta_max_factor",
        "must be positive",
    );
    check(c.test_fraction > 0.0 && c.test_fraction < 1.0, "test_fraction", "must lie in (0, 1)");
    let mut seen = std::collections::HashSet::new();
    check(c.gq.iter().all(|g| seen.insert(g)), "gq", "contains duplicates");
    if !errs.is_empty() {
        return Err(errs);
    }
    let mut out = c.clone();
    out.seed.get_or_insert_with(rand::random);
    Ok(out)
}
