//! TOML run configuration.
//!
//! ```toml
//! preset = 1                 # or a [model] table, not both
//!
//! [model]
//! region = "lower"           # lower | upper | absolute
//! a = 0.05
//! nu = [0.75, 0.15, 0.10]
//! nulls = [
//!   { dist = "normal", mean = 0.0, sd = 1.0 },
//!   { dist = "noncentral_t", df = 20.0, delta = -1.0 },
//! ]
//! alternative = { dist = "normal", mean = -4.0, sd = 1.0 }
//!
//! [run]
//! n = 5000
//! reps = 200
//! alpha = 0.25
//! seed = 1
//! methods = ["seq", "glb", "max", "mix"]
//! threads = 4
//!
//! [variant]
//! sum_lower = 0.0
//! pair_margin = "relaxed"    # relaxed | tight
//! gamma_beta = 0.95
//! small_rank_exponent = 0.2
//! ```

use std::path::Path;

use lpfdr_core::model::{table1_preset, Distribution, MixtureModel, NullFamily, Prior, Region};
use lpfdr_core::pvalues::{ConstraintVariant, Method, PairMargin};
use serde::Deserialize;

use crate::sim::SimConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("{key}: {msg}")]
    Invalid { key: String, msg: String },
}

fn invalid(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), msg: msg.into() }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<u32>,
    model: Option<RawModel>,
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    variant: RawVariant,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(default)]
    region: Option<String>,
    a: f64,
    nu: Vec<f64>,
    nulls: Vec<RawDist>,
    alternative: RawDist,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case", deny_unknown_fields)]
enum RawDist {
    Normal { mean: f64, sd: f64 },
    NoncentralT { df: f64, delta: f64 },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    n: Option<usize>,
    reps: Option<usize>,
    alpha: Option<f64>,
    seed: Option<u64>,
    methods: Option<Vec<String>>,
    threads: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVariant {
    sum_lower: Option<f64>,
    pair_margin: Option<String>,
    gamma_beta: Option<f64>,
    small_rank_exponent: Option<f64>,
}

fn build_dist(key: &str, d: &RawDist) -> Result<Distribution, ConfigError> {
    match *d {
        RawDist::Normal { mean, sd } => Distribution::normal(mean, sd),
        RawDist::NoncentralT { df, delta } => Distribution::noncentral_t(df, delta),
    }
    .map_err(|e| invalid(key, e.to_string()))
}

pub fn parse_region(s: &str) -> Option<Region> {
    match s {
        "lower" => Some(Region::Lower),
        "upper" => Some(Region::Upper),
        "absolute" => Some(Region::Absolute),
        _ => None,
    }
}

pub fn parse_margin(s: &str) -> Option<PairMargin> {
    match s {
        "relaxed" => Some(PairMargin::Relaxed),
        "tight" => Some(PairMargin::Tight),
        _ => None,
    }
}

/// Parses a comma-separated or listed set of method names.
pub fn parse_methods<S: AsRef<str>>(key: &str, names: &[S]) -> Result<Vec<Method>, ConfigError> {
    names
        .iter()
        .map(|s| {
            let s = s.as_ref().trim();
            Method::parse(s).ok_or_else(|| invalid(key, format!("unknown method {s:?}, expected seq, glb, max or mix")))
        })
        .collect()
}

fn build_model(raw: &RawModel) -> Result<MixtureModel, ConfigError> {
    let region = match &raw.region {
        None => Region::Lower,
        Some(s) => parse_region(s).ok_or_else(|| invalid("model.region", format!("expected lower, upper or absolute, got {s:?}")))?,
    };
    if raw.nulls.is_empty() {
        return Err(invalid("model.nulls", "at least one null distribution is required"));
    }
    let nulls = raw
        .nulls
        .iter()
        .enumerate()
        .map(|(i, d)| build_dist(&format!("model.nulls[{i}]"), d))
        .collect::<Result<Vec<_>, _>>()?;
    if raw.nu.len() != nulls.len() {
        return Err(invalid("model.nu", format!("has {} weights for {} null distributions", raw.nu.len(), nulls.len())));
    }
    let prior = Prior::new(raw.nu.clone()).map_err(|e| invalid("model.nu", e.to_string()))?;
    let alt = build_dist("model.alternative", &raw.alternative)?;
    let family = NullFamily::new(nulls, region).map_err(|e| invalid("model.nulls", e.to_string()))?;
    MixtureModel::new(family, prior, raw.a, alt).map_err(|e| invalid("model", e.to_string()))
}

fn preset(id: u32) -> Result<MixtureModel, ConfigError> {
    table1_preset(id).map_err(|e| invalid("preset", e.to_string()))
}

/// Builds a validated configuration from TOML text.
pub fn parse_config_str(text: &str) -> Result<SimConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text)?;
    let model = match (raw.preset, &raw.model) {
        (Some(_), Some(_)) => return Err(invalid("preset", "give either preset or [model], not both")),
        (None, None) => return Err(invalid("model", "missing; give preset = K or a [model] table")),
        (Some(id), None) => preset(id)?,
        (None, Some(m)) => build_model(m)?,
    };
    let mut cfg = SimConfig::new(model);
    let run = &raw.run;
    if let Some(n) = run.n {
        cfg.n = n;
    }
    if let Some(r) = run.reps {
        cfg.reps = r;
    }
    if let Some(a) = run.alpha {
        cfg.alpha = a;
    }
    if let Some(s) = run.seed {
        cfg.seed = s;
    }
    if let Some(m) = &run.methods {
        cfg.methods = parse_methods("run.methods", m)?;
    }
    cfg.threads = run.threads;

    let v = &raw.variant;
    if let Some(x) = v.sum_lower {
        cfg.variant.sum_lower = x;
    }
    if let Some(s) = &v.pair_margin {
        cfg.variant.pair_margin =
            parse_margin(s).ok_or_else(|| invalid("variant.pair_margin", format!("expected relaxed or tight, got {s:?}")))?;
    }
    if let Some(x) = v.gamma_beta {
        cfg.variant.gamma_beta = x;
    }
    if let Some(x) = v.small_rank_exponent {
        cfg.variant.small_rank_exponent = x;
    }
    validate(&cfg)?;
    Ok(cfg)
}

pub fn parse_config_file(path: &Path) -> Result<SimConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_config_str(&text)
}

/// Default run settings around a built-in model.
pub fn preset_config(id: u32) -> Result<SimConfig, ConfigError> {
    Ok(SimConfig::new(preset(id)?))
}

/// Field checks, reported under the TOML key that sets each field.
pub fn validate(cfg: &SimConfig) -> Result<(), ConfigError> {
    if cfg.n < 2 {
        return Err(invalid("run.n", format!("must be at least 2, got {}", cfg.n)));
    }
    if cfg.reps == 0 {
        return Err(invalid("run.reps", "must be at least 1"));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(invalid("run.alpha", format!("must lie in (0, 1), got {}", cfg.alpha)));
    }
    if cfg.threads == Some(0) {
        return Err(invalid("run.threads", "must be at least 1"));
    }
    let v: ConstraintVariant = cfg.variant;
    if !(0.0..=1.0).contains(&v.sum_lower) {
        return Err(invalid("variant.sum_lower", format!("must lie in [0, 1], got {}", v.sum_lower)));
    }
    if !(v.gamma_beta > 0.0 && v.gamma_beta < 1.0) {
        return Err(invalid("variant.gamma_beta", format!("must lie in (0, 1), got {}", v.gamma_beta)));
    }
    v.validate().map_err(|e| invalid("variant.small_rank_exponent", e.to_string()))
}
