//! Layered settings: built-in defaults, then a flat `key = value` config file,
//! then command-line flags.

use std::path::Path;

use anchor_mesh::codec::EncoderConfig;
use anchor_mesh::fine::FineConfig;
use anchor_mesh::quantize::QuantizationParams;

use crate::output::{CliError, CliResult};

pub const DEFAULT_ALPHAS: [f64; 5] = [1.0, 2.0, 4.0, 8.0, 16.0];
pub const DEFAULT_BASE_RATIO: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub encoder: EncoderConfig,
    /// Rate ladder for `sweep`.
    pub alphas: Vec<f64>,
    /// Base mesh vertex count as a fraction of the reference frame's, for `sweep`.
    pub base_ratio: f64,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            encoder: EncoderConfig::default(),
            alphas: DEFAULT_ALPHAS.to_vec(),
            base_ratio: DEFAULT_BASE_RATIO,
            seed: 0,
            threads: None,
        }
    }
}

pub const KEYS: &[&str] = &[
    "level",
    "alpha",
    "delta",
    "hbar",
    "motion_estimation",
    "qem",
    "adaptive_quant",
    "collapses_per_anchor",
    "octree_leaf_capacity",
    "octree_max_depth",
    "alphas",
    "base_ratio",
    "seed",
    "threads",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T> {
    value
        .parse()
        .map_err(|_| CliError::input(format!("config key `{key}`: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> CliResult<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(CliError::input(format!(
            "config key `{key}`: expected a boolean, got `{value}`"
        ))),
    }
}

pub fn parse_list(key: &str, value: &str) -> CliResult<Vec<f64>> {
    value
        .split(',')
        .map(|s| parse::<f64>(key, s.trim()))
        .collect()
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let e = &mut self.encoder;
        match key {
            "level" => e.level = parse(key, value)?,
            "alpha" => e.params.alpha = parse(key, value)?,
            "delta" => e.params.delta = parse(key, value)?,
            "hbar" => e.params.hbar = parse(key, value)?,
            "motion_estimation" => e.motion_estimation = parse_bool(key, value)?,
            "qem" => e.qem = parse_bool(key, value)?,
            "adaptive_quant" => e.adaptive_quant = parse_bool(key, value)?,
            "collapses_per_anchor" => {
                e.fine = FineConfig {
                    collapses_per_anchor: parse(key, value)?,
                }
            }
            "octree_leaf_capacity" => e.octree.leaf_capacity = parse(key, value)?,
            "octree_max_depth" => e.octree.max_depth = parse(key, value)?,
            "alphas" => self.alphas = parse_list(key, value)?,
            "base_ratio" => self.base_ratio = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "threads" => self.threads = Some(parse(key, value)?),
            _ => {
                return Err(CliError::input(format!(
                    "unknown config key `{key}` (known: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> CliResult<()> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        self.apply_text(&text)
            .map_err(|e| CliError::input(format!("{}: {}", path.display(), e.message)))
    }

    pub fn apply_text(&mut self, text: &str) -> CliResult<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::input(format!("line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| CliError::input(format!("line {}: {}", n + 1, e.message)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> CliResult<()> {
        self.encoder.params.validate()?;
        if self.encoder.level > 8 {
            return Err(CliError::input(format!(
                "level {} is too deep (max 8)",
                self.encoder.level
            )));
        }
        if self.encoder.octree.leaf_capacity == 0 {
            return Err(CliError::input("octree_leaf_capacity must be at least 1"));
        }
        if self.alphas.is_empty() {
            return Err(CliError::input("alpha ladder is empty"));
        }
        for &a in &self.alphas {
            QuantizationParams {
                alpha: a,
                ..self.encoder.params
            }
            .validate()?;
        }
        if !(self.base_ratio > 0.0 && self.base_ratio < 1.0) {
            return Err(CliError::input(format!(
                "base_ratio must lie in (0, 1), got {}",
                self.base_ratio
            )));
        }
        Ok(())
    }
}

/// Effective encoder settings, echoed in stats output.
pub fn describe(settings: &Settings) -> serde_json::Value {
    let e = &settings.encoder;
    serde_json::json!({
        "level": e.level,
        "alpha": e.params.alpha,
        "delta": e.params.delta,
        "hbar": e.params.hbar,
        "motion_estimation": e.motion_estimation,
        "qem": e.qem,
        "adaptive_quant": e.adaptive_quant,
        "collapses_per_anchor": e.fine.collapses_per_anchor,
        "octree_leaf_capacity": e.octree.leaf_capacity,
        "octree_max_depth": e.octree.max_depth,
    })
}
