//! Experiment configuration: one self-describing JSON file per run, with
//! committed presets for the reference experiments and field-named
//! validation errors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use torusq::classical::{Frequencies, Observable, ObservableCoeff, TorusPoint};
use torusq::rkha::{IndexSetN, RkhaParams};

#[derive(Debug, Error)]
#[error("config field `{field}`: {message}")]
pub struct ConfigError {
    pub field: &'static str,
    pub message: String,
}

fn bad(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrepMode {
    Exact,
    Efficient,
}

impl std::str::FromStr for PrepMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(PrepMode::Exact),
            "efficient" => Ok(PrepMode::Efficient),
            other => Err(format!("unknown prep mode `{other}` (exact|efficient)")),
        }
    }
}

/// Observable given either as a preset name or as explicit Fourier
/// coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    Preset(String),
    Coeffs(Vec<ObservableCoeff>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: u32,
    pub d: usize,
    pub p: f64,
    pub tau: f64,
    pub alphas: Vec<f64>,
    pub initial_point: Vec<f64>,
    pub observable: ObservableSpec,
    pub t_start: f64,
    pub t_end: f64,
    pub t_step: f64,
    pub shots: u64,
    pub seed: u64,
    pub prep_mode: PrepMode,
    pub output_dir: String,
}

pub const PRESET_NAMES: [&str; 3] = ["fig5_n3", "fig5_n7", "fig6_n8"];

impl ExperimentConfig {
    /// Parse and validate a JSON config.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| bad("<json>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// One of the committed reference experiments.
    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let text = match name {
            "fig5_n3" => include_str!("../presets/fig5_n3.json"),
            "fig5_n7" => include_str!("../presets/fig5_n7.json"),
            "fig6_n8" => include_str!("../presets/fig6_n8.json"),
            other => {
                return Err(bad(
                    "preset",
                    format!("unknown preset `{other}` (available: {})", PRESET_NAMES.join(", ")),
                ))
            }
        };
        Self::from_json(text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.d == 0 {
            return Err(bad("d", "torus dimension must be at least 1"));
        }
        if self.n == 0 || self.n as usize % self.d != 0 {
            return Err(bad(
                "n",
                format!("{} is not a positive multiple of d = {}", self.n, self.d),
            ));
        }
        if self.n > 24 {
            return Err(bad(
                "n",
                format!("{} qubits exceeds the 2^24-amplitude simulation limit", self.n),
            ));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(bad("p", format!("{} is outside (0, 1)", self.p)));
        }
        if !(self.tau > 0.0) {
            return Err(bad("tau", format!("{} is not strictly positive", self.tau)));
        }
        if self.alphas.len() != self.d {
            return Err(bad(
                "alphas",
                format!("{} entries, expected d = {}", self.alphas.len(), self.d),
            ));
        }
        if self.alphas.iter().any(|&a| !(a > 0.0)) {
            return Err(bad("alphas", "all rotation frequencies must be positive"));
        }
        if self.initial_point.len() != self.d {
            return Err(bad(
                "initial_point",
                format!("{} entries, expected d = {}", self.initial_point.len(), self.d),
            ));
        }
        if !(self.t_step > 0.0) {
            return Err(bad("t_step", format!("{} is not strictly positive", self.t_step)));
        }
        if self.t_end < self.t_start {
            return Err(bad(
                "t_end",
                format!("{} is earlier than t_start = {}", self.t_end, self.t_start),
            ));
        }
        if self.shots == 0 {
            return Err(bad("shots", "at least one shot is required"));
        }
        if self.output_dir.is_empty() {
            return Err(bad("output_dir", "must not be empty"));
        }
        // Resolving the observable also checks its support.
        self.resolve_observable()?;
        Ok(())
    }

    pub fn resolve_observable(&self) -> Result<Observable, ConfigError> {
        let f = match &self.observable {
            ObservableSpec::Preset(name) => {
                Observable::preset(name).map_err(|e| bad("observable", e.to_string()))?
            }
            ObservableSpec::Coeffs(entries) => {
                Observable::from_entries(entries).map_err(|e| bad("observable", e.to_string()))?
            }
        };
        if f.d() != self.d {
            return Err(bad(
                "observable",
                format!("dimension {} does not match d = {}", f.d(), self.d),
            ));
        }
        let iset = IndexSetN::new(self.n, self.d).map_err(|e| bad("n", e.to_string()))?;
        if !f.supported_on(&iset) {
            return Err(bad(
                "observable",
                "support must lie in the truncated index set (or at zero)",
            ));
        }
        Ok(f)
    }

    pub fn params(&self) -> Result<RkhaParams, ConfigError> {
        RkhaParams::new(self.d, self.p, self.tau).map_err(|e| bad("p", e.to_string()))
    }

    pub fn frequencies(&self) -> Result<Frequencies, ConfigError> {
        Frequencies::new(self.alphas.clone()).map_err(|e| bad("alphas", e.to_string()))
    }

    pub fn point(&self) -> TorusPoint {
        TorusPoint::new(self.initial_point.clone())
    }

    /// The measurement times `t_start, t_start + t_step, ...` up to and
    /// including `t_end` (within a half-ulp slack on the endpoint).
    pub fn time_grid(&self) -> Vec<f64> {
        let span = self.t_end - self.t_start;
        let steps = (span / self.t_step * (1.0 + 1e-12) + 1e-12).floor() as usize + 1;
        (0..steps)
            .map(|i| self.t_start + i as f64 * self.t_step)
            .collect()
    }
}

/// Per-timestep sampling seed: a SplitMix64 scramble of the run seed and the
/// grid index, so time points can be processed in any order (or in parallel)
/// without changing any output.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
