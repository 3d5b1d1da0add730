//! Experiment configuration files (TOML, strict schema).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gluing::{GluingProfile, ProfileKind, DEFAULT_R_MIN};
use crate::scale_space::{CylinderGrid, WeightSequence};

/// Overrides the output directory.
pub const ENV_OUTPUT_DIR: &str = "SCLAB_OUTPUT_DIR";
/// Overrides the worker thread count.
pub const ENV_THREADS: &str = "SCLAB_THREADS";

pub const DEFAULT_SEED: u64 = 2024;

/// Named tolerances and their defaults.
pub const DEFAULT_TOLERANCES: &[(&str, f64)] = &[
    ("chain_rule", 1e-4),
    ("germ", 1e-10),
    ("holomorphic", 1e-8),
    ("linearization", 1e-6),
    ("newton", 1e-9),
    ("projection", 1e-8),
    ("retract", 1e-9),
    ("round_trip", 1e-6),
    ("sc1", 1e-3),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n_s: usize,
    pub n_t: usize,
    pub s_max: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = CylinderGrid::default();
        GridConfig {
            n_s: g.n_s,
            n_t: g.n_t,
            s_max: g.s_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightsConfig {
    pub deltas: Vec<f64>,
}

impl Default for WeightsConfig {
    fn default() -> Self {
        WeightsConfig {
            deltas: WeightSequence::default().deltas().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output: PathBuf,
    pub profile: ProfileKind,
    pub r_min: f64,
    pub grid: GridConfig,
    pub weights: WeightsConfig,
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: DEFAULT_SEED,
            output: PathBuf::from("sclab-out"),
            profile: ProfileKind::Exponential,
            r_min: DEFAULT_R_MIN,
            grid: GridConfig::default(),
            weights: WeightsConfig::default(),
            tolerances: default_tolerances(),
        }
    }
}

fn default_tolerances() -> BTreeMap<String, f64> {
    DEFAULT_TOLERANCES.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

impl ExperimentConfig {
    /// Parse TOML text, fill defaults and validate.
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| Error::schema("<document>", e.to_string()))?;
        let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let mut path = e.path().to_string();
            let message = e.inner().to_string();
            if let Some(key) = message.strip_prefix("unknown field `").and_then(|r| r.split('`').next()) {
                path = if path == "." { key.to_string() } else { format!("{path}.{key}") };
            }
            Error::schema(if path == "." { "<document>".into() } else { path }, message)
        })?;
        let given = std::mem::take(&mut cfg.tolerances);
        cfg.tolerances = default_tolerances();
        for (k, v) in given {
            if !cfg.tolerances.contains_key(&k) {
                return Err(Error::schema(format!("tolerances.{k}"), "unknown tolerance"));
            }
            cfg.tolerances.insert(k, v);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        for (k, v) in &self.tolerances {
            if !(*v > 0.0 && v.is_finite()) {
                return Err(Error::schema(format!("tolerances.{k}"), format!("{v} must be positive")));
            }
        }
        WeightSequence::new(self.weights.deltas.clone()).map_err(|e| Error::schema("weights.deltas", e.to_string()))?;
        self.cylinder_grid().map_err(|e| Error::schema("grid", e.to_string()))?;
        if !(self.r_min > 0.0 && self.r_min < 0.5) {
            return Err(Error::schema("r_min", format!("{} outside (0, 1/2)", self.r_min)));
        }
        let neck = GluingProfile::from_kind(self.profile)
            .eval(self.r_min)
            .map_err(|e| Error::schema("r_min", e.to_string()))?;
        if neck > self.grid.s_max {
            warn!(
                "r_min = {} gives neck length {neck:.4e}, beyond s_max = {}",
                self.r_min, self.grid.s_max
            );
            return Err(Error::schema(
                "r_min",
                format!("neck length {neck:.4e} at r_min exceeds s_max = {}", self.grid.s_max),
            ));
        }
        Ok(())
    }

    pub fn cylinder_grid(&self) -> Result<CylinderGrid> {
        CylinderGrid::new(self.grid.s_max, self.grid.n_s, self.grid.n_t)
    }

    pub fn weight_sequence(&self) -> Result<WeightSequence> {
        WeightSequence::new(self.weights.deltas.clone())
    }

    pub fn gluing_profile(&self) -> GluingProfile {
        GluingProfile::from_kind(self.profile)
    }

    /// A named tolerance; every name in [`DEFAULT_TOLERANCES`] is present.
    pub fn tolerance(&self, name: &str) -> Result<f64> {
        self.tolerances
            .get(name)
            .copied()
            .ok_or_else(|| Error::schema(format!("tolerances.{name}"), "unknown tolerance"))
    }

    /// Apply the output-directory and thread-count environment overrides.
    /// Returns the thread count override, if any.
    pub fn apply_env_overrides(&mut self) -> Result<Option<usize>> {
        if let Ok(dir) = std::env::var(ENV_OUTPUT_DIR) {
            if !dir.is_empty() {
                self.output = PathBuf::from(dir);
            }
        }
        match std::env::var(ENV_THREADS) {
            Ok(v) if !v.is_empty() => v
                .parse::<usize>()
                .ok()
                .filter(|n| *n > 0)
                .map(Some)
                .ok_or_else(|| Error::schema(ENV_THREADS, format!("`{v}` is not a positive integer"))),
            _ => Ok(None),
        }
    }
}

/// Read and validate a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    ExperimentConfig::from_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn values_override_defaults() {
        let cfg = ExperimentConfig::from_toml(
            "seed = 7\nprofile = \"logarithmic\"\n[grid]\nn_s = 401\n[tolerances]\nnewton = 1e-8\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.profile, ProfileKind::Logarithmic);
        assert_eq!(cfg.grid.n_s, 401);
        assert_eq!(cfg.grid.n_t, 16);
        assert_eq!(cfg.tolerance("newton").unwrap(), 1e-8);
        assert_eq!(cfg.tolerance("germ").unwrap(), 1e-10);
    }

    fn path_of(text: &str) -> String {
        match ExperimentConfig::from_toml(text) {
            Err(Error::SchemaError { path, .. }) => path,
            other => panic!("expected a schema error, got {other:?}"),
        }
    }

    #[test]
    fn schema_errors_name_the_field() {
        assert_eq!(path_of("[weights]\ndeltas = [1.0, 0.5]\n"), "weights.deltas");
        assert_eq!(path_of("colour = 3\n"), "colour");
        assert_eq!(path_of("[grid]\nn_s = \"many\"\n"), "grid.n_s");
        assert_eq!(path_of("[grid]\nspacing = 1\n"), "grid.spacing");
        assert_eq!(path_of("[tolerances]\nnewton = -1.0\n"), "tolerances.newton");
        assert_eq!(path_of("[tolerances]\nwhatever = 1.0\n"), "tolerances.whatever");
        assert_eq!(path_of("seed = [\n"), "<document>");
    }

    #[test]
    fn small_r_min_is_rejected() {
        assert_eq!(path_of("r_min = 0.1\n[grid]\ns_max = 60.0\n"), "r_min");
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }
}
