//! Run configuration: a JSON file describing the model, the grid, solver
//! settings, simulation settings and where outputs go.
//!
//! Times are in the model's time unit, distances in its length unit, angles
//! in radians unless a field name says otherwise.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aware::AwareOptions;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::model::{ModelParams, PolarCurve, WindParams};
use crate::neutral::NeutralOptions;
use crate::simulate::SimConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Mean drift `a` of the wind direction (rad per time).
    pub drift: f64,
    /// Volatility `sigma` of the wind direction (rad per sqrt time).
    pub sigma: f64,
    /// Top boat speed.
    pub f_max: f64,
    /// `angle_deg,speed` CSV; the bundled racing polar when absent. Relative
    /// paths are resolved against the config file's directory.
    #[serde(default)]
    pub polar: Option<PathBuf>,
    /// Duration `C` of a tack switch.
    pub switch_time: f64,
    pub target_radius: f64,
    pub outer_radius: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            drift: 0.0,
            sigma: 0.05,
            f_max: 0.05,
            polar: None,
            switch_time: 2.0,
            target_radius: 0.1,
            outer_radius: 2.0,
        }
    }
}

/// Grid resolution. The radial extent is the model's outer radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_r: usize,
    pub n_theta: usize,
    /// Largest deadline `s_bar`.
    pub s_max: f64,
    /// Budget step; must divide both `s_max` and the switch time.
    pub ds: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n_r: 200,
            n_theta: 200,
            s_max: 70.0,
            ds: 0.025,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub aware: AwareOptions,
    pub neutral: NeutralOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Directory for every output; relative to the working directory.
    pub output_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub sim: SimConfig,
    pub paths: PathsConfig,
}

/// A configuration with its polar loaded and its grid built.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub params: ModelParams,
    pub grid: GridSpec,
}

impl RunConfig {
    /// Reads and resolves a config file.
    pub fn load(path: &Path) -> Result<Resolved> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(polar) = &config.model.polar {
            if polar.is_relative() {
                let base = path.parent().unwrap_or(Path::new(""));
                config.model.polar = Some(base.join(polar));
            }
        }
        config.resolve()
    }

    /// Loads the polar, builds the grid and validates everything.
    pub fn resolve(self) -> Result<Resolved> {
        let m = &self.model;
        let polar = match &m.polar {
            Some(path) => PolarCurve::from_csv_path(path, m.f_max)?,
            None => PolarCurve::racing_default(m.f_max)?,
        };
        let params = ModelParams {
            wind: WindParams::new(m.drift, m.sigma)?,
            polar,
            switch_time: m.switch_time,
            target_radius: m.target_radius,
            outer_radius: m.outer_radius,
        };
        params.validate()?;
        let g = &self.grid;
        let grid = GridSpec::with_budget_step(g.n_r, g.n_theta, m.outer_radius, g.s_max, g.ds)?;
        grid.switch_offset(params.switch_time)?;
        self.sim.validate(&params, grid.s_max)?;
        Ok(Resolved {
            config: self,
            params,
            grid,
        })
    }
}

impl Resolved {
    /// Hash of everything the risk-aware field depends on.
    pub fn aware_hash(&self) -> String {
        digest(&serde_json::json!({
            "field": "aware",
            "model": self.params,
            "grid": self.grid,
            "options": self.config.solver.aware,
        }))
    }

    /// Hash of everything the risk-neutral field depends on.
    pub fn neutral_hash(&self) -> String {
        digest(&serde_json::json!({
            "field": "neutral",
            "model": self.params,
            "grid": self.grid,
            "options": self.config.solver.neutral,
        }))
    }

    pub fn output_dir(&self) -> &Path {
        &self.config.paths.output_dir
    }

    pub fn neutral_paths(&self) -> (PathBuf, PathBuf) {
        let dir = self.output_dir();
        (
            dir.join("neutral_value.grid"),
            dir.join("neutral_policy.grid"),
        )
    }

    pub fn aware_paths(&self) -> (PathBuf, PathBuf) {
        let dir = self.output_dir();
        (dir.join("aware_value.grid"), dir.join("aware_policy.grid"))
    }
}

fn digest(value: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(value).expect("config values serialize");
    let hash = Sha256::digest(&bytes);
    hash.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let r = RunConfig::default().resolve().unwrap();
        assert_eq!(r.grid.n_s, 2800);
        assert_eq!(r.grid.r_max, 2.0);
        assert_eq!(r.aware_hash().len(), 64);
        assert_ne!(r.aware_hash(), r.neutral_hash());
    }

    #[test]
    fn hash_tracks_relevant_fields_only() {
        let base = RunConfig::default().resolve().unwrap();
        let mut other = RunConfig::default();
        other.sim.seed = 99;
        other.solver.neutral.tol = 1e-9;
        let other = other.resolve().unwrap();
        assert_eq!(base.aware_hash(), other.aware_hash());
        assert_ne!(base.neutral_hash(), other.neutral_hash());
        let mut windy = RunConfig::default();
        windy.model.drift = 0.15;
        assert_ne!(base.aware_hash(), windy.resolve().unwrap().aware_hash());
    }

    #[test]
    fn budget_step_must_divide_the_switch_time() {
        let mut c = RunConfig::default();
        c.grid.ds = 0.3;
        c.grid.s_max = 69.0;
        let err = c.resolve().unwrap_err().to_string();
        assert!(err.contains("s_k - C = s_l"), "{err}");
    }

    #[test]
    fn missing_polar_names_the_path() {
        let mut c = RunConfig::default();
        c.model.polar = Some(PathBuf::from("/nonexistent/polar.csv"));
        let err = c.resolve().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("/nonexistent/polar.csv"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"model": {"drift": 0, "sigma": 0.05, "f_max": 0.05, "switch_time": 2,
            "target_radius": 0.1, "outer_radius": 2, "colour": 1}}"#;
        assert!(serde_json::from_str::<RunConfig>(text).is_err());
        let partial: RunConfig = serde_json::from_str(
            r#"{"grid": {"n_r": 40, "n_theta": 40, "s_max": 10, "ds": 0.25}}"#,
        )
        .unwrap();
        assert_eq!(partial.grid.n_r, 40);
        assert_eq!(partial.sim, SimConfig::default());
    }
}
