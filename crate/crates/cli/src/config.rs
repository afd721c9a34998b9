//! Run configuration: a human-readable TOML document with unit-suffixed
//! keys, strict unknown-key rejection, and full default filling so that
//! `parse_config(serialize_config(c)) == c`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use lexirank::catalog::catalog_ids;
use lexirank::scenario::{SolverKind, SCENARIO_NAMES};
use lexirank::{LambdaSchedule, SolverConfig};

use crate::error::{CliError, Result};

/// Version stamp written into every config, metadata, and CSV artifact.
pub const SCHEMA_VERSION: u32 = 1;

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}

fn default_solver() -> String {
    "central_path".into()
}

fn default_output_dir() -> String {
    "lexirank_out".into()
}

/// Lambda continuation schedule parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub lambda0: f64,
    pub growth: f64,
    pub lambda_max: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            lambda0: 0.5,
            growth: 2.0,
            lambda_max: 1e6,
        }
    }
}

/// Solver iteration budget and tolerances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub inner_tol: f64,
    pub max_inner_iters: usize,
    pub max_outer_iters: usize,
    pub timescale_ratio: usize,
    pub eps_rank: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let d = SolverConfig::<f64>::default();
        Self {
            inner_tol: d.inner_tol,
            max_inner_iters: d.max_inner_iters,
            max_outer_iters: 80,
            timescale_ratio: d.timescale_ratio,
            eps_rank: d.eps_rank,
        }
    }
}

/// Optional scenario parameter overrides. Keys carry explicit units since
/// the sources mix km/h and m/s.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioOverrides {
    pub speed_limit_kmh: Option<f64>,
    pub dt_s: Option<f64>,
    pub max_steps: Option<usize>,
}

/// One fully specified run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    /// Scenario name or synthetic catalog problem id.
    pub problem: String,
    #[serde(default = "default_solver")]
    pub solver: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub solver_settings: SolverSettings,
    #[serde(default)]
    pub overrides: ScenarioOverrides,
}

impl RunConfig {
    pub fn new(problem: impl Into<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            problem: problem.into(),
            solver: default_solver(),
            seed: 0,
            output_dir: default_output_dir(),
            schedule: ScheduleConfig::default(),
            solver_settings: SolverSettings::default(),
            overrides: ScenarioOverrides::default(),
        }
    }

    pub fn solver_kind(&self) -> Result<SolverKind> {
        SolverKind::parse(&self.solver).map_err(|e| CliError::Validation(format!("solver: {e}")))
    }

    pub fn is_scenario(&self) -> bool {
        SCENARIO_NAMES.contains(&self.problem.as_str())
    }

    pub fn is_synthetic(&self) -> bool {
        catalog_ids().contains(&self.problem.as_str())
    }

    pub fn to_schedule(&self) -> Result<LambdaSchedule<f64>> {
        LambdaSchedule::new(
            self.schedule.lambda0,
            self.schedule.growth,
            self.schedule.lambda_max,
        )
        .map_err(|e| CliError::Validation(format!("schedule: {e}")))
    }

    pub fn to_solver_config(&self) -> SolverConfig<f64> {
        SolverConfig {
            inner_tol: self.solver_settings.inner_tol,
            max_inner_iters: self.solver_settings.max_inner_iters,
            max_outer_iters: self.solver_settings.max_outer_iters,
            timescale_ratio: self.solver_settings.timescale_ratio,
            eps_rank: self.solver_settings.eps_rank,
            seed: self.seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Validation(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            )));
        }
        if !self.is_scenario() && !self.is_synthetic() {
            return Err(CliError::Validation(format!(
                "problem: '{}' is neither a scenario ({SCENARIO_NAMES:?}) nor a catalog problem ({:?})",
                self.problem,
                catalog_ids()
            )));
        }
        self.solver_kind()?;
        if !(self.schedule.growth > 1.0) {
            return Err(CliError::Validation(format!(
                "schedule.growth: must exceed 1, got {}",
                self.schedule.growth
            )));
        }
        if !(self.schedule.lambda0 > 0.0) || !(self.schedule.lambda_max >= self.schedule.lambda0) {
            return Err(CliError::Validation(
                "schedule: lambda0 must be positive and lambda_max >= lambda0".into(),
            ));
        }
        if let Some(v) = self.overrides.speed_limit_kmh {
            if !(v > 0.0) {
                return Err(CliError::Validation(
                    "overrides.speed_limit_kmh: must be positive".into(),
                ));
            }
        }
        if let Some(dt) = self.overrides.dt_s {
            if !(dt > 0.0) {
                return Err(CliError::Validation("overrides.dt_s: must be positive".into()));
            }
        }
        if self.output_dir.is_empty() {
            return Err(CliError::Validation("output_dir: must be non-empty".into()));
        }
        Ok(())
    }
}

/// Parses and validates a config document, filling defaults.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads, parses, and validates the config file at `path`.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

/// Serializes a config to the same TOML dialect `parse_config` accepts.
pub fn serialize_config(cfg: &RunConfig) -> String {
    toml::to_string_pretty(cfg).expect("config serializes")
}
