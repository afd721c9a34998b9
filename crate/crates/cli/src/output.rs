//! Versioned, schema-stable result files. Every CSV starts with a
//! `# schema_version=N` comment followed by a fixed header line; numeric
//! cells use Rust's shortest round-trip float formatting, so identical runs
//! produce byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{RunConfig, SCHEMA_VERSION};
use crate::error::{CliError, Result};

/// Environment variable overriding where output directories are created.
pub const OUTPUT_ROOT_ENV: &str = "LEXIRANK_OUTPUT_ROOT";

pub const SCHEMA_LINE: &str = "# schema_version=1";
pub const TRACE_HEADER_BASE: &str = "iter,lambda,objective,gradient_norm,rank";
pub const SIMLOG_HEADER: &str = "step,x_m,y_m,psi_rad,v_mps,accel_mps2,steer_rad,rank,collision,drivable,speed,centering,progress,inner_steps";
pub const SWEEP_HEADER: &str = "accel_mps2,steer_rad,value,rank";
pub const COMPARE_HEADER: &str = "solver,final_rank,total_inner_steps,min_clearance_m,reached_goal,cum_collision,cum_drivable,cum_speed,cum_centering,cum_progress";
pub const ORACLE_HEADER_BASE: &str = "min_rank,grid_size";

/// Root directory for all outputs: the override variable when set, the
/// current directory otherwise.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Creates (if needed) and returns the named run directory under the root.
pub fn run_dir(name: &str) -> Result<PathBuf> {
    let dir = output_root().join(name);
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

/// Writes a schema-stamped CSV with the given fixed header.
pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut text = String::new();
    writeln!(text, "{SCHEMA_LINE}").expect("string write");
    writeln!(text, "{header}").expect("string write");
    for row in rows {
        writeln!(text, "{row}").expect("string write");
    }
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Per-run summary written next to the CSVs.
#[derive(Debug, Serialize)]
pub struct Metadata {
    pub schema_version: u32,
    pub command: String,
    pub problem: String,
    pub solver: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_inner_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reached_goal: Option<bool>,
}

impl Metadata {
    pub fn new(command: &str, cfg: &RunConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            problem: cfg.problem.clone(),
            solver: cfg.solver.clone(),
            seed: cfg.seed,
            final_rank: None,
            total_inner_steps: None,
            converged: None,
            reached_goal: None,
        }
    }
}

/// Writes metadata.toml into the run directory.
pub fn write_metadata(dir: &Path, meta: &Metadata) -> Result<()> {
    let meta_text = toml::to_string_pretty(meta).expect("metadata serializes");
    std::fs::write(dir.join("metadata.toml"), meta_text)
        .map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

/// Writes metadata.toml and echoes the resolved config as config.toml.
pub fn write_run_documents(dir: &Path, cfg: &RunConfig, meta: &Metadata) -> Result<()> {
    write_metadata(dir, meta)?;
    std::fs::write(dir.join("config.toml"), crate::config::serialize_config(cfg))
        .map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

/// File-name-safe rendering of a lambda value (0.5 -> "0p5").
pub fn lambda_tag(lambda: f64) -> String {
    format!("{lambda}").replace('.', "p").replace('-', "m")
}
