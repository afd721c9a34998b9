//! Subcommand dispatch: solve, scenario, sweep, compare, oracle.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use lexirank::catalog::{catalog_problem, CatalogProblem};
use lexirank::scenario::{
    build_scenario, compare_solvers, receding_horizon_run, Scenario, SimLog, SolverKind,
};
use lexirank::solvers::{
    central_path_solve, grid_oracle, random_decision, timescale_solve, RunTrace,
};
use lexirank::sweep::{landscape_sweep, sweep_world, SweepSpec};

use crate::config::{parse_config, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{
    lambda_tag, run_dir, write_csv, write_metadata, write_run_documents, Metadata,
    COMPARE_HEADER, ORACLE_HEADER_BASE, SIMLOG_HEADER, SWEEP_HEADER, TRACE_HEADER_BASE,
};

#[derive(Debug, Parser)]
#[command(
    name = "lexirank",
    version,
    about = "Lexicographic multi-objective optimization runner",
    after_help = "Exit codes: 0 success, 2 validation error, 3 i/o error, 4 config parse error, 5 solver divergence."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a synthetic catalog problem and write the solver trace.
    Solve(RunArgs),
    /// Run a receding-horizon scenario and write the executed log.
    Scenario(RunArgs),
    /// Sweep the single-step (acceleration, steering) utility landscape.
    Sweep(SweepArgs),
    /// Run several solvers on one scenario and tabulate the results.
    Compare(CompareArgs),
    /// Grid-enumerate the exact minimum rank of a catalog problem.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Config file; command-line flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Scenario name or catalog problem id.
    #[arg(long, alias = "name")]
    pub problem: Option<String>,
    #[arg(long)]
    pub solver: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (created under the output root).
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated lambda values.
    #[arg(long, default_value = "0.5,34")]
    pub lambda: String,
    /// Grid resolution as accel_cells,steer_cells.
    #[arg(long, default_value = "200,200")]
    pub resolution: String,
    #[arg(long, default_value = "lexirank_out")]
    pub out: String,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Scenario name.
    #[arg(long, alias = "problem")]
    pub name: String,
    /// Comma-separated solver names (default: all four).
    #[arg(long)]
    pub solvers: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "lexirank_out")]
    pub out: String,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Catalog problem id.
    #[arg(long)]
    pub problem: String,
    /// Grid points per dimension (default: the problem's budgeted value).
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long, default_value = "lexirank_out")]
    pub out: String,
}

fn resolve_config(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => parse_config(path)?,
        None => {
            let problem = args.problem.clone().ok_or_else(|| {
                CliError::Validation("either --config or --problem is required".into())
            })?;
            RunConfig::new(problem)
        }
    };
    if let Some(p) = &args.problem {
        cfg.problem = p.clone();
    }
    if let Some(s) = &args.solver {
        cfg.solver = s.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fmt_row(cells: &[String]) -> String {
    cells.join(",")
}

fn trace_rows(trace: &RunTrace<f64>) -> Vec<String> {
    trace
        .iterations
        .iter()
        .map(|r| {
            let mut cells = vec![
                r.iter.to_string(),
                r.lambda.to_string(),
                r.objective.to_string(),
                r.gradient_norm.to_string(),
                r.rank.to_string(),
            ];
            cells.extend(r.decision.iter().map(|v| v.to_string()));
            fmt_row(&cells)
        })
        .collect()
}

fn run_solve(args: &RunArgs) -> Result<()> {
    let cfg = resolve_config(args)?;
    if !cfg.is_synthetic() {
        return Err(CliError::Validation(format!(
            "problem: '{}' is a scenario; use the scenario subcommand",
            cfg.problem
        )));
    }
    let problem: CatalogProblem<f64> = catalog_problem(&cfg.problem).expect("validated id");
    let kind = cfg.solver_kind()?;
    let schedule = cfg.to_schedule()?;
    let solver_cfg = lexirank::SolverConfig {
        bounds: Some(problem.bounds.clone()),
        ..cfg.to_solver_config()
    };
    let x0 = random_decision(&problem.bounds, cfg.seed);
    let trace = match kind {
        SolverKind::CentralPath => {
            central_path_solve(&problem.rulebook, &x0, &schedule, &solver_cfg)?
        }
        SolverKind::Timescale => timescale_solve(&problem.rulebook, &x0, &schedule, &solver_cfg)?,
        other => {
            return Err(CliError::Validation(format!(
                "solver: '{}' is not supported for synthetic problems (expected central_path or timescale)",
                other.name()
            )))
        }
    };

    let dir = run_dir(&cfg.output_dir)?;
    let header = {
        let mut h = TRACE_HEADER_BASE.to_string();
        for i in 0..problem.rulebook.dim() {
            h.push_str(&format!(",x{i}"));
        }
        h
    };
    write_csv(&dir.join("trace.csv"), &header, &trace_rows(&trace))?;
    let mut meta = Metadata::new("solve", &cfg);
    meta.final_rank = Some(trace.final_rank.value);
    meta.total_inner_steps = Some(trace.total_inner_steps);
    meta.converged = Some(trace.converged);
    write_run_documents(&dir, &cfg, &meta)?;
    println!(
        "solve {}: rank {}/{} in {} inner steps (converged: {}) -> {}",
        cfg.problem,
        trace.final_rank.value,
        trace.final_rank.n,
        trace.total_inner_steps,
        trace.converged,
        dir.display()
    );
    Ok(())
}

fn apply_overrides(cfg: &RunConfig, scenario: &mut Scenario<f64>) {
    if let Some(kmh) = cfg.overrides.speed_limit_kmh {
        scenario.road.speed_limit = kmh / 3.6;
    }
    if let Some(dt) = cfg.overrides.dt_s {
        scenario.dt = dt;
    }
    if let Some(steps) = cfg.overrides.max_steps {
        scenario.max_steps = steps;
    }
}

fn simlog_rows(log: &SimLog<f64>) -> Vec<String> {
    log.executed_states
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (a, d) = if i > 0 {
                log.applied_controls[i - 1]
            } else {
                (0.0, 0.0)
            };
            let inner = if i > 0 { log.replans[i - 1].inner_steps } else { 0 };
            let v = &log.step_violations[i];
            fmt_row(&[
                i.to_string(),
                s.x.to_string(),
                s.y.to_string(),
                s.psi.to_string(),
                s.v.to_string(),
                a.to_string(),
                d.to_string(),
                log.step_ranks[i].to_string(),
                v[0].to_string(),
                v[1].to_string(),
                v[2].to_string(),
                v[3].to_string(),
                v[4].to_string(),
                inner.to_string(),
            ])
        })
        .collect()
}

fn run_scenario(args: &RunArgs) -> Result<()> {
    let cfg = resolve_config(args)?;
    if !cfg.is_scenario() {
        return Err(CliError::Validation(format!(
            "problem: '{}' is a catalog problem; use the solve subcommand",
            cfg.problem
        )));
    }
    let mut scenario = build_scenario::<f64>(&cfg.problem)?;
    apply_overrides(&cfg, &mut scenario);
    let kind = cfg.solver_kind()?;
    let schedule = cfg.to_schedule()?;
    let solver_cfg = cfg.to_solver_config();
    let log = receding_horizon_run(&scenario, kind, &solver_cfg, &schedule, false)?;

    let dir = run_dir(&cfg.output_dir)?;
    write_csv(&dir.join("simlog.csv"), SIMLOG_HEADER, &simlog_rows(&log))?;
    let mut meta = Metadata::new("scenario", &cfg);
    meta.final_rank = Some(log.final_rank());
    meta.total_inner_steps = Some(log.total_inner_steps);
    meta.reached_goal = Some(log.reached_goal);
    write_run_documents(&dir, &cfg, &meta)?;
    println!(
        "scenario {} ({}): final rank {}, reached goal: {}, {} inner steps -> {}",
        cfg.problem,
        kind.name(),
        log.final_rank(),
        log.reached_goal,
        log.total_inner_steps,
        dir.display()
    );
    Ok(())
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<T>()
                .map_err(|_| CliError::Validation(format!("{what}: cannot parse '{t}'")))
        })
        .collect()
}

fn run_sweep(args: &SweepArgs) -> Result<()> {
    let lambdas: Vec<f64> = parse_list(&args.lambda, "lambda")?;
    let res: Vec<usize> = parse_list(&args.resolution, "resolution")?;
    if res.len() != 2 {
        return Err(CliError::Validation(
            "resolution: expected accel_cells,steer_cells".into(),
        ));
    }
    let spec = SweepSpec {
        lambdas: lambdas.clone(),
        resolution: (res[0], res[1]),
        ..Default::default()
    };
    let (world, state, dt) = sweep_world::<f64>();
    let grids = landscape_sweep(world, state, dt, &spec)?;

    let dir = run_dir(&args.out)?;
    for grid in &grids {
        let mut rows = Vec::with_capacity(grid.values.len());
        for (i, &a) in grid.accels.iter().enumerate() {
            for (j, &s) in grid.steers.iter().enumerate() {
                rows.push(fmt_row(&[
                    a.to_string(),
                    s.to_string(),
                    grid.value(i, j).to_string(),
                    grid.rank(i, j).to_string(),
                ]));
            }
        }
        let path = dir.join(format!("sweep_lambda_{}.csv", lambda_tag(grid.lambda)));
        write_csv(&path, SWEEP_HEADER, &rows)?;
    }
    let meta = Metadata {
        schema_version: crate::config::SCHEMA_VERSION,
        command: "sweep".into(),
        problem: "single_step_jaywalker".into(),
        solver: String::new(),
        seed: 0,
        final_rank: None,
        total_inner_steps: None,
        converged: None,
        reached_goal: None,
    };
    write_metadata(&dir, &meta)?;
    println!(
        "sweep: {} lambda grids at {}x{} -> {}",
        grids.len(),
        res[0],
        res[1],
        dir.display()
    );
    Ok(())
}

fn run_compare(args: &CompareArgs) -> Result<()> {
    let mut cfg = RunConfig::new(args.name.clone());
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.output_dir = args.out.clone();
    cfg.solver = "central_path".into(); // per-row solvers below
    cfg.validate()?;
    if !cfg.is_scenario() {
        return Err(CliError::Validation(format!(
            "name: '{}' is not a scenario",
            args.name
        )));
    }
    let kinds: Vec<SolverKind> = match &args.solvers {
        Some(list) => list
            .split(',')
            .map(|s| SolverKind::parse(s.trim()).map_err(CliError::from))
            .collect::<Result<_>>()?,
        None => SolverKind::ALL.to_vec(),
    };
    let scenario = build_scenario::<f64>(&args.name)?;
    let schedule = cfg.to_schedule()?;
    let solver_cfg = cfg.to_solver_config();
    let report = compare_solvers(&scenario, &kinds, &solver_cfg, &schedule)?;

    let dir = run_dir(&args.out)?;
    let rows: Vec<String> = report
        .rows
        .iter()
        .map(|r| {
            let cv = r.cumulative_violations;
            fmt_row(&[
                r.solver.name().to_string(),
                r.final_rank.to_string(),
                r.total_inner_steps.to_string(),
                r.min_clearance.map(|c| c.to_string()).unwrap_or_default(),
                r.reached_goal.to_string(),
                cv[0].to_string(),
                cv[1].to_string(),
                cv[2].to_string(),
                cv[3].to_string(),
                cv[4].to_string(),
            ])
        })
        .collect();
    write_csv(&dir.join("compare.csv"), COMPARE_HEADER, &rows)?;
    let meta = Metadata::new("compare", &cfg);
    write_metadata(&dir, &meta)?;
    println!(
        "compare {}: {} solvers, rank disagreement: {} -> {}",
        args.name,
        report.rows.len(),
        report.rank_disagreement,
        dir.display()
    );
    Ok(())
}

fn run_oracle(args: &OracleArgs) -> Result<()> {
    let problem: CatalogProblem<f64> = catalog_problem(&args.problem).ok_or_else(|| {
        CliError::Validation(format!("problem: unknown catalog id '{}'", args.problem))
    })?;
    let points = args.points.unwrap_or(problem.grid_points_per_dim);
    let oracle = grid_oracle(&problem.rulebook, &problem.bounds, points)?;

    let dir = run_dir(&args.out)?;
    let header = {
        let mut h = ORACLE_HEADER_BASE.to_string();
        for i in 0..problem.rulebook.dim() {
            h.push_str(&format!(",x{i}"));
        }
        for i in 0..problem.rulebook.len() {
            h.push_str(&format!(",r{i}"));
        }
        h
    };
    let mut cells = vec![oracle.min_rank.to_string(), oracle.grid_size.to_string()];
    cells.extend(oracle.lex_argmin.values().iter().map(|v| v.to_string()));
    cells.extend(oracle.argmin_violations.values().iter().map(|v| v.to_string()));
    write_csv(&dir.join("oracle.csv"), &header, &[fmt_row(&cells)])?;
    println!(
        "oracle {}: min rank {} over {} grid points -> {}",
        args.problem,
        oracle.min_rank,
        oracle.grid_size,
        dir.display()
    );
    Ok(())
}

/// Executes a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Scenario(args) => run_scenario(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Compare(args) => run_compare(args),
        Command::Oracle(args) => run_oracle(args),
    }
}
