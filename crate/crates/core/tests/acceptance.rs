//! End-to-end acceptance gate. Each test covers one release criterion and
//! prints a single pass/fail line (visible with `--nocapture`, or on
//! failure).

use std::cmp::Ordering;
use std::sync::Arc;
use std::time::Instant;

use lexirank::catalog::{catalog, hinge_halfspace, quadratic_rule};
use lexirank::rulebook::{lex_compare, FnRule, Rule, Rulebook, ViolationVector};
use lexirank::rules_av::build_av_rulebook;
use lexirank::scalarization::{
    dominance_ratio, dws_reward, representability_check, robustness_from_violations,
    utility_gradient, utility_normalized, DwsParams, LambdaSchedule, RepresentabilityVerdict,
    RobustnessConfig,
};
use lexirank::scenario::{
    build_scenario, receding_horizon_run, scenario_schedule, SimLog, SolverKind,
};
use lexirank::solvers::{
    central_path_solve, finite_diff_gradient, grid_oracle, random_decision, timescale_solve,
    SolverConfig,
};
use lexirank::sweep::{landscape_sweep, min_cross_class_gap, rank0_dominates, sweep_world, SweepSpec};
use lexirank::vehicle::VehicleState;

const EPS_RANK: f64 = 1e-9;

fn report(criterion: usize, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion} ({name}): {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} ({name}) failed: {detail}");
}

fn rel_norm_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-6)
}

/// A random synthetic rulebook mixing goal quadratics and hinge halfspaces.
fn random_rulebook(index: u64) -> (Rulebook<f64>, usize) {
    let n_rules = 2 + (index % 4) as usize; // 2..=5
    let dim = 1 + (index % 3) as usize; // 1..=3
    let param_bounds = vec![(-2.0, 2.0); dim + 1];
    let rules: Vec<Arc<dyn Rule<f64>>> = (0..n_rules)
        .map(|i| {
            let p = random_decision(&param_bounds, 0xAB5_0000 + index * 16 + i as u64);
            let (head, last): (Vec<f64>, f64) = (p.values()[..dim].to_vec(), p.values()[dim]);
            if (index + i as u64) % 2 == 0 {
                quadratic_rule(&format!("q{i}"), head, last.abs() + 0.1)
            } else {
                hinge_halfspace(&format!("h{i}"), head, last, last.abs() + 0.1)
            }
        })
        .collect();
    (Rulebook::new(rules, dim).unwrap(), dim)
}

#[test]
fn criterion_1_representability() {
    let start = Instant::now();
    let lambdas: Vec<f64> = (0..=60).map(|k| 10f64.powi(k)).collect();
    let mut pairs = 0usize;
    let mut consistent = 0usize;
    let mut indifference_ok = true;
    for book in 0..100u64 {
        let (rb, dim) = random_rulebook(book);
        let bounds = vec![(-3.0, 3.0); dim];
        for pair in 0..50u64 {
            let x = random_decision(&bounds, 0xF00D + book * 1000 + pair * 2);
            let y = if pair % 10 == 9 {
                x.clone() // engineered indifference pair
            } else {
                random_decision(&bounds, 0xF00D + book * 1000 + pair * 2 + 1)
            };
            let verdict = representability_check(&rb, x.values(), y.values(), &lambdas).unwrap();
            pairs += 1;
            match verdict {
                RepresentabilityVerdict::ConsistentPreference { .. } => consistent += 1,
                RepresentabilityVerdict::ConsistentIndifference => {
                    consistent += 1;
                }
                RepresentabilityVerdict::Inconsistent { .. } => {}
            }
            if pair % 10 == 9
                && verdict != RepresentabilityVerdict::ConsistentIndifference
            {
                indifference_ok = false;
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = consistent == pairs && indifference_ok && elapsed.as_secs_f64() < 60.0;
    report(
        1,
        "representability",
        pass,
        &format!(
            "{consistent}/{pairs} pairs consistent, indifference exact: {indifference_ok}, {elapsed:.2?}"
        ),
    );
}

#[test]
fn criterion_2_gradient_correctness() {
    let start = Instant::now();
    let mut points = 0usize;
    let mut worst = 0f64;
    // utility gradient on the synthetic catalog
    for p in catalog::<f64>() {
        for seed in 0..5 {
            let x = random_decision(&p.bounds, 0x6AD + seed);
            let lambda = 7.0;
            let an = utility_gradient(&p.rulebook, x.values(), lambda, true).unwrap();
            let fd = finite_diff_gradient(
                |y| utility_normalized(&p.rulebook, y, lambda).unwrap(),
                x.values(),
                1e-6,
            );
            worst = worst.max(rel_norm_error(&an, &fd));
            points += 1;
        }
    }
    // decision-space gradients of every AV rule
    let horizon = 3;
    let (world, _, dt) = sweep_world::<f64>();
    let x0 = VehicleState::new(0.0, -0.3, 0.08, 8.0);
    let rulebook = build_av_rulebook(world, x0, dt, horizon);
    // stay strictly inside the actuation box: clamped controls have a
    // genuinely zero analytic sensitivity that a straddling FD step misses
    let bounds: Vec<(f64, f64)> = (0..horizon)
        .flat_map(|_| [(-7.9, 2.9), (-0.59, 0.59)])
        .collect();
    for seed in 0..20 {
        let x = random_decision(&bounds, 0xCAFE + seed);
        for rule in rulebook.rules() {
            let an = rule.gradient(x.values());
            let fd = finite_diff_gradient(|y| rule.evaluate(y), x.values(), 1e-6);
            worst = worst.max(rel_norm_error(&an, &fd));
            points += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = points >= 200 && worst < 1e-5 && elapsed.as_secs_f64() < 60.0;
    report(
        2,
        "gradient correctness",
        pass,
        &format!("{points} points, worst relative error {worst:.2e}, {elapsed:.2?}"),
    );
}

/// Rulebook whose rules below `lead` are satisfied and whose remaining rules
/// have unit violation with mutually orthogonal unit gradients. The
/// dominance ratio then has the closed form sqrt(sum lambda^-2k).
fn orthogonal_gradient_rulebook(lead: usize) -> Rulebook<f64> {
    let n = 4;
    let dim = 4;
    let rules: Vec<Arc<dyn Rule<f64>>> = (0..n)
        .map(|i| {
            let satisfied = i < lead;
            Arc::new(FnRule::new(
                format!("axis{i}"),
                move |_: &[f64]| if satisfied { 0.0 } else { 1.0 },
                move |x: &[f64]| {
                    let mut g = vec![0.0; x.len()];
                    if !satisfied {
                        g[i] = 1.0;
                    }
                    g
                },
            )) as Arc<dyn Rule<f64>>
        })
        .collect();
    Rulebook::new(rules, dim).unwrap()
}

#[test]
fn criterion_3_dominance_decay() {
    let lambdas = [1.0, 10.0, 100.0, 1000.0];
    let mut all_decreasing = true;
    let mut band_ok = true;
    let mut worst_ratio = (0.1f64, 0.1f64);
    for lead in 0..3 {
        let rb = orthogonal_gradient_rulebook(lead);
        for seed in 0..4 {
            let x = random_decision(&vec![(-1.0, 1.0); 4], 0xD0_0D + seed);
            let ratios: Vec<f64> = lambdas
                .iter()
                .map(|&l| dominance_ratio(&rb, x.values(), l, EPS_RANK).unwrap())
                .collect();
            if !ratios.windows(2).all(|w| w[1] < w[0]) {
                all_decreasing = false;
            }
            for w in ratios.windows(2) {
                let decade = w[1] / w[0];
                if !(0.02..=0.5).contains(&decade) {
                    band_ok = false;
                }
                if (decade - 0.1).abs() > (worst_ratio.0 - 0.1).abs() {
                    worst_ratio = (decade, w[0]);
                }
            }
        }
    }
    let pass = all_decreasing && band_ok;
    report(
        3,
        "dominance ratio decay",
        pass,
        &format!(
            "strictly decreasing: {all_decreasing}, decade factors within [0.02, 0.5]: {band_ok} (extreme factor {:.4})",
            worst_ratio.0
        ),
    );
}

fn catalog_schedule() -> LambdaSchedule<f64> {
    LambdaSchedule::new(0.5, 2.0, 1e8).unwrap()
}

#[test]
fn criterion_4_minimum_rank_attainment() {
    let schedule = catalog_schedule();
    let seeds: Vec<u64> = (0..5).collect();
    let mut runs = 0usize;
    let mut hits = 0usize;
    let mut bad_failures = Vec::new();
    for p in catalog::<f64>() {
        let oracle = grid_oracle(&p.rulebook, &p.bounds, p.grid_points_per_dim).unwrap();
        let cfg = SolverConfig {
            bounds: Some(p.bounds.clone()),
            ..Default::default()
        };
        for &seed in &seeds {
            let x0 = random_decision(&p.bounds, seed);
            for (name, trace) in [
                ("central_path", central_path_solve(&p.rulebook, &x0, &schedule, &cfg).unwrap()),
                ("timescale", timescale_solve(&p.rulebook, &x0, &schedule, &cfg).unwrap()),
            ] {
                runs += 1;
                if trace.final_rank.value == oracle.min_rank {
                    hits += 1;
                } else if trace.converged {
                    // a wrong-rank convergence is disqualifying; an
                    // iteration-limit exit is a tolerated failure
                    bad_failures.push(format!("{}/{name}/seed{seed}", p.id));
                }
            }
        }
    }
    let rate = hits as f64 / runs as f64;
    let pass = rate >= 0.95 && bad_failures.is_empty();
    report(
        4,
        "minimum-rank attainment",
        pass,
        &format!(
            "{hits}/{runs} runs at oracle rank ({:.1}%), wrong-rank convergences: {:?}",
            100.0 * rate,
            bad_failures
        ),
    );
}

#[test]
fn criterion_5_complexity_contrast() {
    let schedule = catalog_schedule();
    let mut reductions = Vec::new();
    let mut violators = Vec::new();
    for p in catalog::<f64>() {
        let cfg = SolverConfig {
            bounds: Some(p.bounds.clone()),
            ..Default::default()
        };
        let x0 = random_decision(&p.bounds, 42);
        let exact = central_path_solve(&p.rulebook, &x0, &schedule, &cfg).unwrap();
        let separated = timescale_solve(&p.rulebook, &x0, &schedule, &cfg).unwrap();
        if separated.total_inner_steps > exact.total_inner_steps {
            violators.push(p.id);
        }
        reductions.push(
            exact.total_inner_steps as f64 / (separated.total_inner_steps.max(1)) as f64,
        );
    }
    reductions.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = reductions[reductions.len() / 2];
    let pass = violators.is_empty() && median >= 3.0;
    report(
        5,
        "complexity contrast",
        pass,
        &format!(
            "timescale exceeded central path on: {violators:?}; median step reduction {median:.1}x"
        ),
    );
}

fn run_scenario(name: &str, solver: SolverKind) -> SimLog<f64> {
    let scenario = build_scenario::<f64>(name).unwrap();
    let cfg = SolverConfig {
        max_outer_iters: 80,
        ..Default::default()
    };
    let start = Instant::now();
    let log = receding_horizon_run(&scenario, solver, &cfg, &scenario_schedule(), false).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "{name}/{}: run took {elapsed:.1}s", solver.name());
    log
}

fn in_own_lane(log: &SimLog<f64>) -> bool {
    let s = log.executed_states.last().unwrap();
    s.y.abs() <= 1.75
}

#[test]
fn criterion_6a_jaywalker_feasible() {
    let mut pass = true;
    let mut notes = Vec::new();
    for solver in [SolverKind::CentralPath, SolverKind::Timescale] {
        let log = run_scenario("jaywalker_feasible", solver);
        let stopped = log.executed_states.last().unwrap().v <= 0.5;
        let ok = stopped
            && in_own_lane(&log)
            && log.final_rank() == 4
            && log.max_rule_violation(0) <= EPS_RANK;
        pass &= ok;
        notes.push(format!(
            "{}: stopped={stopped}, in_lane={}, rank={}, max_collision={:.1e}",
            solver.name(),
            in_own_lane(&log),
            log.final_rank(),
            log.max_rule_violation(0)
        ));
    }
    report(6, "scenario 6a jaywalker_feasible", pass, &notes.join("; "));
}

#[test]
fn criterion_6b_jaywalker_infeasible() {
    let mut pass = true;
    let mut notes = Vec::new();
    for solver in [SolverKind::CentralPath, SolverKind::Timescale] {
        let log = run_scenario("jaywalker_infeasible", solver);
        let entered_opposing = log.executed_states.iter().any(|s| s.y > 1.75);
        let ok = entered_opposing
            && in_own_lane(&log)
            && log.max_rule_violation(0) <= EPS_RANK
            && log.final_rank() == 4;
        pass &= ok;
        notes.push(format!(
            "{}: opposing_pass={entered_opposing}, returned={}, rank={}, max_collision={:.1e}",
            solver.name(),
            in_own_lane(&log),
            log.final_rank(),
            log.max_rule_violation(0)
        ));
    }
    report(6, "scenario 6b jaywalker_infeasible", pass, &notes.join("; "));
}

#[test]
fn criterion_6c_post_overtake() {
    let mut pass = true;
    let mut notes = Vec::new();
    for solver in [SolverKind::CentralPath, SolverKind::Timescale] {
        let log = run_scenario("post_overtake", solver);
        let drivable_final = log.final_violations()[1];
        pass &= drivable_final <= EPS_RANK;
        notes.push(format!("{}: final drivable {:.1e}", solver.name(), drivable_final));
    }
    let dws = run_scenario("post_overtake", SolverKind::DwsAscent);
    let dws_drivable = dws.final_violations()[1];
    pass &= dws_drivable > EPS_RANK;
    notes.push(format!("dws_ascent: final drivable {dws_drivable:.1e}"));
    report(6, "scenario 6c post_overtake", pass, &notes.join("; "));
}

#[test]
fn criterion_6d_aggressiveness_ordering() {
    let mut pass = true;
    let mut notes = Vec::new();
    for name in ["jaywalker_feasible", "jaywalker_infeasible"] {
        let exact = run_scenario(name, SolverKind::CentralPath);
        let separated = run_scenario(name, SolverKind::Timescale);
        let (ce, cs) = (
            exact.min_clearance.expect("obstacle visible"),
            separated.min_clearance.expect("obstacle visible"),
        );
        pass &= ce <= cs;
        notes.push(format!("{name}: clearance central_path {ce:.2e} vs timescale {cs:.2e}"));
    }
    report(6, "scenario 6d aggressiveness ordering", pass, &notes.join("; "));
}

#[test]
fn criterion_7_dws_counterexample() {
    // two decisions over four rules: x trades a much larger violation of the
    // least important rule for a smaller violation of a mid-priority rule
    let vx = ViolationVector::new(vec![0.0, 0.0, 0.05, 0.45]);
    let vy = ViolationVector::new(vec![0.0, 0.0, 0.10, 0.01]);
    let lex = lex_compare(&vx, &vy, 0.0).unwrap();

    let robust = RobustnessConfig::new(-1.0, 1.0, 0.5);
    let rho_x = robustness_from_violations(&vx, &robust);
    let rho_y = robustness_from_violations(&vy, &robust);
    let params = DwsParams::new(1.0, 25.0, 4).unwrap();
    let rx = dws_reward(&rho_x, &params).unwrap();
    let ry = dws_reward(&rho_y, &params).unwrap();

    let pass = lex == Ordering::Less && rx < ry;
    report(
        7,
        "dws counterexample",
        pass,
        &format!("lex prefers x ({lex:?}) yet reward(x)={rx:.4} < reward(y)={ry:.4}"),
    );
}

#[test]
fn criterion_8_landscape_sweep() {
    let start = Instant::now();
    let (world, state, dt) = sweep_world::<f64>();
    let spec = SweepSpec::default(); // 200x200, lambdas 0.5 and 34
    let grids = landscape_sweep(world, state, dt, &spec).unwrap();
    let elapsed = start.elapsed();
    let gap = min_cross_class_gap(&grids[0], 3);
    let near_equal = gap.map(|g| g < 1e-2).unwrap_or(false);
    let dominated = rank0_dominates(&grids[1]);
    let pass = near_equal && dominated && elapsed.as_secs_f64() < 30.0;
    report(
        8,
        "landscape sweep",
        pass,
        &format!(
            "cross-class gap at lambda=0.5: {gap:?}, rank-0 dominance at lambda=34: {dominated}, {elapsed:.2?}"
        ),
    );
}
