//! Closed-loop scenario construction and receding-horizon planning runs.
//!
//! Three built-in scenarios exercise the planner: a jaywalker that appears
//! too late to stop for, one that appears with ample stopping distance, and
//! a start inside the opposing lane after an overtake. A run replans a
//! 3-step horizon at every control step, applies the first control, and
//! advances the world.

use std::sync::Arc;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::rulebook::Decision;
use crate::rules_av::{AvWorld, Obstacle, RoadModel, RuleScales};
use crate::scalar::{distance, real, Real};
use crate::scalarization::{dws_reward, dws_reward_gradient, DwsParams, LambdaSchedule};
use crate::solvers::{
    central_path_solve, preemptive_solve, solve_inner, Objective, SolverConfig,
};
use crate::vehicle::{step_dynamics, VehicleParams, VehicleState};

/// An obstacle that becomes visible once the ego is within `appear_gap`
/// meters (longitudinally) of its center.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleTrigger<T: Real> {
    pub obstacle: Obstacle<T>,
    pub appear_gap: T,
}

/// A complete closed-loop planning task.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T: Real> {
    pub name: String,
    pub road: RoadModel<T>,
    pub scales: RuleScales<T>,
    pub vehicle: VehicleParams<T>,
    pub initial_state: VehicleState<T>,
    pub goal: (T, T),
    pub static_obstacles: Vec<Obstacle<T>>,
    pub trigger: Option<ObstacleTrigger<T>>,
    pub dt: T,
    pub horizon: usize,
    pub max_steps: usize,
    pub goal_radius: T,
    /// Per-rule robustness divisors for the DWS baseline.
    pub dws_scales: [T; 5],
    pub dws_params: DwsParams<T>,
}

pub const SCENARIO_NAMES: [&str; 3] =
    ["jaywalker_infeasible", "jaywalker_feasible", "post_overtake"];

/// Builds one of the named scenarios with its default geometry.
pub fn build_scenario<T: Real>(name: &str) -> Result<Scenario<T>> {
    let road = RoadModel::default();
    let base = Scenario {
        name: name.to_string(),
        road,
        scales: RuleScales::default(),
        vehicle: VehicleParams::default(),
        initial_state: VehicleState::new(T::zero(), T::zero(), T::zero(), real(13.89)),
        goal: (real(80.0), T::zero()),
        static_obstacles: Vec::new(),
        trigger: None,
        dt: real(0.5),
        horizon: 3,
        max_steps: 60,
        goal_radius: real(2.0),
        dws_scales: [real(10.0), real(10.0), real(10.0), real(40.0), real(100.0)],
        dws_params: DwsParams {
            a: T::one(),
            c: real(25.0),
            n: 5,
        },
    };
    // pedestrian blocking the ego lane, slightly right of center so the
    // collision gradient breaks the left/right symmetry
    let pedestrian = Obstacle {
        x: real(30.0),
        y: real(-0.2),
        radius: real(1.75),
    };
    match name {
        // 50 km/h with ~16 m notice: under the discrete dynamics full
        // braking covers (13.89+9.89+5.89+1.89)*0.5 = 15.78 m, which puts
        // the front footprint disc inside the pedestrian disc, so stopping
        // cannot avoid contact and the ego must swerve
        "jaywalker_infeasible" => Ok(Scenario {
            trigger: Some(ObstacleTrigger {
                obstacle: pedestrian,
                appear_gap: real(16.5),
            }),
            ..base
        }),
        // 18 km/h needs 1.56 m to stop; the pedestrian is placed close to
        // the start so it appears before the ego can build up speed, and
        // dead-center in the lane so no swerve direction is preferred
        "jaywalker_feasible" => Ok(Scenario {
            initial_state: VehicleState::new(T::zero(), T::zero(), T::zero(), real(5.0)),
            trigger: Some(ObstacleTrigger {
                obstacle: Obstacle {
                    x: real(12.0),
                    y: T::zero(),
                    radius: real(1.75),
                },
                appear_gap: real(10.0),
            }),
            ..base
        }),
        // start on the opposing-lane centerline, nothing else on the road
        "post_overtake" => Ok(Scenario {
            initial_state: VehicleState::new(T::zero(), real(3.5), T::zero(), real(10.0)),
            ..base
        }),
        other => Err(Error::RejectedInput(format!(
            "unknown scenario '{other}' (expected one of {SCENARIO_NAMES:?})"
        ))),
    }
}

/// Planner selection for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    CentralPath,
    Timescale,
    Preemptive,
    DwsAscent,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [
        SolverKind::CentralPath,
        SolverKind::Timescale,
        SolverKind::Preemptive,
        SolverKind::DwsAscent,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::CentralPath => "central_path",
            SolverKind::Timescale => "timescale",
            SolverKind::Preemptive => "preemptive",
            SolverKind::DwsAscent => "dws_ascent",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "central_path" => Ok(SolverKind::CentralPath),
            "timescale" => Ok(SolverKind::Timescale),
            "preemptive" => Ok(SolverKind::Preemptive),
            "dws_ascent" => Ok(SolverKind::DwsAscent),
            other => Err(Error::RejectedInput(format!(
                "unknown solver '{other}' (expected central_path, timescale, preemptive, or dws_ascent)"
            ))),
        }
    }
}

/// Summary of one replan.
#[derive(Debug, Clone)]
pub struct ReplanRecord<T: Real> {
    pub step: usize,
    pub planned_decision: Vec<T>,
    pub planned_rank: usize,
    pub inner_steps: usize,
    pub converged: bool,
}

/// Closed-loop log of one run.
#[derive(Debug, Clone)]
pub struct SimLog<T: Real> {
    pub scenario: String,
    pub solver: SolverKind,
    pub executed_states: Vec<VehicleState<T>>,
    pub applied_controls: Vec<(T, T)>,
    /// Instantaneous per-rule violations at each executed state (progress
    /// reported as the scaled remaining distance).
    pub step_violations: Vec<[T; 5]>,
    /// Rank of the instantaneous violation vector at each executed state.
    pub step_ranks: Vec<usize>,
    pub replans: Vec<ReplanRecord<T>>,
    pub total_inner_steps: usize,
    /// Smallest executed gap to the triggered obstacle (surface to footprint
    /// surface), once it is visible.
    pub min_clearance: Option<T>,
    pub reached_goal: bool,
    pub wall_time_ms: f64,
}

impl<T: Real> SimLog<T> {
    pub fn final_rank(&self) -> usize {
        *self.step_ranks.last().expect("log has at least one state")
    }

    pub fn final_violations(&self) -> &[T; 5] {
        self.step_violations.last().expect("log has at least one state")
    }

    /// Per-rule violation sums over the executed trajectory.
    pub fn cumulative_violations(&self) -> [T; 5] {
        let mut acc = [T::zero(); 5];
        for v in &self.step_violations {
            for i in 0..5 {
                acc[i] = acc[i] + v[i];
            }
        }
        acc
    }

    pub fn max_rule_violation(&self, rule: usize) -> T {
        self.step_violations
            .iter()
            .map(|v| v[rule])
            .fold(T::zero(), |a, b| a.max(b))
    }
}

fn world_at<T: Real>(scenario: &Scenario<T>, obstacle_visible: bool) -> Arc<AvWorld<T>> {
    let mut obstacles = scenario.static_obstacles.clone();
    if obstacle_visible {
        if let Some(t) = &scenario.trigger {
            obstacles.push(t.obstacle);
        }
    }
    Arc::new(AvWorld {
        road: scenario.road.clone(),
        obstacles,
        goal: scenario.goal,
        scales: scenario.scales.clone(),
        vehicle: scenario.vehicle.clone(),
    })
}

/// Negated DWS reward over the horizon decision, with smooth robustness
/// `rho_i = -violation_i / scale_i` so the ascent direction stays defined
/// everywhere along the rollout.
struct DwsObjective<'a, T: Real> {
    rulebook: &'a crate::rulebook::Rulebook<T>,
    scales: &'a [T; 5],
    params: &'a DwsParams<T>,
}

impl<T: Real> Objective<T> for DwsObjective<'_, T> {
    fn value(&self, x: &[T]) -> T {
        let rho: Vec<T> = (0..5)
            .map(|i| -self.rulebook.rule(i).evaluate(x) / self.scales[i])
            .collect();
        -dws_reward(&rho, self.params).expect("five rules")
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        let rho: Vec<T> = (0..5)
            .map(|i| -self.rulebook.rule(i).evaluate(x) / self.scales[i])
            .collect();
        let dr = dws_reward_gradient(&rho, self.params).expect("five rules");
        let mut g = vec![T::zero(); x.len()];
        for i in 0..5 {
            let coef = dr[i] / self.scales[i];
            for (gk, rk) in g.iter_mut().zip(self.rulebook.rule(i).gradient(x)) {
                *gk = *gk + coef * rk;
            }
        }
        g
    }
}

fn clearance<T: Real>(state: &VehicleState<T>, ob: &Obstacle<T>, params: &VehicleParams<T>) -> T {
    let off = params.length / real(4.0);
    let half_w = params.width / real(2.0);
    let disc_r = (off * off + half_w * half_w).sqrt();
    let (sp, cp) = (state.psi.sin(), state.psi.cos());
    let mut best = T::infinity();
    for &o in &[off, -off] {
        let px = state.x + o * cp;
        let py = state.y + o * sp;
        let d = ((px - ob.x) * (px - ob.x) + (py - ob.y) * (py - ob.y)).sqrt();
        best = best.min(d - disc_r - ob.radius);
    }
    best
}

/// Reference lambda schedule for scenario runs. The sub-1 start lets the
/// progress rule shape the early continuation (which selects the forward
/// swerve basin rather than a pure avoidance maneuver); the collision rule
/// stays effectively dominant throughout because of its large severity
/// scale.
pub fn scenario_schedule<T: Real>() -> LambdaSchedule<T> {
    LambdaSchedule::new(real(0.5), real(2.0), real(1e6)).expect("valid constants")
}

/// Runs receding-horizon planning with the chosen solver. The lambda
/// schedule restarts at every replan, and plans start cold (all-zero
/// controls) unless `warm_start` shifts the previous plan forward.
pub fn receding_horizon_run<T: Real>(
    scenario: &Scenario<T>,
    solver: SolverKind,
    cfg: &SolverConfig<T>,
    schedule: &LambdaSchedule<T>,
    warm_start: bool,
) -> Result<SimLog<T>> {
    cfg.validate()?;
    scenario.vehicle.validate()?;
    // keep decisions inside the actuation box unless the caller already set
    // bounds of their own
    let mut cfg = cfg.clone();
    if cfg.bounds.is_none() {
        let per_step = [
            (scenario.vehicle.accel_min, scenario.vehicle.accel_max),
            (-scenario.vehicle.steer_max, scenario.vehicle.steer_max),
        ];
        cfg.bounds = Some(
            per_step
                .iter()
                .cycle()
                .take(2 * scenario.horizon)
                .copied()
                .collect(),
        );
    }
    let cfg = &cfg;
    let start = Instant::now();
    let mut state = scenario.initial_state;
    let mut visible = false;
    let mut executed_states = vec![state];
    let mut applied_controls = Vec::new();
    let mut step_violations = Vec::new();
    let mut step_ranks = Vec::new();
    let mut replans = Vec::new();
    let mut total_inner = 0;
    let mut min_clearance: Option<T> = None;
    let mut reached_goal = false;
    let mut previous_plan: Option<Vec<T>> = None;

    let log_state = |world: &AvWorld<T>, s: &VehicleState<T>, eps: T| -> ([T; 5], usize) {
        let v = world.instantaneous_violations(s);
        let rank = v.iter().position(|&vi| vi > eps).unwrap_or(5);
        (v, rank)
    };

    // initial-state bookkeeping uses the world as first seen
    {
        let w0 = world_at(scenario, visible);
        let (v, r) = log_state(&w0, &state, cfg.eps_rank);
        step_violations.push(v);
        step_ranks.push(r);
    }

    for step in 0..scenario.max_steps {
        if let Some(t) = &scenario.trigger {
            if !visible && t.obstacle.x - state.x <= t.appear_gap {
                visible = true;
            }
        }
        let world = world_at(scenario, visible);
        let rulebook =
            crate::rules_av::build_av_rulebook(world.clone(), state, scenario.dt, scenario.horizon);

        let dim = 2 * scenario.horizon;
        let x0_vals = match (&previous_plan, warm_start) {
            (Some(p), true) => {
                // shift one step forward, repeating the last control
                let mut shifted = p[2..].to_vec();
                shifted.extend_from_slice(&p[p.len() - 2..]);
                shifted
            }
            _ => vec![T::zero(); dim],
        };
        let x0 = Decision::new(x0_vals)?;

        let (decision, planned_rank, inner_steps, converged) = match solver {
            SolverKind::CentralPath => {
                let t = central_path_solve(&rulebook, &x0, schedule, cfg)?;
                (
                    t.final_decision.values().to_vec(),
                    t.final_rank.value,
                    t.total_inner_steps,
                    t.converged,
                )
            }
            SolverKind::Timescale => {
                let t = crate::solvers::timescale_solve(&rulebook, &x0, schedule, cfg)?;
                (
                    t.final_decision.values().to_vec(),
                    t.final_rank.value,
                    t.total_inner_steps,
                    t.converged,
                )
            }
            SolverKind::Preemptive => {
                let r = preemptive_solve(&rulebook, &x0, cfg, real(1e8))?;
                let rank = rulebook.rank(r.decision.values(), cfg.eps_rank)?.value;
                (
                    r.decision.values().to_vec(),
                    rank,
                    r.total_inner_steps,
                    true,
                )
            }
            SolverKind::DwsAscent => {
                let obj = DwsObjective {
                    rulebook: &rulebook,
                    scales: &scenario.dws_scales,
                    params: &scenario.dws_params,
                };
                let r = solve_inner(&obj, x0.values(), cfg)?;
                let rank = rulebook.rank(&r.x, cfg.eps_rank)?.value;
                (r.x, rank, r.steps, r.converged)
            }
        };
        total_inner += inner_steps;
        replans.push(ReplanRecord {
            step,
            planned_decision: decision.clone(),
            planned_rank,
            inner_steps,
            converged,
        });

        let control = crate::vehicle::Control {
            accel: decision[0],
            steer: decision[1],
        };
        state = step_dynamics(&state, &control, scenario.dt, &scenario.vehicle).0;
        applied_controls.push((decision[0], decision[1]));
        previous_plan = Some(decision);
        executed_states.push(state);

        let (v, r) = log_state(&world, &state, cfg.eps_rank);
        step_violations.push(v);
        step_ranks.push(r);

        if visible {
            if let Some(t) = &scenario.trigger {
                let c = clearance(&state, &t.obstacle, &scenario.vehicle);
                min_clearance = Some(match min_clearance {
                    Some(m) => m.min(c),
                    None => c,
                });
            }
        }

        let gd = distance(
            &[state.x, state.y],
            &[scenario.goal.0, scenario.goal.1],
        );
        if gd <= scenario.goal_radius {
            reached_goal = true;
            break;
        }
    }

    Ok(SimLog {
        scenario: scenario.name.clone(),
        solver,
        executed_states,
        applied_controls,
        step_violations,
        step_ranks,
        replans,
        total_inner_steps: total_inner,
        min_clearance,
        reached_goal,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// One row of a multi-solver comparison.
#[derive(Debug, Clone)]
pub struct ComparisonRow<T: Real> {
    pub solver: SolverKind,
    pub final_rank: usize,
    pub cumulative_violations: [T; 5],
    pub total_inner_steps: usize,
    pub min_clearance: Option<T>,
    pub reached_goal: bool,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport<T: Real> {
    pub scenario: String,
    pub rows: Vec<ComparisonRow<T>>,
    pub rank_disagreement: bool,
    pub logs: Vec<SimLog<T>>,
}

/// Runs each solver on the scenario and tabulates the results.
pub fn compare_solvers<T: Real>(
    scenario: &Scenario<T>,
    solvers: &[SolverKind],
    cfg: &SolverConfig<T>,
    schedule: &LambdaSchedule<T>,
) -> Result<ComparisonReport<T>> {
    if solvers.len() < 2 {
        return Err(Error::RejectedInput(
            "comparison needs at least two solvers".into(),
        ));
    }
    let mut rows = Vec::new();
    let mut logs = Vec::new();
    for &solver in solvers {
        let log = receding_horizon_run(scenario, solver, cfg, schedule, false)?;
        rows.push(ComparisonRow {
            solver,
            final_rank: log.final_rank(),
            cumulative_violations: log.cumulative_violations(),
            total_inner_steps: log.total_inner_steps,
            min_clearance: log.min_clearance,
            reached_goal: log.reached_goal,
            wall_time_ms: log.wall_time_ms,
        });
        logs.push(log);
    }
    let rank_disagreement = rows.windows(2).any(|w| w[0].final_rank != w[1].final_rank);
    Ok(ComparisonReport {
        scenario: scenario.name.clone(),
        rows,
        rank_disagreement,
        logs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SolverConfig<f64> {
        SolverConfig {
            max_outer_iters: 80,
            ..Default::default()
        }
    }

    fn schedule() -> LambdaSchedule<f64> {
        scenario_schedule()
    }

    #[test]
    fn scenario_construction() {
        let s = build_scenario::<f64>("jaywalker_infeasible").unwrap();
        assert!((s.initial_state.v - 13.89).abs() < 1e-12);
        let f = build_scenario::<f64>("jaywalker_feasible").unwrap();
        assert_eq!(f.initial_state.v, 5.0);
        let p = build_scenario::<f64>("post_overtake").unwrap();
        assert_eq!(p.initial_state.y, 3.5);
        assert!(p.trigger.is_none() && p.static_obstacles.is_empty());
        assert!(build_scenario::<f64>("nope").is_err());
    }

    #[test]
    fn solver_kind_parsing() {
        assert_eq!(SolverKind::parse("timescale").unwrap(), SolverKind::Timescale);
        assert!(SolverKind::parse("sgd").is_err());
    }

    #[test]
    fn closed_loop_state_continuity() {
        let s = build_scenario::<f64>("jaywalker_feasible").unwrap();
        let log = receding_horizon_run(&s, SolverKind::Timescale, &cfg(), &schedule(), false)
            .unwrap();
        assert_eq!(log.executed_states.len(), log.applied_controls.len() + 1);
        for (i, &(a, d)) in log.applied_controls.iter().enumerate() {
            let (next, _) = step_dynamics(
                &log.executed_states[i],
                &crate::vehicle::Control { accel: a, steer: d },
                s.dt,
                &s.vehicle,
            );
            assert_eq!(next, log.executed_states[i + 1]);
        }
    }

    #[test]
    fn determinism() {
        let s = build_scenario::<f64>("post_overtake").unwrap();
        let a = receding_horizon_run(&s, SolverKind::CentralPath, &cfg(), &schedule(), false)
            .unwrap();
        let b = receding_horizon_run(&s, SolverKind::CentralPath, &cfg(), &schedule(), false)
            .unwrap();
        assert_eq!(a.executed_states, b.executed_states);
        assert_eq!(a.total_inner_steps, b.total_inner_steps);
    }

    #[test]
    fn feasible_jaywalker_stops_in_lane() {
        let s = build_scenario::<f64>("jaywalker_feasible").unwrap();
        let log = receding_horizon_run(&s, SolverKind::CentralPath, &cfg(), &schedule(), false)
            .unwrap();
        // never reaches the goal: it stops for the pedestrian
        assert!(!log.reached_goal);
        let last = log.executed_states.last().unwrap();
        assert!(last.v < 1e-6, "v = {}", last.v);
        assert!(last.x < s.trigger.as_ref().unwrap().obstacle.x);
        assert!(log.max_rule_violation(0) <= 1e-9, "collision along run");
        assert_eq!(log.final_rank(), 4, "violations {:?}", log.final_violations());
    }

    #[test]
    fn compare_requires_two_solvers() {
        let s = build_scenario::<f64>("post_overtake").unwrap();
        assert!(compare_solvers(&s, &[SolverKind::CentralPath], &cfg(), &schedule()).is_err());
    }
}
