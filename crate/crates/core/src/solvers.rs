//! Gradient-based solvers for rulebook optimization.
//!
//! The inner solver is steepest descent with a backtracking Armijo line
//! search (the trial step also grows after accepted steps, so badly scaled
//! objectives still make progress). On top of it sit the exact central-path
//! algorithm, which converges to a stationary point at every lambda before
//! updating it, and the time-scale separated algorithm, which interleaves a
//! single descent step with each lambda update. A preemptive baseline and a
//! brute-force grid oracle provide ground truth for tests.

use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::rulebook::{lex_compare, Decision, Rank, Rulebook, ViolationVector};
use crate::scalar::{distance, norm, real, Real};
use crate::scalarization::LambdaSchedule;

/// A differentiable scalar objective over decision vectors.
pub trait Objective<T: Real> {
    fn value(&self, x: &[T]) -> T;
    fn gradient(&self, x: &[T]) -> Vec<T>;

    /// Scale applied to the gradient-norm tolerance. Objectives whose
    /// dominant active term carries a small weight (e.g. the normalized
    /// rulebook utility at large lambda) override this so convergence
    /// pressure stays meaningful.
    fn tolerance_scale(&self, _x: &[T]) -> T {
        T::one()
    }
}

impl<T: Real, F, G> Objective<T> for (F, G)
where
    F: Fn(&[T]) -> T,
    G: Fn(&[T]) -> Vec<T>,
{
    fn value(&self, x: &[T]) -> T {
        (self.0)(x)
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        (self.1)(x)
    }
}

/// Solver configuration shared by the inner solver and both outer loops.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T: Real> {
    /// Gradient-norm stop on the (scale-adjusted) objective.
    pub inner_tol: T,
    pub max_inner_iters: usize,
    pub max_outer_iters: usize,
    pub armijo_c1: T,
    pub backtrack_factor: T,
    pub initial_step: T,
    pub max_backtracks: usize,
    pub seed: u64,
    /// Lambda updates per solver step (time-scale separated algorithm only).
    pub timescale_ratio: usize,
    /// Violation threshold below which a rule counts as satisfied.
    pub eps_rank: T,
    /// Optional per-coordinate box; when set, descent iterates are projected
    /// onto it (keeps decisions inside actuation limits instead of wandering
    /// along the clamped-dynamics plateau).
    pub bounds: Option<Vec<(T, T)>>,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            inner_tol: real(1e-7),
            max_inner_iters: 2_000,
            max_outer_iters: 200,
            armijo_c1: real(1e-4),
            backtrack_factor: real(0.5),
            initial_step: T::one(),
            max_backtracks: 40,
            seed: 0,
            timescale_ratio: 1,
            eps_rank: real(1e-9),
            bounds: None,
        }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.inner_tol > T::zero()) {
            return Err(Error::RejectedInput("inner_tol must be positive".into()));
        }
        if !(self.armijo_c1 > T::zero() && self.armijo_c1 < T::one()) {
            return Err(Error::RejectedInput("armijo_c1 must lie in (0, 1)".into()));
        }
        if !(self.backtrack_factor > T::zero() && self.backtrack_factor < T::one()) {
            return Err(Error::RejectedInput(
                "backtrack_factor must lie in (0, 1)".into(),
            ));
        }
        if self.timescale_ratio < 1 {
            return Err(Error::RejectedInput(
                "timescale_ratio must be at least 1".into(),
            ));
        }
        if !(self.initial_step > T::zero()) {
            return Err(Error::RejectedInput("initial_step must be positive".into()));
        }
        if let Some(bounds) = &self.bounds {
            if bounds.iter().any(|&(lo, hi)| !(lo < hi)) {
                return Err(Error::RejectedInput(
                    "each bound must satisfy lo < hi".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Outcome of a single descent step.
#[derive(Debug, Clone)]
pub struct StepOutcome<T: Real> {
    pub x: Vec<T>,
    pub value: T,
    /// Set when the line search found no decrease; `x` is then unchanged.
    pub stalled: bool,
    /// Accepted step length (0 when stalled or already stationary).
    pub accepted_step: T,
}

const TRIAL_GROWTH: f64 = 4.0;
const TRIAL_MAX: f64 = 1e30;

fn project<T: Real>(x: &mut [T], bounds: &Option<Vec<(T, T)>>) {
    if let Some(bounds) = bounds {
        for (xi, &(lo, hi)) in x.iter_mut().zip(bounds) {
            *xi = (*xi).max(lo).min(hi);
        }
    }
}

/// Norm of the gradient with components pointing out of an active bound
/// zeroed; this is the stationarity measure for box-constrained descent.
/// Without bounds it reduces to the plain gradient norm.
fn projected_gradient_norm<T: Real>(x: &[T], g: &[T], bounds: &Option<Vec<(T, T)>>) -> T {
    match bounds {
        None => norm(g),
        Some(bounds) => {
            let sum = x
                .iter()
                .zip(g)
                .zip(bounds)
                .map(|((&xi, &gi), &(lo, hi))| {
                    let blocked = (xi <= lo && gi > T::zero()) || (xi >= hi && gi < T::zero());
                    if blocked {
                        T::zero()
                    } else {
                        gi * gi
                    }
                })
                .sum::<T>();
            sum.sqrt()
        }
    }
}

fn armijo_search<T: Real>(
    objective: &dyn Objective<T>,
    x: &[T],
    f: T,
    g: &[T],
    gnorm_sq: T,
    cfg: &SolverConfig<T>,
    trial: T,
) -> Option<(Vec<T>, T, T)> {
    let mut alpha = trial;
    for _ in 0..=cfg.max_backtracks {
        let mut candidate: Vec<T> =
            x.iter().zip(g).map(|(&xi, &gi)| xi - alpha * gi).collect();
        project(&mut candidate, &cfg.bounds);
        let fc = objective.value(&candidate);
        if fc.is_finite() && fc <= f - cfg.armijo_c1 * alpha * gnorm_sq {
            return Some((candidate, fc, alpha));
        }
        alpha = alpha * cfg.backtrack_factor;
    }
    None
}

/// One steepest-descent step with backtracking Armijo line search. The
/// returned objective value never exceeds the input value; when no decrease
/// is found the decision is returned unchanged with the stall flag set.
pub fn gradient_step<T: Real>(
    objective: &dyn Objective<T>,
    x: &[T],
    cfg: &SolverConfig<T>,
) -> Result<StepOutcome<T>> {
    gradient_step_with_trial(objective, x, cfg, None)
}

/// Scale-invariant fallback trial: a first step of length `initial_step`
/// regardless of the gradient magnitude. Without this, a solve entered near
/// a shifted optimum sees only float-noise decreases at unit alpha and gives
/// up before tracking the move.
fn reset_trial<T: Real>(cfg: &SolverConfig<T>, gnorm: T) -> T {
    (cfg.initial_step / gnorm.max(T::min_positive_value())).min(real(TRIAL_MAX))
}

fn gradient_step_with_trial<T: Real>(
    objective: &dyn Objective<T>,
    x: &[T],
    cfg: &SolverConfig<T>,
    trial: Option<T>,
) -> Result<StepOutcome<T>> {
    let f = objective.value(x);
    if !f.is_finite() {
        return Err(Error::Diverged { steps: 0 });
    }
    let g = objective.gradient(x);
    let gnorm = projected_gradient_norm(x, &g, &cfg.bounds);
    let gnorm_sq = gnorm * gnorm;
    if gnorm_sq == T::zero() {
        return Ok(StepOutcome {
            x: x.to_vec(),
            value: f,
            stalled: false,
            accepted_step: T::zero(),
        });
    }
    let reset = reset_trial(cfg, gnorm_sq.sqrt());
    let found = match trial {
        Some(t) => {
            armijo_search(objective, x, f, &g, gnorm_sq, cfg, t)
                .or_else(|| armijo_search(objective, x, f, &g, gnorm_sq, cfg, reset))
        }
        None => armijo_search(objective, x, f, &g, gnorm_sq, cfg, reset),
    };
    match found {
        Some((x1, f1, alpha)) => Ok(StepOutcome {
            x: x1,
            value: f1,
            stalled: false,
            accepted_step: alpha,
        }),
        None => Ok(StepOutcome {
            x: x.to_vec(),
            value: f,
            stalled: true,
            accepted_step: T::zero(),
        }),
    }
}

/// Result of an inner solve.
#[derive(Debug, Clone)]
pub struct InnerResult<T: Real> {
    pub x: Vec<T>,
    pub value: T,
    pub gradient_norm: T,
    pub steps: usize,
    /// True when the gradient-norm stop was reached (as opposed to the
    /// iteration limit or a stalled line search).
    pub converged: bool,
}

/// Iterates descent steps until the gradient norm falls below
/// `inner_tol * tolerance_scale` or the iteration budget is exhausted.
pub fn solve_inner<T: Real>(
    objective: &dyn Objective<T>,
    x0: &[T],
    cfg: &SolverConfig<T>,
) -> Result<InnerResult<T>> {
    let mut x = x0.to_vec();
    let mut trial: Option<T> = None;
    let mut steps = 0;
    loop {
        let f = objective.value(&x);
        if !f.is_finite() {
            return Err(Error::Diverged { steps });
        }
        let g = objective.gradient(&x);
        let gnorm = projected_gradient_norm(&x, &g, &cfg.bounds);
        let tol = cfg.inner_tol * objective.tolerance_scale(&x);
        if gnorm <= tol {
            return Ok(InnerResult {
                x,
                value: f,
                gradient_norm: gnorm,
                steps,
                converged: true,
            });
        }
        if steps >= cfg.max_inner_iters {
            return Ok(InnerResult {
                x,
                value: f,
                gradient_norm: gnorm,
                steps,
                converged: false,
            });
        }
        let gnorm_sq = gnorm * gnorm;
        let attempt = trial
            .and_then(|t| armijo_search(objective, &x, f, &g, gnorm_sq, cfg, t))
            .or_else(|| {
                armijo_search(objective, &x, f, &g, gnorm_sq, cfg, reset_trial(cfg, gnorm))
            });
        match attempt {
            Some((x1, f1, alpha)) => {
                // float-limited progress: stop once the achieved decrease is
                // below representable resolution of the objective
                let floor = real::<T>(4.0) * T::epsilon() * (f.abs() + f1.abs())
                    + T::min_positive_value();
                let stalled = f - f1 <= floor;
                x = x1;
                trial = Some((alpha * real(TRIAL_GROWTH)).min(real(TRIAL_MAX)));
                steps += 1;
                if stalled {
                    return Ok(InnerResult {
                        x,
                        value: f1,
                        gradient_norm: gnorm,
                        steps,
                        converged: false,
                    });
                }
            }
            None => {
                // line search exhausted; no further progress possible
                return Ok(InnerResult {
                    x,
                    value: f,
                    gradient_norm: gnorm,
                    steps,
                    converged: false,
                });
            }
        }
    }
}

/// The normalized rulebook utility as a solver objective.
pub struct RulebookObjective<'a, T: Real> {
    pub rulebook: &'a Rulebook<T>,
    pub lambda: T,
    pub eps_rank: T,
}

impl<'a, T: Real> RulebookObjective<'a, T> {
    pub fn new(rulebook: &'a Rulebook<T>, lambda: T, eps_rank: T) -> Self {
        Self {
            rulebook,
            lambda,
            eps_rank,
        }
    }
}

impl<T: Real> Objective<T> for RulebookObjective<'_, T> {
    fn value(&self, x: &[T]) -> T {
        let v = self
            .rulebook
            .violations(x)
            .expect("dimension checked at construction");
        crate::scalarization::utility_normalized_of_violations(&v, self.lambda)
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        crate::scalarization::utility_gradient(self.rulebook, x, self.lambda, true)
            .expect("normalized gradient cannot overflow")
    }

    /// Weight of the currently dominant active rule. Keeps the gradient
    /// tolerance meaningful when lambda is large and the lead term carries a
    /// weight of `lambda^-rank`.
    fn tolerance_scale(&self, x: &[T]) -> T {
        let rank = self
            .rulebook
            .rank(x, self.eps_rank)
            .expect("dimension checked at construction");
        let lead = rank.value.min(self.rulebook.len() - 1);
        self.lambda.powi(-(lead as i32)).min(T::one())
    }
}

/// One recorded solver iteration.
#[derive(Debug, Clone)]
pub struct TraceRecord<T: Real> {
    pub iter: usize,
    pub lambda: T,
    pub decision: Vec<T>,
    pub objective: T,
    pub gradient_norm: T,
    pub rank: usize,
}

/// Per-run record of an outer solve: the central path of the exact
/// algorithm, or the per-step path of the time-scale separated one.
#[derive(Debug, Clone)]
pub struct RunTrace<T: Real> {
    pub iterations: Vec<TraceRecord<T>>,
    pub final_decision: Decision<T>,
    pub final_rank: Rank,
    pub total_inner_steps: usize,
    pub converged: bool,
    /// Lambda at which the rank last changed along the trace.
    pub rank_settled_lambda: T,
}

/// Outer-loop termination bookkeeping shared by both algorithms: converged
/// when the rank has been stable for three consecutive outer iterations and
/// the decision displacement dropped below the inner tolerance, or when
/// lambda has saturated and the current point is stationary to tolerance.
const RANK_STABLE_WINDOW: usize = 3;

/// Consecutive saturated-lambda steps whose combined displacement must stay
/// below the inner tolerance before the time-scale solver may declare the
/// iterate settled.
const TIMESCALE_SETTLE_WINDOW: usize = 10;

struct OuterState<T: Real> {
    prev_x: Option<Vec<T>>,
    prev_rank: Option<usize>,
    stable_count: usize,
}

impl<T: Real> OuterState<T> {
    fn new() -> Self {
        Self {
            prev_x: None,
            prev_rank: None,
            stable_count: 0,
        }
    }

    fn update(&mut self, x: &[T], rank: usize) -> (T, usize) {
        let displacement = match &self.prev_x {
            Some(p) => distance(p, x),
            None => T::infinity(),
        };
        if self.prev_rank == Some(rank) {
            self.stable_count += 1;
        } else {
            self.stable_count = 1;
        }
        self.prev_x = Some(x.to_vec());
        self.prev_rank = Some(rank);
        (displacement, self.stable_count)
    }
}

/// Exact central path: fully converge to a stationary point at each lambda,
/// then grow lambda, until the outer iterates settle.
pub fn central_path_solve<T: Real>(
    rulebook: &Rulebook<T>,
    x0: &Decision<T>,
    schedule: &LambdaSchedule<T>,
    cfg: &SolverConfig<T>,
) -> Result<RunTrace<T>> {
    cfg.validate()?;
    if x0.dim() != rulebook.dim() {
        return Err(Error::DimensionMismatch {
            expected: rulebook.dim(),
            got: x0.dim(),
        });
    }
    let mut lambda = schedule.lambda0;
    let mut x = x0.values().to_vec();
    let mut trace = Vec::new();
    let mut total_inner = 0;
    let mut state = OuterState::new();
    let mut converged = false;
    let mut rank_settled_lambda = lambda;

    for outer in 0..cfg.max_outer_iters {
        let objective = RulebookObjective::new(rulebook, lambda, cfg.eps_rank);
        let inner = solve_inner(&objective, &x, cfg)?;
        total_inner += inner.steps;
        x = inner.x;
        let rank = rulebook.rank(&x, cfg.eps_rank)?;
        let (displacement, stable) = state.update(&x, rank.value);
        if stable == 1 {
            rank_settled_lambda = lambda;
        }
        trace.push(TraceRecord {
            iter: outer,
            lambda,
            decision: x.clone(),
            objective: inner.value,
            gradient_norm: inner.gradient_norm,
            rank: rank.value,
        });
        // a stall exit (budget not exhausted, tolerance not reached) means
        // descent can make no further float-representable progress; treat
        // that point as stationary for termination purposes
        let stationary = inner.converged || inner.steps < cfg.max_inner_iters;
        if (stable >= RANK_STABLE_WINDOW && displacement <= cfg.inner_tol)
            || (schedule.saturated(lambda) && stationary)
        {
            converged = true;
            break;
        }
        lambda = schedule.next_lambda(lambda);
    }

    let final_rank = rulebook.rank(&x, cfg.eps_rank)?;
    Ok(RunTrace {
        iterations: trace,
        final_decision: Decision::new(x)?,
        final_rank,
        total_inner_steps: total_inner,
        converged,
        rank_settled_lambda,
    })
}

/// Time-scale separated solve: at most one descent step per outer iteration,
/// with `timescale_ratio` lambda updates after each. Reaches minimum-rank
/// decisions at far lower step counts than the central path, but the final
/// decision need not be an optimal one within the minimum-rank set.
pub fn timescale_solve<T: Real>(
    rulebook: &Rulebook<T>,
    x0: &Decision<T>,
    schedule: &LambdaSchedule<T>,
    cfg: &SolverConfig<T>,
) -> Result<RunTrace<T>> {
    cfg.validate()?;
    if x0.dim() != rulebook.dim() {
        return Err(Error::DimensionMismatch {
            expected: rulebook.dim(),
            got: x0.dim(),
        });
    }
    let mut lambda = schedule.lambda0;
    let mut x = x0.values().to_vec();
    let mut trace = Vec::new();
    let mut total_inner = 0;
    let mut state = OuterState::new();
    let mut converged = false;
    let mut rank_settled_lambda = lambda;
    let mut trial: Option<T> = None;
    // displacements of the most recent saturated-lambda steps
    let mut recent_moves: std::collections::VecDeque<T> = std::collections::VecDeque::new();

    for outer in 0..cfg.max_outer_iters {
        let objective = RulebookObjective::new(rulebook, lambda, cfg.eps_rank);
        let f = objective.value(&x);
        if !f.is_finite() {
            return Err(Error::Diverged { steps: total_inner });
        }
        let g = objective.gradient(&x);
        let gnorm = projected_gradient_norm(&x, &g, &cfg.bounds);
        let tol = cfg.inner_tol * objective.tolerance_scale(&x);
        let mut value = f;
        let mut stationary = gnorm <= tol;
        if !stationary {
            let out = gradient_step_with_trial(&objective, &x, cfg, trial)?;
            if !out.stalled {
                total_inner += 1;
                trial = Some((out.accepted_step * real(TRIAL_GROWTH)).min(real(TRIAL_MAX)));
                // float-limited progress counts as stationary, same as the
                // stall exit in solve_inner
                let floor = real::<T>(4.0) * T::epsilon() * (f.abs() + out.value.abs())
                    + T::min_positive_value();
                if f - out.value <= floor {
                    stationary = true;
                }
            } else {
                // no descent direction found; treat as locally stationary
                stationary = true;
            }
            x = out.x;
            value = out.value;
        }
        let rank = rulebook.rank(&x, cfg.eps_rank)?;
        let (displacement, stable) = state.update(&x, rank.value);
        if stable == 1 {
            rank_settled_lambda = lambda;
        }
        trace.push(TraceRecord {
            iter: outer,
            lambda,
            decision: x.clone(),
            objective: value,
            gradient_norm: gnorm,
            rank: rank.value,
        });
        // unlike the central path, a small displacement after one step only
        // means the step was short, so the displacement signal is only
        // trusted once lambda has saturated and it stays negligible over a
        // whole window of accepted steps (matching the central path's
        // settled-argmin precision); badly conditioned objectives otherwise
        // zig-zag below any gradient tolerance for ~lambda steps
        if schedule.saturated(lambda) {
            recent_moves.push_back(displacement);
            if recent_moves.len() > TIMESCALE_SETTLE_WINDOW {
                recent_moves.pop_front();
            }
            let settled = recent_moves.len() == TIMESCALE_SETTLE_WINDOW
                && stable >= TIMESCALE_SETTLE_WINDOW
                && recent_moves.iter().fold(T::zero(), |a, &d| a + d) <= cfg.inner_tol;
            if stationary || settled {
                converged = true;
                break;
            }
        }
        for _ in 0..cfg.timescale_ratio {
            lambda = schedule.next_lambda(lambda);
        }
    }

    let final_rank = rulebook.rank(&x, cfg.eps_rank)?;
    Ok(RunTrace {
        iterations: trace,
        final_decision: Decision::new(x)?,
        final_rank,
        total_inner_steps: total_inner,
        converged,
        rank_settled_lambda,
    })
}

/// Result of the preemptive baseline.
#[derive(Debug, Clone)]
pub struct PreemptiveResult<T: Real> {
    pub decision: Decision<T>,
    pub stages_completed: usize,
    /// Violation level achieved at the end of each stage.
    pub stage_levels: Vec<T>,
    pub total_inner_steps: usize,
}

struct PreemptiveStage<'a, T: Real> {
    rulebook: &'a Rulebook<T>,
    stage: usize,
    levels: &'a [T],
    penalty: T,
    level_tol: T,
}

impl<T: Real> Objective<T> for PreemptiveStage<'_, T> {
    fn value(&self, x: &[T]) -> T {
        let mut acc = self.rulebook.rule(self.stage).evaluate(x);
        for j in 0..self.stage {
            let excess = (self.rulebook.rule(j).evaluate(x) - self.levels[j] - self.level_tol)
                .max(T::zero());
            acc = acc + self.penalty * excess * excess;
        }
        acc
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        let mut acc = self.rulebook.rule(self.stage).gradient(x);
        let two = real::<T>(2.0);
        for j in 0..self.stage {
            let excess = (self.rulebook.rule(j).evaluate(x) - self.levels[j] - self.level_tol)
                .max(T::zero());
            if excess > T::zero() {
                for (a, gj) in acc.iter_mut().zip(self.rulebook.rule(j).gradient(x)) {
                    *a = *a + self.penalty * two * excess * gj;
                }
            }
        }
        acc
    }
}

/// Classic lexicographic baseline: N sequential minimizations in decreasing
/// importance, freezing earlier achieved violation levels with quadratic
/// penalties.
pub fn preemptive_solve<T: Real>(
    rulebook: &Rulebook<T>,
    x0: &Decision<T>,
    cfg: &SolverConfig<T>,
    level_penalty: T,
) -> Result<PreemptiveResult<T>> {
    cfg.validate()?;
    let mut x = x0.values().to_vec();
    let mut levels: Vec<T> = Vec::with_capacity(rulebook.len());
    let mut total_inner = 0;
    for stage in 0..rulebook.len() {
        let objective = PreemptiveStage {
            rulebook,
            stage,
            levels: &levels,
            penalty: level_penalty,
            level_tol: cfg.inner_tol,
        };
        let inner = solve_inner(&objective, &x, cfg).map_err(|e| match e {
            Error::Diverged { .. } => Error::StageDiverged { stage },
            other => other,
        })?;
        total_inner += inner.steps;
        x = inner.x;
        levels.push(rulebook.rule(stage).evaluate(&x));
    }
    Ok(PreemptiveResult {
        decision: Decision::new(x)?,
        stages_completed: rulebook.len(),
        stage_levels: levels,
        total_inner_steps: total_inner,
    })
}

/// Exhaustive ground truth for the minimum rank and the lexicographic argmin
/// over a regular grid.
#[derive(Debug, Clone)]
pub struct OracleResult<T: Real> {
    pub min_rank: usize,
    pub lex_argmin: Decision<T>,
    pub argmin_violations: ViolationVector<T>,
    pub grid_size: usize,
}

pub const GRID_BUDGET: usize = 1_000_000;

/// Evaluates every grid point and returns the lexicographic argmin (ties
/// broken by the first point in row-major order) together with its rank.
pub fn grid_oracle<T: Real>(
    rulebook: &Rulebook<T>,
    bounds: &[(T, T)],
    points_per_dim: usize,
) -> Result<OracleResult<T>> {
    if bounds.len() != rulebook.dim() {
        return Err(Error::DimensionMismatch {
            expected: rulebook.dim(),
            got: bounds.len(),
        });
    }
    if points_per_dim < 1 {
        return Err(Error::RejectedInput(
            "points_per_dim must be at least 1".into(),
        ));
    }
    let total = points_per_dim
        .checked_pow(bounds.len() as u32)
        .unwrap_or(usize::MAX);
    if total > GRID_BUDGET {
        return Err(Error::GridBudgetExceeded {
            requested: total,
            budget: GRID_BUDGET,
        });
    }

    let dim = bounds.len();
    let coord = |d: usize, i: usize| -> T {
        let (lo, hi) = bounds[d];
        if points_per_dim == 1 {
            lo
        } else {
            lo + (hi - lo) * real::<T>(i as f64 / (points_per_dim - 1) as f64)
        }
    };

    let mut best: Option<(Vec<T>, ViolationVector<T>)> = None;
    let mut indices = vec![0usize; dim];
    let mut point = vec![T::zero(); dim];
    for _ in 0..total {
        for d in 0..dim {
            point[d] = coord(d, indices[d]);
        }
        let v = rulebook.violations(&point)?;
        let replace = match &best {
            None => true,
            Some((_, bv)) => lex_compare(&v, bv, T::zero())? == std::cmp::Ordering::Less,
        };
        if replace {
            best = Some((point.clone(), v));
        }
        // advance row-major indices (last dimension fastest)
        for d in (0..dim).rev() {
            indices[d] += 1;
            if indices[d] < points_per_dim {
                break;
            }
            indices[d] = 0;
        }
    }

    let (argmin, violations) = best.expect("grid has at least one point");
    let min_rank = violations.rank(real(1e-9)).value;
    Ok(OracleResult {
        min_rank,
        lex_argmin: Decision::new(argmin)?,
        argmin_violations: violations,
        grid_size: total,
    })
}

/// Central finite differences with per-coordinate step `h * max(1, |x_i|)`.
/// Independent oracle for analytic gradients.
pub fn finite_diff_gradient<T: Real, F: Fn(&[T]) -> T>(objective: F, x: &[T], h: T) -> Vec<T> {
    let mut g = vec![T::zero(); x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let step = h * T::one().max(x[i].abs());
        xp[i] = x[i] + step;
        let fp = objective(&xp);
        xp[i] = x[i] - step;
        let fm = objective(&xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (real::<T>(2.0) * step);
    }
    g
}

/// Deterministic uniform sample within per-dimension bounds (the cold random
/// start of both outer algorithms).
pub fn random_decision<T: Real>(bounds: &[(T, T)], seed: u64) -> Decision<T> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let values = bounds
        .iter()
        .map(|&(lo, hi)| {
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            lo + (hi - lo) * real::<T>(u)
        })
        .collect();
    Decision::new(values).expect("bounds produce finite values")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rulebook::FnRule;
    use crate::rulebook::Rule;
    use std::sync::Arc;

    fn quadratic() -> impl Objective<f64> {
        (
            |x: &[f64]| x[0] * x[0],
            |x: &[f64]| vec![2.0 * x[0]],
        )
    }

    fn hinge_then_quad() -> Rulebook<f64> {
        let r0: Arc<dyn Rule<f64>> = Arc::new(FnRule::new(
            "hinge_pos",
            |x: &[f64]| x[0].max(0.0).powi(2),
            |x: &[f64]| vec![2.0 * x[0].max(0.0)],
        ));
        let r1: Arc<dyn Rule<f64>> = Arc::new(FnRule::new(
            "goal_2",
            |x: &[f64]| (x[0] - 2.0) * (x[0] - 2.0),
            |x: &[f64]| vec![2.0 * (x[0] - 2.0)],
        ));
        Rulebook::new(vec![r0, r1], 1).unwrap()
    }

    #[test]
    fn gradient_step_descends_quadratic() {
        let cfg = SolverConfig::default();
        let obj = quadratic();
        let out = gradient_step(&obj, &[4.0], &cfg).unwrap();
        assert!(out.value < 16.0);
        assert!(out.x[0].abs() < 4.0);
        assert!(!out.stalled);
    }

    #[test]
    fn gradient_step_stationary_point_unchanged() {
        let cfg = SolverConfig::default();
        let obj = quadratic();
        let out = gradient_step(&obj, &[0.0], &cfg).unwrap();
        assert_eq!(out.x, vec![0.0]);
        assert!(!out.stalled);
    }

    #[test]
    fn rosenbrock_monotone_descent() {
        let obj = (
            |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            |x: &[f64]| {
                vec![
                    -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
                    200.0 * (x[1] - x[0] * x[0]),
                ]
            },
        );
        let cfg = SolverConfig::default();
        let mut x = vec![-1.0, 1.0];
        let mut f = obj.value(&x);
        let mut trial = None;
        for _ in 0..100 {
            let out = gradient_step_with_trial(&obj, &x, &cfg, trial).unwrap();
            assert!(out.value <= f);
            f = out.value;
            x = out.x;
            if out.accepted_step > 0.0 {
                trial = Some(out.accepted_step * 4.0);
            }
        }
        assert!(f < obj.value(&[-1.0, 1.0]));
    }

    #[test]
    fn solve_inner_quadratic() {
        let cfg = SolverConfig {
            inner_tol: 1e-4,
            ..Default::default()
        };
        let obj = quadratic();
        let res = solve_inner(&obj, &[4.0], &cfg).unwrap();
        assert!(res.converged);
        assert!(res.x[0].abs() < 1e-4);
    }

    #[test]
    fn solve_inner_zero_steps_when_stationary() {
        let cfg = SolverConfig::default();
        let obj = quadratic();
        let res = solve_inner(&obj, &[0.0], &cfg).unwrap();
        assert_eq!(res.steps, 0);
        assert!(res.converged);
    }

    #[test]
    fn solve_inner_badly_scaled_quadratic() {
        // weight 1e-12: the adaptive trial step must grow to make progress
        let obj = (
            |x: &[f64]| 1e-12 * (x[0] - 3.0).powi(2),
            |x: &[f64]| vec![1e-12 * 2.0 * (x[0] - 3.0)],
        );
        let cfg = SolverConfig {
            inner_tol: 1e-20,
            ..Default::default()
        };
        let res = solve_inner(&obj, &[100.0], &cfg).unwrap();
        assert!((res.x[0] - 3.0).abs() < 1e-4, "x = {}", res.x[0]);
    }

    #[test]
    fn solve_inner_rulebook_postcondition() {
        let rb = hinge_then_quad();
        let cfg = SolverConfig::default();
        let obj = RulebookObjective::new(&rb, 8.0, cfg.eps_rank);
        let res = solve_inner(&obj, &[5.0], &cfg).unwrap();
        assert!(res.converged);
        assert!(res.gradient_norm <= cfg.inner_tol * obj.tolerance_scale(&res.x));
    }

    #[test]
    fn solve_inner_divergence_reported() {
        let obj = (
            |x: &[f64]| if x[0] > 10.0 { f64::NAN } else { -x[0] },
            |_: &[f64]| vec![-1.0],
        );
        let cfg = SolverConfig::default();
        let err = solve_inner(&obj, &[f64::NAN], &cfg);
        assert!(matches!(err, Err(Error::Diverged { .. })));
    }

    #[test]
    fn central_path_boundary_problem() {
        let rb = hinge_then_quad();
        let cfg = SolverConfig::default();
        let schedule = LambdaSchedule::new(0.5, 2.0, 1e8).unwrap();
        let x0 = Decision::new(vec![5.0]).unwrap();
        let trace = central_path_solve(&rb, &x0, &schedule, &cfg).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.final_rank.value, 1);
        assert!(trace.final_decision.values()[0].abs() < 1e-3);
        // lambda nondecreasing along the trace
        assert!(trace
            .iterations
            .windows(2)
            .all(|w| w[0].lambda <= w[1].lambda));
    }

    #[test]
    fn central_path_all_satisfiable() {
        let r0: Arc<dyn Rule<f64>> = Arc::new(FnRule::new(
            "box",
            |x: &[f64]| (x[0].abs() - 1.0).max(0.0).powi(2),
            |x: &[f64]| vec![2.0 * (x[0].abs() - 1.0).max(0.0) * x[0].signum()],
        ));
        let r1: Arc<dyn Rule<f64>> = Arc::new(FnRule::new(
            "goal_half",
            |x: &[f64]| (x[0] - 0.5) * (x[0] - 0.5),
            |x: &[f64]| vec![2.0 * (x[0] - 0.5)],
        ));
        let rb = Rulebook::new(vec![r0, r1], 1).unwrap();
        let cfg = SolverConfig::default();
        let schedule = LambdaSchedule::new(0.5, 2.0, 1e8).unwrap();
        let x0 = Decision::new(vec![4.0]).unwrap();
        let trace = central_path_solve(&rb, &x0, &schedule, &cfg).unwrap();
        assert_eq!(trace.final_rank.value, 2);
        assert!(trace.converged);
    }

    #[test]
    fn timescale_matches_oracle_rank() {
        let rb = hinge_then_quad();
        let cfg = SolverConfig::default();
        let schedule = LambdaSchedule::new(0.5, 2.0, 1e8).unwrap();
        let x0 = Decision::new(vec![5.0]).unwrap();
        let trace = timescale_solve(&rb, &x0, &schedule, &cfg).unwrap();
        let oracle = grid_oracle(&rb, &[(-1.0, 5.0)], 601).unwrap();
        assert_eq!(trace.final_rank.value, oracle.min_rank);
        assert!(trace.converged);
        // one-to-one time scaling: at most one inner step per outer iteration
        assert!(trace.total_inner_steps <= trace.iterations.len());
    }

    #[test]
    fn timescale_fewer_steps_than_central_path() {
        let rb = hinge_then_quad();
        let cfg = SolverConfig::default();
        let schedule = LambdaSchedule::new(0.5, 2.0, 1e8).unwrap();
        let x0 = Decision::new(vec![5.0]).unwrap();
        let exact = central_path_solve(&rb, &x0, &schedule, &cfg).unwrap();
        let separated = timescale_solve(&rb, &x0, &schedule, &cfg).unwrap();
        assert!(separated.total_inner_steps <= exact.total_inner_steps);
    }

    #[test]
    fn preemptive_matches_central_path_rank() {
        let rb = hinge_then_quad();
        let cfg = SolverConfig::default();
        let x0 = Decision::new(vec![5.0]).unwrap();
        let res = preemptive_solve(&rb, &x0, &cfg, 1e8).unwrap();
        assert_eq!(res.stages_completed, 2);
        assert!(res.decision.values()[0].abs() < 1e-2);
    }

    #[test]
    fn grid_oracle_satisfiable_case() {
        let r0: Arc<dyn Rule<f64>> = Arc::new(FnRule::new(
            "q0",
            |x: &[f64]| (x[0] - 0.5) * (x[0] - 0.5),
            |x: &[f64]| vec![2.0 * (x[0] - 0.5)],
        ));
        let rb = Rulebook::new(vec![r0], 1).unwrap();
        // 0.5 is on the grid for 601 points over [-1, 5]
        let oracle = grid_oracle(&rb, &[(-1.0, 5.0)], 601).unwrap();
        assert_eq!(oracle.min_rank, 1);
        assert!((oracle.lex_argmin.values()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn grid_oracle_boundary_argmin() {
        let rb = hinge_then_quad();
        let oracle = grid_oracle(&rb, &[(-1.0, 5.0)], 601).unwrap();
        assert_eq!(oracle.min_rank, 1);
        assert!(oracle.lex_argmin.values()[0].abs() < 0.011);
    }

    #[test]
    fn grid_oracle_tie_break_first_point() {
        let r0: Arc<dyn Rule<f64>> = Arc::new(FnRule::new(
            "flat",
            |_: &[f64]| 0.0,
            |x: &[f64]| vec![0.0; x.len()],
        ));
        let rb = Rulebook::new(vec![r0], 1).unwrap();
        let oracle = grid_oracle(&rb, &[(-1.0, 1.0)], 11).unwrap();
        assert_eq!(oracle.lex_argmin.values()[0], -1.0);
    }

    #[test]
    fn grid_oracle_budget() {
        let r0: Arc<dyn Rule<f64>> = Arc::new(FnRule::new(
            "flat",
            |_: &[f64]| 0.0,
            |x: &[f64]| vec![0.0; x.len()],
        ));
        let rb = Rulebook::new(vec![r0.clone(), r0], 3).unwrap();
        assert!(matches!(
            grid_oracle(
                &Rulebook::new(
                    vec![Arc::new(FnRule::new(
                        "flat",
                        |_: &[f64]| 0.0,
                        |x: &[f64]| vec![0.0; x.len()],
                    )) as Arc<dyn Rule<f64>>],
                    3
                )
                .unwrap(),
                &[(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)],
                101
            ),
            Err(Error::GridBudgetExceeded { .. })
        ));
        let _ = rb;
    }

    #[test]
    fn finite_diff_quadratic() {
        let g = finite_diff_gradient(|x: &[f64]| x[0] * x[0], &[3.0], 1e-6);
        assert!((g[0] - 6.0).abs() < 1e-6);
        let g = finite_diff_gradient(|_: &[f64]| 5.0, &[1.0, 2.0], 1e-6);
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn random_decision_deterministic_and_in_bounds() {
        let bounds = [(-2.0, 3.0), (0.0, 1.0)];
        let a = random_decision::<f64>(&bounds, 42);
        let b = random_decision::<f64>(&bounds, 42);
        assert_eq!(a.values(), b.values());
        for (v, (lo, hi)) in a.values().iter().zip(&bounds) {
            assert!(v >= lo && v < hi);
        }
        let c = random_decision::<f64>(&bounds, 43);
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn central_path_deterministic() {
        let rb = hinge_then_quad();
        let cfg = SolverConfig::default();
        let schedule = LambdaSchedule::new(0.5, 2.0, 1e8).unwrap();
        let x0 = random_decision(&[(-1.0, 5.0)], 7);
        let a = central_path_solve(&rb, &x0, &schedule, &cfg).unwrap();
        let b = central_path_solve(&rb, &x0, &schedule, &cfg).unwrap();
        assert_eq!(a.final_decision.values(), b.final_decision.values());
        assert_eq!(a.total_inner_steps, b.total_inner_steps);
        assert_eq!(a.iterations.len(), b.iterations.len());
    }
}
