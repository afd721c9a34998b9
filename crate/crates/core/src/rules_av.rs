//! Motion-planning rulebook: five trajectory rules over kinematic bicycle
//! rollouts, ordered by decreasing importance:
//!
//! 0. collision avoidance (kinetic-energy weighted penetration)
//! 1. drivable area (stay between the outer road edges)
//! 2. speed limit
//! 3. lane centering (squared offset from the nearest lane centerline)
//! 4. progress (squared final distance to the goal)
//!
//! Each rule evaluates over states `1..=H` of a rollout; the fixed initial
//! state is excluded. The `DecisionRule` adapter exposes them as rules over
//! the flat control sequence by chaining state-space gradients through the
//! rollout sensitivities.

use std::sync::Arc;

use crate::rulebook::{Rule, Rulebook};
use crate::scalar::{real, Real};
use crate::vehicle::{
    controls_from_decision, rollout, rollout_sensitivities, VehicleParams, VehicleState,
};

/// A straight road along +x with two same-width lanes: the ego lane centered
/// at `own_center_y` and the opposing lane centered at `opposing_center_y`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadModel<T: Real> {
    pub lane_width: T,
    pub own_center_y: T,
    pub opposing_center_y: T,
    pub speed_limit: T,
}

impl<T: Real> Default for RoadModel<T> {
    fn default() -> Self {
        Self {
            lane_width: real(3.5),
            own_center_y: T::zero(),
            opposing_center_y: real(3.5),
            speed_limit: real(13.89),
        }
    }
}

impl<T: Real> RoadModel<T> {
    pub fn y_min(&self) -> T {
        self.own_center_y - self.lane_width / real(2.0)
    }

    pub fn y_max(&self) -> T {
        self.opposing_center_y + self.lane_width / real(2.0)
    }

    /// Centerline of the lane nearest to `y` (either travel direction).
    pub fn nearest_center(&self, y: T) -> T {
        if (y - self.own_center_y).abs() <= (y - self.opposing_center_y).abs() {
            self.own_center_y
        } else {
            self.opposing_center_y
        }
    }
}

/// A static circular obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle<T: Real> {
    pub x: T,
    pub y: T,
    pub radius: T,
}

/// Rule weights and severity constants.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleScales<T: Real> {
    /// Multiplier on the collision rule. Deliberately large: the smooth
    /// penalty balances the collision gradient against lower-priority pulls
    /// at penetration ~ pull / (collision * lambda), so a large multiplier
    /// keeps the residual penetration of converged plans below the rank
    /// tolerance at practical lambda values.
    pub collision: T,
    /// Severity floor so contact at standstill still violates.
    pub v_floor: T,
    /// Multiplier on the drivable-area rule.
    pub off_road: T,
    /// Multiplier on the progress rule.
    pub progress: T,
    /// Forward offset of the centering reference point [m]; coupling heading
    /// into the centering rule damps closed-loop weaving.
    pub centering_lookahead: T,
}

impl<T: Real> Default for RuleScales<T> {
    fn default() -> Self {
        Self {
            collision: real(1e5),
            v_floor: T::one(),
            off_road: real(4.0),
            progress: real(0.01),
            centering_lookahead: real(3.0),
        }
    }
}

/// Two covering discs along the vehicle's long axis.
fn footprint_offsets<T: Real>(params: &VehicleParams<T>) -> ([T; 2], T) {
    let off = params.length / real(4.0);
    let half_w = params.width / real(2.0);
    let radius = (off * off + half_w * half_w).sqrt();
    ([off, -off], radius)
}

/// Everything the rules need besides the trajectory itself.
#[derive(Debug, Clone, PartialEq)]
pub struct AvWorld<T: Real> {
    pub road: RoadModel<T>,
    pub obstacles: Vec<Obstacle<T>>,
    pub goal: (T, T),
    pub scales: RuleScales<T>,
    pub vehicle: VehicleParams<T>,
}

pub const AV_RULE_IDS: [&str; 5] = ["collision", "drivable", "speed", "centering", "progress"];

/// Per-state violation and its gradient with respect to (x, y, psi, v).
type StateGrad<T> = [T; 4];

impl<T: Real> AvWorld<T> {
    fn collision_at(&self, s: &VehicleState<T>) -> (T, StateGrad<T>) {
        let (offsets, disc_r) = footprint_offsets(&self.vehicle);
        let sev = real::<T>(0.5) * s.v * s.v + self.scales.v_floor;
        let mut val = T::zero();
        let mut grad = [T::zero(); 4];
        let (sp, cp) = (s.psi.sin(), s.psi.cos());
        for &off in &offsets {
            let px = s.x + off * cp;
            let py = s.y + off * sp;
            for ob in &self.obstacles {
                let dx = px - ob.x;
                let dy = py - ob.y;
                let d = (dx * dx + dy * dy).sqrt().max(real(1e-12));
                let pen = (disc_r + ob.radius - d).max(T::zero());
                if pen > T::zero() {
                    let w = self.scales.collision;
                    val = val + w * pen * pen * sev;
                    let coef = -w * real::<T>(2.0) * pen * sev / d;
                    grad[0] = grad[0] + coef * dx;
                    grad[1] = grad[1] + coef * dy;
                    grad[2] = grad[2] + coef * (dx * (-off * sp) + dy * (off * cp));
                    grad[3] = grad[3] + w * pen * pen * s.v;
                }
            }
        }
        (val, grad)
    }

    /// Own-direction lane excursion plus a heavier hinge on leaving the road
    /// entirely, so an opposing-lane pass beats going off-road.
    fn drivable_at(&self, s: &VehicleState<T>) -> (T, StateGrad<T>) {
        let (offsets, disc_r) = footprint_offsets(&self.vehicle);
        let half = self.road.lane_width / real(2.0);
        let (lane_lo, lane_hi) = (
            self.road.own_center_y - half,
            self.road.own_center_y + half,
        );
        let (road_lo, road_hi) = (self.road.y_min(), self.road.y_max());
        let w = self.scales.off_road;
        let mut val = T::zero();
        let mut grad = [T::zero(); 4];
        let (sp, cp) = (s.psi.sin(), s.psi.cos());
        for &off in &offsets {
            let py = s.y + off * sp;
            let lane_above = (py + disc_r - lane_hi).max(T::zero());
            let lane_below = (lane_lo - (py - disc_r)).max(T::zero());
            let road_above = (py + disc_r - road_hi).max(T::zero());
            let road_below = (road_lo - (py - disc_r)).max(T::zero());
            val = val
                + lane_above * lane_above
                + lane_below * lane_below
                + w * (road_above * road_above + road_below * road_below);
            let dpy = real::<T>(2.0)
                * (lane_above - lane_below + w * (road_above - road_below));
            grad[1] = grad[1] + dpy;
            grad[2] = grad[2] + dpy * off * cp;
        }
        (val, grad)
    }

    fn speed_at(&self, s: &VehicleState<T>) -> (T, StateGrad<T>) {
        let over = (s.v - self.road.speed_limit).max(T::zero());
        let mut grad = [T::zero(); 4];
        grad[3] = real::<T>(2.0) * over;
        (over * over, grad)
    }

    fn centering_at(&self, s: &VehicleState<T>) -> (T, StateGrad<T>) {
        let look = self.scales.centering_lookahead;
        let y_ref = s.y + look * s.psi.sin();
        let c = self.road.nearest_center(y_ref);
        let dy = y_ref - c;
        let mut grad = [T::zero(); 4];
        grad[1] = real::<T>(2.0) * dy;
        grad[2] = real::<T>(2.0) * dy * look * s.psi.cos();
        (dy * dy, grad)
    }

    fn progress_at(&self, s: &VehicleState<T>) -> (T, StateGrad<T>) {
        let w = self.scales.progress;
        let dx = s.x - self.goal.0;
        let dy = s.y - self.goal.1;
        let mut grad = [T::zero(); 4];
        grad[0] = real::<T>(2.0) * w * dx;
        grad[1] = real::<T>(2.0) * w * dy;
        (w * (dx * dx + dy * dy), grad)
    }

    fn rule_at(&self, rule: usize, s: &VehicleState<T>) -> (T, StateGrad<T>) {
        match rule {
            0 => self.collision_at(s),
            1 => self.drivable_at(s),
            2 => self.speed_at(s),
            3 => self.centering_at(s),
            4 => self.progress_at(s),
            _ => unreachable!("five rules"),
        }
    }

    /// Instantaneous per-rule violations at a single state (used to score
    /// executed trajectories). Progress reports the unscaled remaining
    /// squared distance and is only meaningful at the final executed state.
    pub fn instantaneous_violations(&self, s: &VehicleState<T>) -> [T; 5] {
        [
            self.collision_at(s).0,
            self.drivable_at(s).0,
            self.speed_at(s).0,
            self.centering_at(s).0,
            self.progress_at(s).0,
        ]
    }
}

/// Whether a rule accumulates over every trajectory state or only the last.
fn final_state_only(rule: usize) -> bool {
    rule == 4
}

/// A trajectory rule lifted to the flat control-sequence decision space.
pub struct DecisionRule<T: Real> {
    world: Arc<AvWorld<T>>,
    x0: VehicleState<T>,
    dt: T,
    rule: usize,
}

impl<T: Real> Rule<T> for DecisionRule<T> {
    fn id(&self) -> &str {
        AV_RULE_IDS[self.rule]
    }

    fn evaluate(&self, decision: &[T]) -> T {
        let controls = controls_from_decision(decision).expect("decision validated upstream");
        let states = rollout(&self.x0, &controls, self.dt, &self.world.vehicle);
        let range = if final_state_only(self.rule) {
            states.len() - 1..states.len()
        } else {
            1..states.len()
        };
        range
            .map(|t| self.world.rule_at(self.rule, &states[t]).0)
            .sum()
    }

    fn gradient(&self, decision: &[T]) -> Vec<T> {
        let controls = controls_from_decision(decision).expect("decision validated upstream");
        let sens = rollout_sensitivities(&self.x0, &controls, self.dt, &self.world.vehicle);
        let h = controls.len();
        let mut g = vec![T::zero(); decision.len()];
        let range = if final_state_only(self.rule) {
            h..h + 1
        } else {
            1..h + 1
        };
        for t in range {
            let (_, sg) = self.world.rule_at(self.rule, &sens.states[t]);
            for (k, jac) in sens.jacobians[t - 1].iter().enumerate() {
                for c in 0..2 {
                    let mut acc = T::zero();
                    for i in 0..4 {
                        acc = acc + sg[i] * jac[i][c];
                    }
                    g[2 * k + c] = g[2 * k + c] + acc;
                }
            }
        }
        g
    }
}

/// Builds the five-rule planning rulebook over a `horizon`-step control
/// sequence starting from `x0`.
pub fn build_av_rulebook<T: Real>(
    world: Arc<AvWorld<T>>,
    x0: VehicleState<T>,
    dt: T,
    horizon: usize,
) -> Rulebook<T> {
    let rules: Vec<Arc<dyn Rule<T>>> = (0..5)
        .map(|rule| {
            Arc::new(DecisionRule {
                world: world.clone(),
                x0,
                dt,
                rule,
            }) as Arc<dyn Rule<T>>
        })
        .collect();
    Rulebook::new(rules, 2 * horizon).expect("five rules over a positive horizon")
}
