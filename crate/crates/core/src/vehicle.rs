//! Kinematic bicycle model with analytic rollout sensitivities.
//!
//! The planner's decision vector is a flat control sequence
//! `[a_0, delta_0, a_1, delta_1, ...]`; the sensitivities propagated here let
//! trajectory rules chain their state-space gradients back into that space.

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Planar vehicle state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState<T: Real> {
    pub x: T,
    pub y: T,
    pub psi: T,
    pub v: T,
}

impl<T: Real> VehicleState<T> {
    pub fn new(x: T, y: T, psi: T, v: T) -> Self {
        Self { x, y, psi, v }
    }
}

/// Acceleration and front steering angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Control<T: Real> {
    pub accel: T,
    pub steer: T,
}

/// Geometry and actuation limits.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams<T: Real> {
    pub l_f: T,
    pub l_r: T,
    pub width: T,
    pub length: T,
    pub accel_min: T,
    pub accel_max: T,
    pub steer_max: T,
}

impl<T: Real> Default for VehicleParams<T> {
    fn default() -> Self {
        Self {
            l_f: real(1.25),
            l_r: real(1.25),
            width: real(1.9),
            length: real(4.5),
            accel_min: real(-8.0),
            accel_max: real(3.0),
            steer_max: real(0.6),
        }
    }
}

impl<T: Real> VehicleParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.l_f > T::zero() && self.l_r > T::zero()) {
            return Err(Error::RejectedInput("axle distances must be positive".into()));
        }
        if !(self.accel_min < self.accel_max) {
            return Err(Error::RejectedInput(
                "accel_min must be below accel_max".into(),
            ));
        }
        if !(self.steer_max > T::zero()) {
            return Err(Error::RejectedInput("steer_max must be positive".into()));
        }
        Ok(())
    }

    pub fn wheelbase(&self) -> T {
        self.l_f + self.l_r
    }
}

/// Which limits were active during a step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClampFlags {
    pub accel_clamped: bool,
    pub steer_clamped: bool,
    pub speed_floored: bool,
}

/// One Euler step of the kinematic bicycle. Controls are clamped to the
/// actuation limits and speed is floored at zero (no reversing).
pub fn step_dynamics<T: Real>(
    state: &VehicleState<T>,
    control: &Control<T>,
    dt: T,
    params: &VehicleParams<T>,
) -> (VehicleState<T>, ClampFlags) {
    let mut flags = ClampFlags::default();
    let a = if control.accel < params.accel_min {
        flags.accel_clamped = true;
        params.accel_min
    } else if control.accel > params.accel_max {
        flags.accel_clamped = true;
        params.accel_max
    } else {
        control.accel
    };
    let delta = if control.steer < -params.steer_max {
        flags.steer_clamped = true;
        -params.steer_max
    } else if control.steer > params.steer_max {
        flags.steer_clamped = true;
        params.steer_max
    } else {
        control.steer
    };

    let beta = (params.l_r * delta.tan() / params.wheelbase()).atan();
    let heading = state.psi + beta;
    let v_next = state.v + a * dt;
    let speed_floored = v_next < T::zero();
    flags.speed_floored = speed_floored;
    let next = VehicleState {
        x: state.x + state.v * heading.cos() * dt,
        y: state.y + state.v * heading.sin() * dt,
        psi: state.psi + state.v / params.l_r * beta.sin() * dt,
        v: if speed_floored { T::zero() } else { v_next },
    };
    (next, flags)
}

/// 4x4 state Jacobian and 4x2 control Jacobian of one step, evaluated at the
/// (clamped) inputs. Clamped controls contribute zero columns.
fn step_jacobians<T: Real>(
    state: &VehicleState<T>,
    control: &Control<T>,
    dt: T,
    params: &VehicleParams<T>,
    flags: ClampFlags,
) -> ([[T; 4]; 4], [[T; 2]; 4]) {
    let delta = control
        .steer
        .max(-params.steer_max)
        .min(params.steer_max);
    let ratio = params.l_r / params.wheelbase();
    let t = delta.tan();
    let u = ratio * t;
    let beta = u.atan();
    let heading = state.psi + beta;
    let (sh, ch) = (heading.sin(), heading.cos());
    let (sb, cb) = (beta.sin(), beta.cos());

    let zero = T::zero();
    let one = T::one();
    let mut a_jac = [[zero; 4]; 4];
    a_jac[0][0] = one;
    a_jac[0][2] = -state.v * sh * dt;
    a_jac[0][3] = ch * dt;
    a_jac[1][1] = one;
    a_jac[1][2] = state.v * ch * dt;
    a_jac[1][3] = sh * dt;
    a_jac[2][2] = one;
    a_jac[2][3] = sb / params.l_r * dt;
    a_jac[3][3] = if flags.speed_floored { zero } else { one };

    let mut b_jac = [[zero; 2]; 4];
    if !flags.accel_clamped && !flags.speed_floored {
        b_jac[3][0] = dt;
    }
    if !flags.steer_clamped {
        // d beta / d delta = (l_r / L) sec^2(delta) / (1 + u^2)
        let dbeta = ratio * (one + t * t) / (one + u * u);
        b_jac[0][1] = -state.v * sh * dt * dbeta;
        b_jac[1][1] = state.v * ch * dt * dbeta;
        b_jac[2][1] = state.v / params.l_r * cb * dt * dbeta;
    }
    (a_jac, b_jac)
}

/// Forward rollout; returns `controls.len() + 1` states starting with `x0`.
pub fn rollout<T: Real>(
    x0: &VehicleState<T>,
    controls: &[Control<T>],
    dt: T,
    params: &VehicleParams<T>,
) -> Vec<VehicleState<T>> {
    let mut states = Vec::with_capacity(controls.len() + 1);
    states.push(*x0);
    let mut s = *x0;
    for u in controls {
        s = step_dynamics(&s, u, dt, params).0;
        states.push(s);
    }
    states
}

/// Rollout together with the sensitivities of every state to every earlier
/// control: `sensitivities[t][k]` is the 4x2 Jacobian of state `t + 1` with
/// respect to control `k` (zero for `k > t`).
pub struct RolloutSensitivities<T: Real> {
    pub states: Vec<VehicleState<T>>,
    pub jacobians: Vec<Vec<[[T; 2]; 4]>>,
    pub clamp_flags: Vec<ClampFlags>,
}

pub fn rollout_sensitivities<T: Real>(
    x0: &VehicleState<T>,
    controls: &[Control<T>],
    dt: T,
    params: &VehicleParams<T>,
) -> RolloutSensitivities<T> {
    let h = controls.len();
    let mut states = Vec::with_capacity(h + 1);
    states.push(*x0);
    let mut jacobians: Vec<Vec<[[T; 2]; 4]>> = Vec::with_capacity(h);
    let mut clamp_flags = Vec::with_capacity(h);
    let zero4x2 = [[T::zero(); 2]; 4];
    let mut s = *x0;

    for (t, u) in controls.iter().enumerate() {
        let (next, flags) = step_dynamics(&s, u, dt, params);
        let (a_jac, b_jac) = step_jacobians(&s, u, dt, params, flags);
        // J_{t+1,k} = A_t * J_{t,k} for k < t; J_{t+1,t} = B_t
        let prev = jacobians.last().cloned().unwrap_or_default();
        let mut row = vec![zero4x2; t + 1];
        for (k, slot) in row.iter_mut().enumerate().take(t) {
            let jk = &prev[k];
            for i in 0..4 {
                for c in 0..2 {
                    let mut acc = T::zero();
                    for m in 0..4 {
                        acc = acc + a_jac[i][m] * jk[m][c];
                    }
                    slot[i][c] = acc;
                }
            }
        }
        row[t] = b_jac;
        jacobians.push(row);
        clamp_flags.push(flags);
        s = next;
        states.push(s);
    }

    RolloutSensitivities {
        states,
        jacobians,
        clamp_flags,
    }
}

/// Parses a flat decision vector into controls (`2 * horizon` entries).
pub fn controls_from_decision<T: Real>(decision: &[T]) -> Result<Vec<Control<T>>> {
    if decision.is_empty() || decision.len() % 2 != 0 {
        return Err(Error::RejectedInput(
            "decision must hold an even, positive number of entries".into(),
        ));
    }
    Ok(decision
        .chunks_exact(2)
        .map(|c| Control {
            accel: c[0],
            steer: c[1],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::finite_diff_gradient;
    use approx::assert_relative_eq;

    fn params() -> VehicleParams<f64> {
        VehicleParams::default()
    }

    #[test]
    fn hand_derived_step() {
        // l_f = l_r = 1.25, delta = 0.1, v = 2.5: beta = atan(tan(0.1)/2)
        let s = VehicleState::new(0.0, 0.0, 0.0, 2.5);
        let u = Control {
            accel: 0.0,
            steer: 0.1,
        };
        let (next, flags) = step_dynamics(&s, &u, 0.5, &params());
        let beta = (0.1f64.tan() / 2.0).atan();
        assert_relative_eq!(beta, 0.05012531, epsilon = 1e-7);
        assert_relative_eq!(next.x, 2.5 * beta.cos() * 0.5, epsilon = 1e-12);
        assert_relative_eq!(next.y, 2.5 * beta.sin() * 0.5, epsilon = 1e-12);
        // yaw rate (v / l_r) sin(beta) = 2 * sin(beta) ~ 0.10021
        assert_relative_eq!(next.psi, 2.0 * beta.sin() * 0.5, epsilon = 1e-12);
        assert_eq!(next.v, 2.5);
        assert_eq!(flags, ClampFlags::default());
    }

    #[test]
    fn straight_line_constant_speed() {
        let s = VehicleState::new(1.0, 2.0, 0.0, 10.0);
        let u = Control {
            accel: 0.0,
            steer: 0.0,
        };
        let states = rollout(&s, &[u; 4], 0.5, &params());
        assert_eq!(states.len(), 5);
        assert_relative_eq!(states[4].x, 1.0 + 10.0 * 2.0);
        assert_relative_eq!(states[4].y, 2.0);
        assert_relative_eq!(states[4].psi, 0.0);
    }

    #[test]
    fn clamping_and_speed_floor() {
        let s = VehicleState::new(0.0, 0.0, 0.0, 1.0);
        let u = Control {
            accel: -20.0,
            steer: 1.0,
        };
        let (next, flags) = step_dynamics(&s, &u, 0.5, &params());
        assert!(flags.accel_clamped);
        assert!(flags.steer_clamped);
        assert!(flags.speed_floored);
        assert_eq!(next.v, 0.0);
        // heading change used steer_max, not the raw input
        let beta = (1.25 * 0.6f64.tan() / 2.5).atan();
        assert_relative_eq!(next.psi, 1.0 / 1.25 * beta.sin() * 0.5, epsilon = 1e-12);
    }

    #[test]
    fn sensitivities_match_finite_differences() {
        let x0 = VehicleState::new(0.0, 0.0, 0.1, 8.0);
        let p = params();
        let dt = 0.5;
        let decision = [1.0, 0.05, -0.5, -0.1, 0.2, 0.02];
        let controls = controls_from_decision(&decision).unwrap();
        let sens = rollout_sensitivities(&x0, &controls, dt, &p);

        for t in 0..controls.len() {
            for k in 0..=t {
                for comp in 0..4 {
                    let extract = |s: &VehicleState<f64>, c: usize| match c {
                        0 => s.x,
                        1 => s.y,
                        2 => s.psi,
                        _ => s.v,
                    };
                    let fd = finite_diff_gradient(
                        |d: &[f64]| {
                            let cs = controls_from_decision(d).unwrap();
                            let states = rollout(&x0, &cs, dt, &p);
                            extract(&states[t + 1], comp)
                        },
                        &decision,
                        1e-6,
                    );
                    assert_relative_eq!(
                        sens.jacobians[t][k][comp][0],
                        fd[2 * k],
                        epsilon = 1e-6,
                        max_relative = 1e-5
                    );
                    assert_relative_eq!(
                        sens.jacobians[t][k][comp][1],
                        fd[2 * k + 1],
                        epsilon = 1e-6,
                        max_relative = 1e-5
                    );
                }
            }
        }
    }

    #[test]
    fn clamped_controls_have_zero_sensitivity() {
        let x0 = VehicleState::new(0.0, 0.0, 0.0, 5.0);
        let p = params();
        let controls = [Control {
            accel: 10.0,
            steer: 0.9,
        }];
        let sens = rollout_sensitivities(&x0, &controls, 0.5, &p);
        assert!(sens.clamp_flags[0].accel_clamped);
        assert!(sens.clamp_flags[0].steer_clamped);
        for row in &sens.jacobians[0][0] {
            assert_eq!(row[0], 0.0);
            assert_eq!(row[1], 0.0);
        }
    }

    #[test]
    fn rejects_odd_decision() {
        assert!(controls_from_decision(&[1.0, 2.0, 3.0]).is_err());
        assert!(controls_from_decision::<f64>(&[]).is_err());
    }

    #[test]
    fn params_validation() {
        let mut p = params();
        assert!(p.validate().is_ok());
        p.accel_min = 5.0;
        assert!(p.validate().is_err());
    }
}
