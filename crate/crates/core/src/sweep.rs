//! Single-step utility landscape sweeps over the (acceleration, steering)
//! control plane.
//!
//! At a one-step horizon the successor position is fixed by the current
//! state (the explicit Euler step applies the pre-update velocity and
//! heading), so acceleration only enters through collision severity and the
//! speed rule, while steering rotates the footprint and feeds the heading
//! lookahead of the centering rule. Sweeping the plane at several lambda
//! values shows how the penalty weighting reshapes the landscape: at small
//! lambda different rule classes trade off against each other, while at
//! large lambda any cell violating a more important rule costs more than
//! every cell that does not.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rules_av::{AvWorld, Obstacle, RoadModel, RuleScales, build_av_rulebook};
use crate::scalar::{real, Real};
use crate::scalarization::utility_normalized_of_violations;
use crate::vehicle::{VehicleParams, VehicleState};

/// Upper bound on the number of grid cells in one sweep.
pub const SWEEP_BUDGET: usize = 1_000_000;

/// Grid specification for a landscape sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec<T: Real> {
    pub accel_range: (T, T),
    pub steer_range: (T, T),
    /// Cells per axis: (acceleration, steering).
    pub resolution: (usize, usize),
    pub lambdas: Vec<T>,
    /// Rank threshold used to classify cells.
    pub eps_rank: T,
}

impl<T: Real> Default for SweepSpec<T> {
    fn default() -> Self {
        Self {
            accel_range: (real(-8.0), real(3.0)),
            // modest steering keeps the off-lane violations at the grid edge
            // negligible, so the weight ordering (not sheer violation
            // magnitude) decides the large-lambda landscape
            steer_range: (real(-0.12), real(0.12)),
            resolution: (200, 200),
            lambdas: vec![real(0.5), real(34.0)],
            eps_rank: real(1e-9),
        }
    }
}

/// One evaluated grid: `values[i * steer_count + j]` is the normalized
/// utility of cell `(accel[i], steer[j])`, `ranks` the matching rank class
/// (first violated rule index, 5 when every rule is satisfied).
#[derive(Debug, Clone)]
pub struct SweepGrid<T: Real> {
    pub lambda: T,
    pub accels: Vec<T>,
    pub steers: Vec<T>,
    pub values: Vec<T>,
    pub ranks: Vec<usize>,
}

impl<T: Real> SweepGrid<T> {
    pub fn value(&self, i: usize, j: usize) -> T {
        self.values[i * self.steers.len() + j]
    }

    pub fn rank(&self, i: usize, j: usize) -> usize {
        self.ranks[i * self.steers.len() + j]
    }
}

/// The reference single-step sweep configuration: the ego on its lane
/// centerline at 5 m/s with a pedestrian just beyond the one-step stopping
/// envelope, so the control plane contains both colliding and collision-free
/// cells.
pub fn sweep_world<T: Real>() -> (Arc<AvWorld<T>>, VehicleState<T>, T) {
    let world = Arc::new(AvWorld {
        road: RoadModel::default(),
        // one Euler step puts the ego center at x = 2.5 regardless of the
        // controls; the pedestrian sits ahead and slightly left so the
        // straight-ahead footprint grazes it while a small right-steered
        // (rotated) footprint clears without leaving the lane, giving the
        // grid colliding, off-lane, and centering-only cell classes
        obstacles: vec![Obstacle {
            x: real(6.6),
            y: real(1.2),
            radius: real(1.75),
        }],
        goal: (real(80.0), T::zero()),
        scales: RuleScales::default(),
        vehicle: VehicleParams::default(),
    });
    let state = VehicleState::new(T::zero(), T::zero(), T::zero(), real(5.0));
    (world, state, real(0.5))
}

fn axis<T: Real>(range: (T, T), count: usize) -> Vec<T> {
    if count == 1 {
        return vec![range.0];
    }
    let step = (range.1 - range.0) / real::<T>((count - 1) as f64);
    (0..count)
        .map(|k| range.0 + step * real::<T>(k as f64))
        .collect()
}

/// Evaluates the normalized utility and rank class of every cell of the
/// (acceleration, steering) grid for each requested lambda.
pub fn landscape_sweep<T: Real>(
    world: Arc<AvWorld<T>>,
    state: VehicleState<T>,
    dt: T,
    spec: &SweepSpec<T>,
) -> Result<Vec<SweepGrid<T>>> {
    let (na, ns) = spec.resolution;
    if na == 0 || ns == 0 {
        return Err(Error::RejectedInput(
            "sweep resolution must be positive on both axes".into(),
        ));
    }
    if na.saturating_mul(ns) > SWEEP_BUDGET {
        return Err(Error::RejectedInput(format!(
            "sweep grid {na}x{ns} exceeds the {SWEEP_BUDGET}-cell budget"
        )));
    }
    if spec.lambdas.is_empty() {
        return Err(Error::RejectedInput("sweep needs at least one lambda".into()));
    }
    for &l in &spec.lambdas {
        if !(l > T::zero()) || !l.is_finite() {
            return Err(Error::RejectedInput("sweep lambdas must be positive and finite".into()));
        }
    }
    let rulebook = build_av_rulebook(world, state, dt, 1);
    let accels = axis(spec.accel_range, na);
    let steers = axis(spec.steer_range, ns);

    // violations are lambda-independent; evaluate once per cell
    let mut cell_violations = Vec::with_capacity(na * ns);
    let mut ranks = Vec::with_capacity(na * ns);
    for &a in &accels {
        for &s in &steers {
            let v = rulebook.violations(&[a, s])?;
            ranks.push(v.rank(spec.eps_rank).value);
            cell_violations.push(v);
        }
    }

    let mut grids = Vec::with_capacity(spec.lambdas.len());
    for &lambda in &spec.lambdas {
        let values = cell_violations
            .iter()
            .map(|v| utility_normalized_of_violations(v, lambda))
            .collect();
        grids.push(SweepGrid {
            lambda,
            accels: accels.clone(),
            steers: steers.clone(),
            values,
            ranks: ranks.clone(),
        });
    }
    Ok(grids)
}

/// Smallest relative utility gap between a rank-0 cell and a cell of rank
/// `other` (both classes must be present). Used to exhibit cross-class
/// indifference at small lambda.
pub fn min_cross_class_gap<T: Real>(grid: &SweepGrid<T>, other: usize) -> Option<T> {
    let mut zero_vals: Vec<T> = Vec::new();
    let mut other_vals: Vec<T> = Vec::new();
    for (&v, &r) in grid.values.iter().zip(&grid.ranks) {
        if r == 0 {
            zero_vals.push(v);
        } else if r == other {
            other_vals.push(v);
        }
    }
    if zero_vals.is_empty() || other_vals.is_empty() {
        return None;
    }
    zero_vals.sort_by(|a, b| a.partial_cmp(b).expect("finite utilities"));
    let mut best: Option<T> = None;
    for &u in &other_vals {
        // binary search the closest rank-0 value
        let idx = zero_vals.partition_point(|&z| z < u);
        for k in [idx.wrapping_sub(1), idx] {
            if let Some(&z) = zero_vals.get(k) {
                let scale = u.abs().max(z.abs()).max(T::min_positive_value());
                let gap = (u - z).abs() / scale;
                best = Some(match best {
                    Some(b) if b <= gap => b,
                    _ => gap,
                });
            }
        }
    }
    best
}

/// True when every rank-0 cell has strictly greater utility than every cell
/// of any other rank class.
pub fn rank0_dominates<T: Real>(grid: &SweepGrid<T>) -> bool {
    let mut min_zero = T::infinity();
    let mut max_rest = T::neg_infinity();
    for (&v, &r) in grid.values.iter().zip(&grid.ranks) {
        if r == 0 {
            min_zero = min_zero.min(v);
        } else {
            max_rest = max_rest.max(v);
        }
    }
    min_zero.is_finite() && max_rest.is_finite() && min_zero > max_rest
}
