//! Named synthetic rulebook problems used across tests and the CLI.
//!
//! Every catalog problem is boundary-asymptotic: the last rule is a goal
//! quadratic that presses against the active hinge constraints above it, so
//! the constrained optimum is approached only as lambda grows. Ranks at the
//! optimum vary across the catalog (including rank 0 via internally
//! conflicting first rules).

use std::sync::Arc;

use crate::rulebook::{FnRule, Rule, Rulebook};
use crate::scalar::{real, Real};

/// Weighted quadratic `w * ||x - c||^2`.
pub fn quadratic_rule<T: Real>(id: &str, center: Vec<T>, weight: f64) -> Arc<dyn Rule<T>> {
    let w: T = real(weight);
    let c = center.clone();
    let cg = center;
    Arc::new(FnRule::new(
        id,
        move |x: &[T]| {
            w * x
                .iter()
                .zip(&c)
                .map(|(&xi, &ci)| (xi - ci) * (xi - ci))
                .sum::<T>()
        },
        move |x: &[T]| {
            x.iter()
                .zip(&cg)
                .map(|(&xi, &ci)| real::<T>(2.0) * w * (xi - ci))
                .collect()
        },
    ))
}

/// Halfspace constraint `a . x <= b`, violation `w * max(0, a.x - b)^2`.
pub fn hinge_halfspace<T: Real>(
    id: &str,
    normal: Vec<T>,
    offset: f64,
    weight: f64,
) -> Arc<dyn Rule<T>> {
    let w: T = real(weight);
    let b: T = real(offset);
    let a = normal.clone();
    let ag = normal;
    Arc::new(FnRule::new(
        id,
        move |x: &[T]| {
            let s = x.iter().zip(&a).map(|(&xi, &ai)| xi * ai).sum::<T>();
            let h = (s - b).max(T::zero());
            w * h * h
        },
        move |x: &[T]| {
            let s = x.iter().zip(&ag).map(|(&xi, &ai)| xi * ai).sum::<T>();
            let h = (s - b).max(T::zero());
            ag.iter().map(|&ai| real::<T>(2.0) * w * h * ai).collect()
        },
    ))
}

/// Axis-aligned box constraint, violation summed over both faces per axis.
pub fn hinge_box<T: Real>(id: &str, lo: Vec<T>, hi: Vec<T>) -> Arc<dyn Rule<T>> {
    assert_eq!(lo.len(), hi.len());
    let (l, h) = (lo.clone(), hi.clone());
    let (lg, hg) = (lo, hi);
    Arc::new(FnRule::new(
        id,
        move |x: &[T]| {
            x.iter()
                .zip(l.iter().zip(&h))
                .map(|(&xi, (&li, &hi_))| {
                    let below = (li - xi).max(T::zero());
                    let above = (xi - hi_).max(T::zero());
                    below * below + above * above
                })
                .sum()
        },
        move |x: &[T]| {
            x.iter()
                .zip(lg.iter().zip(&hg))
                .map(|(&xi, (&li, &hi_))| {
                    let below = (li - xi).max(T::zero());
                    let above = (xi - hi_).max(T::zero());
                    real::<T>(2.0) * (above - below)
                })
                .collect()
        },
    ))
}

/// Keep-in ball: violation `max(0, ||x-c||^2 - R^2)^2` (smooth at the center).
pub fn hinge_ball_keep_in<T: Real>(id: &str, center: Vec<T>, radius: f64) -> Arc<dyn Rule<T>> {
    let r2: T = real(radius * radius);
    let c = center.clone();
    let cg = center;
    Arc::new(FnRule::new(
        id,
        move |x: &[T]| {
            let d2 = x
                .iter()
                .zip(&c)
                .map(|(&xi, &ci)| (xi - ci) * (xi - ci))
                .sum::<T>();
            let h = (d2 - r2).max(T::zero());
            h * h
        },
        move |x: &[T]| {
            let d2 = x
                .iter()
                .zip(&cg)
                .map(|(&xi, &ci)| (xi - ci) * (xi - ci))
                .sum::<T>();
            let h = (d2 - r2).max(T::zero());
            x.iter()
                .zip(&cg)
                .map(|(&xi, &ci)| real::<T>(4.0) * h * (xi - ci))
                .collect()
        },
    ))
}

/// Keep-out ball: violation `max(0, R^2 - ||x-c||^2)^2`.
pub fn hinge_ball_keep_out<T: Real>(id: &str, center: Vec<T>, radius: f64) -> Arc<dyn Rule<T>> {
    let r2: T = real(radius * radius);
    let c = center.clone();
    let cg = center;
    Arc::new(FnRule::new(
        id,
        move |x: &[T]| {
            let d2 = x
                .iter()
                .zip(&c)
                .map(|(&xi, &ci)| (xi - ci) * (xi - ci))
                .sum::<T>();
            let h = (r2 - d2).max(T::zero());
            h * h
        },
        move |x: &[T]| {
            let d2 = x
                .iter()
                .zip(&cg)
                .map(|(&xi, &ci)| (xi - ci) * (xi - ci))
                .sum::<T>();
            let h = (r2 - d2).max(T::zero());
            x.iter()
                .zip(&cg)
                .map(|(&xi, &ci)| -real::<T>(4.0) * h * (xi - ci))
                .collect()
        },
    ))
}

/// Internally conflicting 1-D rule on coordinate `axis`: requires both
/// `x <= lo` and `x >= hi` with `lo < hi`, so it is violated everywhere.
pub fn conflicting_interval<T: Real>(id: &str, axis: usize, lo: f64, hi: f64) -> Arc<dyn Rule<T>> {
    assert!(lo < hi);
    let (l, h): (T, T) = (real(lo), real(hi));
    Arc::new(FnRule::new(
        id,
        move |x: &[T]| {
            let above = (x[axis] - l).max(T::zero());
            let below = (h - x[axis]).max(T::zero());
            above * above + below * below
        },
        move |x: &[T]| {
            let above = (x[axis] - l).max(T::zero());
            let below = (h - x[axis]).max(T::zero());
            let mut g = vec![T::zero(); x.len()];
            g[axis] = real::<T>(2.0) * (above - below);
            g
        },
    ))
}

/// A named benchmark problem with bounds for the grid oracle.
pub struct CatalogProblem<T: Real> {
    pub id: &'static str,
    pub rulebook: Rulebook<T>,
    pub bounds: Vec<(T, T)>,
    /// Grid resolution that keeps the oracle within budget for this dim.
    pub grid_points_per_dim: usize,
    /// Rank at the lexicographic optimum (number of satisfiable lead rules).
    pub optimum_rank: usize,
}

fn b<T: Real>(pairs: &[(f64, f64)]) -> Vec<(T, T)> {
    pairs.iter().map(|&(lo, hi)| (real(lo), real(hi))).collect()
}

fn problem<T: Real>(
    id: &'static str,
    rules: Vec<Arc<dyn Rule<T>>>,
    bounds: &[(f64, f64)],
    optimum_rank: usize,
) -> CatalogProblem<T> {
    let dim = bounds.len();
    let grid_points_per_dim = match dim {
        1 => 601,
        2 => 301,
        _ => 81,
    };
    CatalogProblem {
        id,
        rulebook: Rulebook::new(rules, dim).expect("catalog problems are well-formed"),
        bounds: b(bounds),
        grid_points_per_dim,
        optimum_rank,
    }
}

/// All benchmark problems.
pub fn catalog<T: Real>() -> Vec<CatalogProblem<T>> {
    vec![
        problem(
            "hinge_goal_1d",
            vec![
                hinge_halfspace("nonpos", vec![real(1.0)], 0.0, 1.0),
                quadratic_rule("goal_2", vec![real(2.0)], 1.0),
            ],
            &[(-1.0, 3.0)],
            1,
        ),
        problem(
            "box_goal_1d",
            vec![
                hinge_box("unit_box", vec![real(-1.0)], vec![real(1.0)]),
                quadratic_rule("goal_3", vec![real(3.0)], 1.0),
            ],
            &[(-2.0, 4.0)],
            1,
        ),
        problem(
            "two_hinges_goal_1d",
            vec![
                hinge_halfspace("below_1", vec![real(1.0)], 1.0, 1.0),
                hinge_halfspace("above_0", vec![real(-1.0)], 0.0, 1.0),
                quadratic_rule("goal_5", vec![real(5.0)], 1.0),
            ],
            &[(-1.0, 6.0)],
            2,
        ),
        problem(
            "conflict_first_1d",
            vec![
                conflicting_interval("conflict", 0, 0.0, 1.0),
                quadratic_rule("goal_2", vec![real(2.0)], 1.0),
            ],
            &[(-1.0, 2.0)],
            0,
        ),
        problem(
            "deep_chain_1d",
            vec![
                hinge_halfspace("above_0", vec![real(-1.0)], 0.0, 1.0),
                hinge_halfspace("below_1", vec![real(1.0)], 1.0, 1.0),
                hinge_halfspace("above_02", vec![real(-1.0)], -0.2, 1.0),
                quadratic_rule("goal_4", vec![real(4.0)], 1.0),
            ],
            &[(-1.0, 5.0)],
            3,
        ),
        problem(
            "scaled_hinge_1d",
            vec![
                hinge_halfspace("stiff_nonpos", vec![real(1.0)], 0.0, 100.0),
                quadratic_rule("soft_goal_1", vec![real(1.0)], 0.01),
            ],
            &[(-1.0, 2.0)],
            1,
        ),
        problem(
            "tight_box_1d",
            vec![
                hinge_box("tight", vec![real(0.4)], vec![real(0.6)]),
                quadratic_rule("goal_1", vec![real(1.0)], 1.0),
            ],
            &[(-0.5, 1.5)],
            1,
        ),
        problem(
            "steep_goal_1d",
            vec![
                hinge_halfspace("nonpos", vec![real(1.0)], 0.0, 1.0),
                quadratic_rule("steep_goal", vec![real(3.0)], 50.0),
            ],
            &[(-1.0, 4.0)],
            1,
        ),
        problem(
            "halfspace_goal_2d",
            vec![
                hinge_halfspace("diag", vec![real(1.0), real(1.0)], 1.0, 1.0),
                quadratic_rule("goal_22", vec![real(2.0), real(2.0)], 1.0),
            ],
            &[(-1.0, 3.0), (-1.0, 3.0)],
            1,
        ),
        problem(
            "two_halfspaces_2d",
            vec![
                hinge_halfspace("x_nonpos", vec![real(1.0), real(0.0)], 0.0, 1.0),
                hinge_halfspace("y_nonpos", vec![real(0.0), real(1.0)], 0.0, 1.0),
                quadratic_rule("goal_11", vec![real(1.0), real(1.0)], 1.0),
            ],
            &[(-2.0, 2.0), (-2.0, 2.0)],
            2,
        ),
        problem(
            "ball_goal_2d",
            vec![
                hinge_ball_keep_in("unit_ball", vec![real(0.0), real(0.0)], 1.0),
                quadratic_rule("goal_30", vec![real(3.0), real(0.0)], 1.0),
            ],
            &[(-2.0, 4.0), (-2.0, 2.0)],
            1,
        ),
        problem(
            "keepout_goal_2d",
            vec![
                hinge_ball_keep_out("keep_out", vec![real(1.0), real(0.0)], 1.0),
                quadratic_rule("goal_inside", vec![real(0.5), real(0.0)], 1.0),
            ],
            &[(-1.5, 3.5), (-2.0, 2.0)],
            1,
        ),
        problem(
            "box_corner_2d",
            vec![
                hinge_box(
                    "unit_box",
                    vec![real(0.0), real(0.0)],
                    vec![real(1.0), real(1.0)],
                ),
                quadratic_rule("goal_23", vec![real(2.0), real(3.0)], 1.0),
            ],
            &[(-1.0, 3.0), (-1.0, 4.0)],
            1,
        ),
        problem(
            "strip_goal_2d",
            vec![
                hinge_box("y_strip", vec![real(-10.0), real(-0.1)], vec![real(10.0), real(0.1)]),
                hinge_halfspace("x_nonpos", vec![real(1.0), real(0.0)], 0.0, 1.0),
                quadratic_rule("goal_21", vec![real(2.0), real(1.0)], 1.0),
            ],
            &[(-2.0, 3.0), (-1.0, 2.0)],
            2,
        ),
        problem(
            "conflict_then_goal_2d",
            vec![
                conflicting_interval("conflict_x", 0, 0.0, 1.0),
                quadratic_rule("goal_20", vec![real(2.0), real(0.0)], 1.0),
            ],
            &[(-1.0, 3.0), (-1.0, 1.0)],
            0,
        ),
        problem(
            "anisotropic_2d",
            vec![
                hinge_halfspace("slanted", vec![real(3.0), real(1.0)], 1.0, 1.0),
                quadratic_rule("stiff_goal", vec![real(1.0), real(2.0)], 10.0),
            ],
            &[(-2.0, 2.0), (-2.0, 4.0)],
            1,
        ),
        problem(
            "nested_balls_2d",
            vec![
                hinge_ball_keep_in("outer", vec![real(0.0), real(0.0)], 2.0),
                hinge_ball_keep_in("inner", vec![real(1.5), real(0.0)], 1.0),
                quadratic_rule("goal_30", vec![real(3.0), real(0.0)], 1.0),
            ],
            &[(-1.0, 3.5), (-2.0, 2.0)],
            2,
        ),
        problem(
            "deep_chain_2d",
            vec![
                hinge_halfspace("y_below_1", vec![real(0.0), real(1.0)], 1.0, 1.0),
                hinge_halfspace("x_below_1", vec![real(1.0), real(0.0)], 1.0, 1.0),
                hinge_halfspace("diag_15", vec![real(1.0), real(1.0)], 1.5, 1.0),
                quadratic_rule("goal_22", vec![real(2.0), real(2.0)], 1.0),
            ],
            &[(-1.0, 3.0), (-1.0, 3.0)],
            3,
        ),
        problem(
            "halfspace_goal_3d",
            vec![
                hinge_halfspace(
                    "simplex",
                    vec![real(1.0), real(1.0), real(1.0)],
                    1.0,
                    1.0,
                ),
                quadratic_rule("goal_222", vec![real(2.0), real(2.0), real(2.0)], 1.0),
            ],
            &[(-1.0, 3.0), (-1.0, 3.0), (-1.0, 3.0)],
            1,
        ),
        problem(
            "box_goal_3d",
            vec![
                hinge_box(
                    "unit_cube",
                    vec![real(0.0), real(0.0), real(0.0)],
                    vec![real(1.0), real(1.0), real(1.0)],
                ),
                quadratic_rule("goal_222", vec![real(2.0), real(2.0), real(2.0)], 1.0),
            ],
            &[(-1.0, 3.0), (-1.0, 3.0), (-1.0, 3.0)],
            1,
        ),
        problem(
            "chain_3d",
            vec![
                hinge_halfspace("z_below_half", vec![real(0.0), real(0.0), real(1.0)], 0.5, 1.0),
                hinge_ball_keep_in("ball_15", vec![real(0.0), real(0.0), real(0.0)], 1.5),
                quadratic_rule("goal_202", vec![real(2.0), real(0.0), real(2.0)], 1.0),
            ],
            &[(-2.0, 2.0), (-2.0, 2.0), (-2.0, 2.0)],
            2,
        ),
        problem(
            "conflict_3d",
            vec![
                conflicting_interval("conflict_x", 0, 0.0, 1.0),
                quadratic_rule("goal_111", vec![real(1.0), real(1.0), real(1.0)], 1.0),
            ],
            &[(-1.0, 2.0), (-1.0, 2.0), (-1.0, 2.0)],
            0,
        ),
        problem(
            "plane_strip_3d",
            vec![
                hinge_halfspace("xy_diag", vec![real(1.0), real(1.0), real(0.0)], 1.0, 1.0),
                hinge_halfspace("z_nonpos", vec![real(0.0), real(0.0), real(1.0)], 0.0, 1.0),
                hinge_halfspace("y_above_m1", vec![real(0.0), real(-1.0), real(0.0)], 1.0, 1.0),
                quadratic_rule("goal_222", vec![real(2.0), real(2.0), real(2.0)], 1.0),
            ],
            &[(-2.0, 3.0), (-2.0, 3.0), (-2.0, 2.0)],
            3,
        ),
    ]
}

/// Look up a problem by identifier.
pub fn catalog_problem<T: Real>(id: &str) -> Option<CatalogProblem<T>> {
    catalog().into_iter().find(|p| p.id == id)
}

/// All catalog identifiers in order.
pub fn catalog_ids() -> Vec<&'static str> {
    catalog::<f64>().into_iter().map(|p| p.id).collect()
}
