//! Lexicographic multi-objective optimization via asymptotic penalty
//! scalarization, with continuation-style solvers and autonomous-vehicle
//! motion-planning scenarios.

pub mod catalog;
pub mod error;
pub mod rulebook;
pub mod scalar;
pub mod scalarization;
pub mod rules_av;
pub mod scenario;
pub mod solvers;
pub mod sweep;
pub mod vehicle;

pub use error::{Error, Result};
pub use rulebook::{lex_compare, Decision, Rank, Rule, Rulebook, ViolationVector};
pub use scalar::Real;
pub use scalarization::LambdaSchedule;
pub use solvers::{Objective, RunTrace, SolverConfig};

/// Concrete double-precision aliases.
pub type Decision64 = Decision<f64>;
pub type Rulebook64 = Rulebook<f64>;
pub type ViolationVector64 = ViolationVector<f64>;
pub type LambdaSchedule64 = LambdaSchedule<f64>;

/// Concrete single-precision aliases.
pub type Decision32 = Decision<f32>;
pub type Rulebook32 = Rulebook<f32>;
pub type ViolationVector32 = ViolationVector<f32>;
pub type LambdaSchedule32 = LambdaSchedule<f32>;
