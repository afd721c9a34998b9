//! Decisions, rules, rulebooks, violation vectors, rank, and the induced
//! lexicographic comparison.
//!
//! A rule maps a decision to a non-negative violation value and is
//! differentiable, with stationary points exactly where it is satisfied.
//! Rules are ordered by strictly decreasing importance: index 0 is the most
//! important rule.

use std::cmp::Ordering;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{norm, Real};

/// A decision: a finite-dimensional real vector. For the AV scenarios this is
/// interleaved (acceleration, steering) per horizon step.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision<T: Real> {
    values: Vec<T>,
}

impl<T: Real> Decision<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::RejectedInput("decision must be non-empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::RejectedInput(
                "decision entries must be finite".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}

impl<T: Real> AsRef<[T]> for Decision<T> {
    fn as_ref(&self) -> &[T] {
        &self.values
    }
}

/// A differentiable non-negative violation function over one decision space.
pub trait Rule<T: Real>: Send + Sync {
    fn id(&self) -> &str;

    /// Non-negative violation of the rule at `x`.
    fn evaluate(&self, x: &[T]) -> T;

    /// Gradient of the violation with respect to `x`; same length as `x`.
    fn gradient(&self, x: &[T]) -> Vec<T>;
}

/// A rule defined by closures. Convenient for synthetic rulebooks and tests.
pub struct FnRule<T: Real> {
    id: String,
    eval: Box<dyn Fn(&[T]) -> T + Send + Sync>,
    grad: Box<dyn Fn(&[T]) -> Vec<T> + Send + Sync>,
}

impl<T: Real> FnRule<T> {
    pub fn new(
        id: impl Into<String>,
        eval: impl Fn(&[T]) -> T + Send + Sync + 'static,
        grad: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            id: id.into(),
            eval: Box::new(eval),
            grad: Box::new(grad),
        }
    }
}

impl<T: Real> Rule<T> for FnRule<T> {
    fn id(&self) -> &str {
        &self.id
    }

    fn evaluate(&self, x: &[T]) -> T {
        (self.eval)(x)
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        (self.grad)(x)
    }
}

/// A totally ordered, finite list of rules sharing one decision space.
/// Index 0 is the most important rule.
#[derive(Clone)]
pub struct Rulebook<T: Real> {
    rules: Vec<Arc<dyn Rule<T>>>,
    dim: usize,
}

impl<T: Real> Rulebook<T> {
    pub fn new(rules: Vec<Arc<dyn Rule<T>>>, dim: usize) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::RejectedInput(
                "rulebook must contain at least one rule".into(),
            ));
        }
        if dim == 0 {
            return Err(Error::RejectedInput(
                "decision dimension must be positive".into(),
            ));
        }
        Ok(Self { rules, dim })
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rule(&self, i: usize) -> &dyn Rule<T> {
        self.rules[i].as_ref()
    }

    pub fn rules(&self) -> &[Arc<dyn Rule<T>>] {
        &self.rules
    }

    fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Evaluates every rule at `x`, ordered by rule index.
    pub fn violations(&self, x: &[T]) -> Result<ViolationVector<T>> {
        self.check_dim(x)?;
        Ok(ViolationVector {
            values: self.rules.iter().map(|r| r.evaluate(x)).collect(),
        })
    }

    /// Index of the most important rule violated beyond `eps_rank`, or `N`
    /// when no rule is violated.
    pub fn rank(&self, x: &[T], eps_rank: T) -> Result<Rank> {
        Ok(self.violations(x)?.rank(eps_rank))
    }
}

/// Per-rule violation values at one decision, position `i` = `r_i(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationVector<T: Real> {
    values: Vec<T>,
}

impl<T: Real> ViolationVector<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn rank(&self, eps_rank: T) -> Rank {
        let n = self.values.len();
        let value = self
            .values
            .iter()
            .position(|&v| v > eps_rank)
            .unwrap_or(n);
        Rank { value, n }
    }
}

/// Rank of a decision: index of the most important violated rule, `N` when
/// every rule is satisfied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rank {
    pub value: usize,
    pub n: usize,
}

impl Rank {
    pub fn all_satisfied(&self) -> bool {
        self.value == self.n
    }
}

/// Lexicographic comparison of two violation vectors with tie tolerance
/// `eps`. This is the ground-truth comparator every scalarization is tested
/// against.
pub fn lex_compare<T: Real>(
    a: &ViolationVector<T>,
    b: &ViolationVector<T>,
    eps: T,
) -> Result<Ordering> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    for (&va, &vb) in a.values.iter().zip(&b.values) {
        if (va - vb).abs() > eps {
            return Ok(if va < vb {
                Ordering::Less
            } else {
                Ordering::Greater
            });
        }
    }
    Ok(Ordering::Equal)
}

/// A sample at which a rule is violated yet its gradient vanishes,
/// contradicting the stationarity requirement on rules.
#[derive(Debug, Clone)]
pub struct StationarityCounterexample<T: Real> {
    pub sample_index: usize,
    pub violation: T,
    pub gradient_norm: T,
}

/// Empirical audit of the testable direction of the rule stationarity
/// condition: reports every sample where the rule is violated beyond
/// `eps_rank` while its gradient norm is at most `eps_grad`.
pub fn check_rule_stationarity<T: Real>(
    rule: &dyn Rule<T>,
    samples: &[Decision<T>],
    eps_rank: T,
    eps_grad: T,
) -> Result<Vec<StationarityCounterexample<T>>> {
    if samples.is_empty() {
        return Err(Error::RejectedInput("sample list must be non-empty".into()));
    }
    let mut report = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        let violation = rule.evaluate(s.values());
        let gnorm = norm(&rule.gradient(s.values()));
        if violation > eps_rank && gnorm <= eps_grad {
            report.push(StationarityCounterexample {
                sample_index: i,
                violation,
                gradient_norm: gnorm,
            });
        }
    }
    Ok(report)
}
