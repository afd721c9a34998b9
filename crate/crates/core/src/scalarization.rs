//! Asymptotic penalty scalarization of a rulebook.
//!
//! The utility of a decision is `f(x, lambda) = sum_i lambda^(N-i) * r_i(x)`:
//! every rule gets a penalty multiplier whose exponent grows with importance,
//! so as lambda grows more important rules dominate and the scalar ordering
//! converges to the lexicographic one. The normalized variant rescales by
//! `lambda^-N` to stay inside the float range; at any fixed lambda it induces
//! the same ordering.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::rulebook::{lex_compare, Rulebook, ViolationVector};
use crate::scalar::{norm, Real};

/// Geometric lambda schedule with a saturation guard.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSchedule<T: Real> {
    pub lambda0: T,
    pub growth: T,
    pub lambda_max: T,
}

impl<T: Real> LambdaSchedule<T> {
    pub fn new(lambda0: T, growth: T, lambda_max: T) -> Result<Self> {
        if !(lambda0 > T::zero()) {
            return Err(Error::RejectedInput("lambda0 must be positive".into()));
        }
        if !(growth > T::one()) {
            return Err(Error::RejectedInput("growth must exceed 1".into()));
        }
        if lambda_max < lambda0 {
            return Err(Error::RejectedInput(
                "lambda_max must be at least lambda0".into(),
            ));
        }
        Ok(Self {
            lambda0,
            growth,
            lambda_max,
        })
    }

    /// One geometric update, saturating at `lambda_max`.
    pub fn next_lambda(&self, lambda: T) -> T {
        (self.growth * lambda).min(self.lambda_max)
    }

    pub fn saturated(&self, lambda: T) -> bool {
        lambda >= self.lambda_max
    }
}

impl<T: Real> Default for LambdaSchedule<T> {
    /// lambda0 = 0.5, growth = 2, lambda_max = 1e12.
    fn default() -> Self {
        Self {
            lambda0: crate::scalar::real(0.5),
            growth: crate::scalar::real(2.0),
            lambda_max: crate::scalar::real(1e12),
        }
    }
}

/// Raw utility `sum_i lambda^(N-i) r_i(x)`. Fails with an overflow error when
/// `lambda^N` leaves the float range; callers hitting that should switch to
/// [`utility_normalized`].
pub fn utility<T: Real>(rulebook: &Rulebook<T>, x: &[T], lambda: T) -> Result<T> {
    let v = rulebook.violations(x)?;
    utility_of_violations(&v, lambda)
}

/// Raw utility computed from a precomputed violation vector.
pub fn utility_of_violations<T: Real>(v: &ViolationVector<T>, lambda: T) -> Result<T> {
    let n = v.len();
    let top = lambda.powi(n as i32);
    if !top.is_finite() {
        return Err(Error::Overflow {
            lambda: lambda.to_f64().unwrap_or(f64::INFINITY),
            exponent: n,
        });
    }
    let mut acc = T::zero();
    for (i, &vi) in v.values().iter().enumerate() {
        acc = acc + lambda.powi((n - i) as i32) * vi;
    }
    if !acc.is_finite() {
        return Err(Error::Overflow {
            lambda: lambda.to_f64().unwrap_or(f64::INFINITY),
            exponent: n,
        });
    }
    Ok(acc)
}

/// Overflow-safe rescaling `sum_i lambda^-i r_i(x) = lambda^-N f(x, lambda)`.
/// Same argmin and pairwise ordering as [`utility`] at any fixed lambda.
pub fn utility_normalized<T: Real>(rulebook: &Rulebook<T>, x: &[T], lambda: T) -> Result<T> {
    let v = rulebook.violations(x)?;
    Ok(utility_normalized_of_violations(&v, lambda))
}

pub fn utility_normalized_of_violations<T: Real>(v: &ViolationVector<T>, lambda: T) -> T {
    v.values()
        .iter()
        .enumerate()
        .map(|(i, &vi)| lambda.powi(-(i as i32)) * vi)
        .sum()
}

/// Signed utility difference `f(x, lambda) - f(y, lambda)` evaluated
/// per-rule. Factoring the difference inside the sum keeps the sign exact
/// even when both utilities share huge leading terms that would cancel
/// catastrophically; equal violation vectors give exactly zero.
pub fn utility_difference<T: Real>(
    rulebook: &Rulebook<T>,
    x: &[T],
    y: &[T],
    lambda: T,
) -> Result<T> {
    let vx = rulebook.violations(x)?;
    let vy = rulebook.violations(y)?;
    Ok(utility_difference_of_violations(&vx, &vy, lambda))
}

/// Normalized-weight difference `sum_i lambda^-i (r_i(x) - r_i(y))`; the sign
/// matches the raw utility difference at any fixed lambda.
pub fn utility_difference_of_violations<T: Real>(
    vx: &ViolationVector<T>,
    vy: &ViolationVector<T>,
    lambda: T,
) -> T {
    debug_assert_eq!(vx.len(), vy.len());
    vx.values()
        .iter()
        .zip(vy.values())
        .enumerate()
        .map(|(i, (&a, &b))| lambda.powi(-(i as i32)) * (a - b))
        .sum()
}

/// Gradient of the utility: `sum_i lambda^(N-i) grad r_i(x)`, or the
/// `lambda^-i` weights when `normalized`.
pub fn utility_gradient<T: Real>(
    rulebook: &Rulebook<T>,
    x: &[T],
    lambda: T,
    normalized: bool,
) -> Result<Vec<T>> {
    let n = rulebook.len();
    if !normalized {
        let top = lambda.powi(n as i32);
        if !top.is_finite() {
            return Err(Error::Overflow {
                lambda: lambda.to_f64().unwrap_or(f64::INFINITY),
                exponent: n,
            });
        }
    }
    if x.len() != rulebook.dim() {
        return Err(Error::DimensionMismatch {
            expected: rulebook.dim(),
            got: x.len(),
        });
    }
    let mut acc = vec![T::zero(); x.len()];
    for (i, rule) in rulebook.rules().iter().enumerate() {
        let w = if normalized {
            lambda.powi(-(i as i32))
        } else {
            lambda.powi((n - i) as i32)
        };
        let g = rule.gradient(x);
        for (a, gi) in acc.iter_mut().zip(g) {
            *a = *a + w * gi;
        }
    }
    Ok(acc)
}

/// Ratio `||eps|| / ||lambda^(N-j) grad r_j(x)||` where `j = rank(x)` and
/// `eps` collects the lower-importance gradient terms. Diagnostic for the
/// gradient decomposition: the ratio decays as lambda grows.
///
/// Computed with weights rescaled by `lambda^-(N-j)` so it stays finite at
/// large lambda; the ratio is invariant to that common factor.
pub fn dominance_ratio<T: Real>(
    rulebook: &Rulebook<T>,
    x: &[T],
    lambda: T,
    eps_rank: T,
) -> Result<T> {
    let rank = rulebook.rank(x, eps_rank)?;
    if rank.all_satisfied() {
        return Err(Error::UndefinedRatio);
    }
    let j = rank.value;
    let lead = rulebook.rule(j).gradient(x);
    let lead_norm = norm(&lead);
    let mut tail = vec![T::zero(); x.len()];
    for (i, rule) in rulebook.rules().iter().enumerate().skip(j + 1) {
        let w = lambda.powi(-((i - j) as i32));
        for (a, gi) in tail.iter_mut().zip(rule.gradient(x)) {
            *a = *a + w * gi;
        }
    }
    Ok(norm(&tail) / lead_norm)
}

/// Outcome of sweeping a decision pair across a lambda schedule.
#[derive(Debug, Clone, PartialEq)]
pub enum RepresentabilityVerdict<T: Real> {
    /// Ground-truth strict preference, and the utility ordering agrees from
    /// `threshold` (the first lambda after which all tested lambdas agree).
    ConsistentPreference { threshold: T },
    /// Equal violation vectors give exactly equal utilities at every lambda.
    ConsistentIndifference,
    /// Disagreement persisting up to the largest tested lambda.
    Inconsistent { lambda_star: T },
}

/// Checks whether the utility ordering of `x` vs `y` agrees with the
/// lexicographic ground truth along an ascending lambda sweep.
pub fn representability_check<T: Real>(
    rulebook: &Rulebook<T>,
    x: &[T],
    y: &[T],
    lambdas: &[T],
) -> Result<RepresentabilityVerdict<T>> {
    if lambdas.is_empty() {
        return Err(Error::RejectedInput("lambda list must be non-empty".into()));
    }
    if lambdas.windows(2).any(|w| !(w[0] < w[1])) && lambdas.len() > 1 {
        return Err(Error::RejectedInput(
            "lambdas must be strictly ascending".into(),
        ));
    }
    let vx = rulebook.violations(x)?;
    let vy = rulebook.violations(y)?;
    let truth = lex_compare(&vx, &vy, T::zero())?;

    if truth == Ordering::Equal {
        for &l in lambdas {
            let d = utility_difference_of_violations(&vx, &vy, l);
            if d != T::zero() {
                return Ok(RepresentabilityVerdict::Inconsistent { lambda_star: l });
            }
        }
        return Ok(RepresentabilityVerdict::ConsistentIndifference);
    }

    let mut last_disagreement: Option<T> = None;
    for &l in lambdas {
        let d = utility_difference_of_violations(&vx, &vy, l);
        let agrees = match truth {
            Ordering::Less => d < T::zero(),
            Ordering::Greater => d > T::zero(),
            Ordering::Equal => unreachable!(),
        };
        if !agrees {
            last_disagreement = Some(l);
        }
    }
    // The agreement threshold is the first lambda strictly after the last
    // disagreement; disagreement at the top of the sweep means no threshold
    // was found.
    match last_disagreement {
        None => Ok(RepresentabilityVerdict::ConsistentPreference {
            threshold: lambdas[0],
        }),
        Some(ld) => match lambdas.iter().copied().find(|&l| l > ld) {
            Some(threshold) => Ok(RepresentabilityVerdict::ConsistentPreference { threshold }),
            None => Ok(RepresentabilityVerdict::Inconsistent { lambda_star: ld }),
        },
    }
}

/// Parameters of the differentially weighted sigmoid baseline reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwsParams<T: Real> {
    /// Geometric reward base, > 0.
    pub a: T,
    /// Step sharpness of the sigmoid surrogate, > 0.
    pub c: T,
    /// Rule count.
    pub n: usize,
}

impl<T: Real> DwsParams<T> {
    pub fn new(a: T, c: T, n: usize) -> Result<Self> {
        if !(a > T::zero()) || !(c > T::zero()) {
            return Err(Error::RejectedInput(
                "dws parameters a and c must be positive".into(),
            ));
        }
        Ok(Self { a, c, n })
    }
}

#[inline]
pub fn sigmoid<T: Real>(z: T) -> T {
    T::one() / (T::one() + (-z).exp())
}

/// Baseline reward `sum_{i=1..N} (a^(N-i+1) sigmoid(c rho_i) + rho_i / N)`
/// over per-rule robustness values (positive = satisfied). Higher is
/// preferred.
pub fn dws_reward<T: Real>(rho: &[T], params: &DwsParams<T>) -> Result<T> {
    if rho.len() != params.n {
        return Err(Error::DimensionMismatch {
            expected: params.n,
            got: rho.len(),
        });
    }
    let n = params.n;
    let nt = crate::scalar::real::<T>(n as f64);
    let mut acc = T::zero();
    for (idx, &r) in rho.iter().enumerate() {
        let i = idx + 1; // 1-based rule index
        let w = params.a.powi((n - i + 1) as i32);
        acc = acc + w * sigmoid(params.c * r) + r / nt;
    }
    Ok(acc)
}

/// Gradient of [`dws_reward`] with respect to each robustness entry.
pub fn dws_reward_gradient<T: Real>(rho: &[T], params: &DwsParams<T>) -> Result<Vec<T>> {
    if rho.len() != params.n {
        return Err(Error::DimensionMismatch {
            expected: params.n,
            got: rho.len(),
        });
    }
    let n = params.n;
    let nt = crate::scalar::real::<T>(n as f64);
    Ok(rho
        .iter()
        .enumerate()
        .map(|(idx, &r)| {
            let i = idx + 1;
            let w = params.a.powi((n - i + 1) as i32);
            let s = sigmoid(params.c * r);
            w * params.c * s * (T::one() - s) + T::one() / nt
        })
        .collect())
}

/// Adapter from violation semantics to robustness semantics: satisfied rules
/// map to a configured boundary-positive value, violated rules to their
/// negated (scaled) violation, clamped into `[clamp_min, clamp_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessConfig<T: Real> {
    pub clamp_min: T,
    pub clamp_max: T,
    pub satisfied_value: T,
    /// Per-rule violation scale divisors; empty means all ones.
    pub scales: Vec<T>,
    pub eps_rank: T,
}

impl<T: Real> RobustnessConfig<T> {
    pub fn new(clamp_min: T, clamp_max: T, satisfied_value: T) -> Self {
        Self {
            clamp_min,
            clamp_max,
            satisfied_value,
            scales: Vec::new(),
            eps_rank: crate::scalar::default_eps_rank(),
        }
    }

    pub fn with_scales(mut self, scales: Vec<T>) -> Self {
        self.scales = scales;
        self
    }
}

pub fn robustness_from_violations<T: Real>(
    v: &ViolationVector<T>,
    cfg: &RobustnessConfig<T>,
) -> Vec<T> {
    v.values()
        .iter()
        .enumerate()
        .map(|(i, &vi)| {
            if vi <= cfg.eps_rank {
                cfg.satisfied_value
            } else {
                let s = cfg.scales.get(i).copied().unwrap_or_else(T::one);
                (-vi / s).max(cfg.clamp_min).min(cfg.clamp_max)
            }
        })
        .collect()
}
