use serde::Serialize;
use serde_json::{json, Value};

use super::operator::{Certificate, ContractionOperator};
use super::EngineError;
use crate::monoid::OrderedMonoid;
use crate::space::{Dist, DistanceSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Uniqueness {
    Unique,
    WithinComparablePoints,
    NotClaimed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination<P, E> {
    Converged {
        fixpoint: P,
        residual: E,
        iterations: usize,
    },
    MaxIterExhausted {
        iterations: usize,
    },
    CertificateFailed,
    DivergenceDetected {
        step: usize,
    },
    OrbitContractionViolated {
        step: usize,
    },
    NotMonotoneStart,
    OrderViolated {
        step: usize,
    },
}

impl<P, E> Termination<P, E> {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Converged { .. } => "converged",
            Termination::MaxIterExhausted { .. } => "max-iter-exhausted",
            Termination::CertificateFailed => "certificate-failed",
            Termination::DivergenceDetected { .. } => "divergence-detected",
            Termination::OrbitContractionViolated { .. } => "orbit-contraction-violated",
            Termination::NotMonotoneStart => "not-monotone-start",
            Termination::OrderViolated { .. } => "order-violated",
        }
    }
}

/// Result of a sampled hypothesis check: counts and the first violation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SampledCheck {
    pub property: String,
    pub pairs: usize,
    pub violations: usize,
    pub first_violation: Option<String>,
}

impl SampledCheck {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Record of a Picard run. `step_dists[n] = d(xₙ, xₙ₊₁)`, which is also the
/// residual of `xₙ`.
#[derive(Debug, Clone)]
pub struct IterationTrace<P, E> {
    pub variant: String,
    pub iterates: Vec<P>,
    pub step_dists: Vec<E>,
    pub certificate: Certificate,
    pub termination: Termination<P, E>,
    pub uniqueness: Uniqueness,
    pub checks: Vec<SampledCheck>,
    /// First step where the orbit bound `dₙ ≤ λ(dₙ₋₁)` failed, when it was
    /// monitored.
    pub orbit_violation: Option<usize>,
    pub notes: Vec<String>,
}

impl<P, E> IterationTrace<P, E> {
    pub(crate) fn empty(variant: &str, uniqueness: Uniqueness) -> Self {
        Self {
            variant: variant.to_string(),
            iterates: Vec::new(),
            step_dists: Vec::new(),
            certificate: Certificate::new(super::Verdict::Inconclusive, "none", "not run"),
            termination: Termination::CertificateFailed,
            uniqueness,
            checks: Vec::new(),
            orbit_violation: None,
            notes: Vec::new(),
        }
    }

    pub fn converged(&self) -> bool {
        matches!(self.termination, Termination::Converged { .. })
    }

    pub fn fixpoint(&self) -> Option<&P> {
        match &self.termination {
            Termination::Converged { fixpoint, .. } => Some(fixpoint),
            _ => None,
        }
    }

    pub fn residual(&self) -> Option<&E> {
        match &self.termination {
            Termination::Converged { residual, .. } => Some(residual),
            _ => None,
        }
    }

    /// Number of Picard steps taken before termination.
    pub fn iterations(&self) -> usize {
        match &self.termination {
            Termination::Converged { iterations, .. }
            | Termination::MaxIterExhausted { iterations } => *iterations,
            _ => self.iterates.len().saturating_sub(1),
        }
    }

    /// First `n ≥ 1` with `step_dists[n] ≰ λ(step_dists[n−1])`.
    pub fn step_bound_violation<M>(
        &self,
        lambda: &ContractionOperator<M>,
        monoid: &M,
    ) -> Option<usize>
    where
        M: OrderedMonoid<Elem = E>,
    {
        (1..self.step_dists.len())
            .find(|&n| !monoid.leq(&self.step_dists[n], &lambda.apply(&self.step_dists[n - 1])))
    }

    /// Structured rendering with per-step records `{n, point, step_dist,
    /// residual}`.
    pub fn to_json<S>(&self, space: &S) -> Value
    where
        S: DistanceSpace<Point = P>,
        S::Monoid: OrderedMonoid<Elem = E>,
        Dist<S>: Clone,
    {
        let steps: Vec<Value> = self
            .iterates
            .iter()
            .enumerate()
            .map(|(n, p)| {
                json!({
                    "n": n,
                    "point": space.render_point(p),
                    "step_dist": n.checked_sub(1).and_then(|k| self.step_dists.get(k)).map(|d| space.render_dist(d)),
                    "residual": self.step_dists.get(n).map(|d| space.render_dist(d)),
                })
            })
            .collect();
        let termination = match &self.termination {
            Termination::Converged {
                fixpoint,
                residual,
                iterations,
            } => json!({
                "reason": self.termination.label(),
                "fixpoint": space.render_point(fixpoint),
                "residual": space.render_dist(residual),
                "iterations": iterations,
            }),
            Termination::MaxIterExhausted { iterations } => {
                json!({ "reason": self.termination.label(), "iterations": iterations })
            }
            Termination::DivergenceDetected { step }
            | Termination::OrbitContractionViolated { step }
            | Termination::OrderViolated { step } => {
                json!({ "reason": self.termination.label(), "step": step })
            }
            Termination::CertificateFailed | Termination::NotMonotoneStart => {
                json!({ "reason": self.termination.label() })
            }
        };
        json!({
            "variant": self.variant,
            "certificate": self.certificate,
            "uniqueness": self.uniqueness,
            "checks": self.checks,
            "orbit_violation": self.orbit_violation,
            "notes": self.notes,
            "steps": steps,
            "termination": termination,
        })
    }
}

/// A failed solve together with the partial trace.
#[derive(Debug, Clone)]
pub struct SolveFailure<P, E> {
    pub error: EngineError,
    pub trace: Box<IterationTrace<P, E>>,
}

impl<P, E> std::fmt::Display for SolveFailure<P, E> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.error.fmt(f)
    }
}

impl<P: std::fmt::Debug, E: std::fmt::Debug> std::error::Error for SolveFailure<P, E> {}

pub type SolveResult<P, E> = Result<IterationTrace<P, E>, SolveFailure<P, E>>;
