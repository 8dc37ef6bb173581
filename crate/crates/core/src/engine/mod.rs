//! Picard iteration under a monoid-valued contraction condition
//! `d(f(x), f(y)) ≤ λ(d(x, y))`.
//!
//! Every solve starts with a precheck on `λ`: monotonicity is sampled and
//! the series `Σ λⁿ(α)` with `α = d(x₀, f(x₀))` must be certified Cauchy.
//! A refuted or inconclusive certificate stops the run unless
//! [`SolveOptions::override_certificate`] is set.
//!
//! The loop stops at the first `n` where both `d(xₙ₋₁, xₙ)` and the residual
//! `d(xₙ, f(xₙ))` are strictly below `eps(stop.eps_level)`.

mod multiple;
mod operator;
mod solve;
mod spectral;
mod trace;

pub use multiple::{multiple_fixpoint_solve, p_order, sigma_lift, MultipleProblem, TupleMap};
pub use operator::{
    check_monotone, matrix_certificate, precheck_lambda, Certificate, ContractionOperator,
    LambdaKind, Verdict, SPECTRAL_MAX_ITER, SPECTRAL_TOLERANCE,
};
pub(crate) use solve::solve_with_certificate;
pub use solve::{
    monotone_picard_solve, picard_solve, picard_solve_orbital, solve, uniqueness_check,
    UniquenessReport,
};
pub use spectral::{spectral_radius, SpectralError, SpectralEstimate};
pub use trace::{IterationTrace, SampledCheck, SolveFailure, SolveResult, Termination, Uniqueness};

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::monoid::Horizon;
use crate::space::DistanceSpace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("certificate {verdict:?}: {detail}")]
    CertificateRefused { verdict: Verdict, detail: String },
    #[error("λ is not monotone: {witness}")]
    NonMonotone { witness: String },
    #[error("step distances stopped decreasing; divergence detected at step {step}")]
    DivergenceDetected { step: usize },
    #[error("orbit contraction bound violated at step {step}")]
    OrbitContractionViolated { step: usize },
    #[error("start point is not below its image")]
    NotMonotoneStart,
    #[error("order chain broken between steps {step} and {}", step + 1)]
    OrderViolated { step: usize },
    #[error("σ_{map}({position}) = {value} outside 0..{arity}")]
    IndexOutOfRange {
        map: usize,
        position: usize,
        value: usize,
        arity: usize,
    },
    #[error("expected {expected} index maps or coordinates, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("problem variant is not {expected}")]
    VariantMismatch { expected: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopRule {
    pub eps_level: usize,
    pub max_iter: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            eps_level: 32,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    pub horizon: Horizon,
    pub override_certificate: bool,
    /// Consecutive non-decreasing nonzero step distances that abort a run.
    pub divergence_window: usize,
    /// Pairs drawn for sampled hypothesis checks.
    pub check_pairs: usize,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            horizon: Horizon::default(),
            override_certificate: false,
            divergence_window: 50,
            check_pairs: 200,
            seed: 0,
        }
    }
}

pub type PointMap<P> = Arc<dyn Fn(&P) -> P + Send + Sync>;
pub type PointOrder<P> = Arc<dyn Fn(&P, &P) -> bool + Send + Sync>;

/// The usual order on the real line.
pub fn real_order() -> PointOrder<f64> {
    Arc::new(|a: &f64, b: &f64| a <= b)
}

pub enum Variant<P> {
    General,
    /// The caller asserts orbital continuity; the contraction bound is
    /// monitored along the orbit only.
    Orbital,
    /// Contraction assumed on comparable pairs only. `upper_riesz` declares
    /// that the point order has binary suprema.
    Monotone {
        order: PointOrder<P>,
        upper_riesz: bool,
    },
}

impl<P> Clone for Variant<P> {
    fn clone(&self) -> Self {
        match self {
            Variant::General => Variant::General,
            Variant::Orbital => Variant::Orbital,
            Variant::Monotone { order, upper_riesz } => Variant::Monotone {
                order: Arc::clone(order),
                upper_riesz: *upper_riesz,
            },
        }
    }
}

impl<P> Variant<P> {
    pub fn label(&self) -> &'static str {
        match self {
            Variant::General => "general",
            Variant::Orbital => "orbital",
            Variant::Monotone { .. } => "monotone",
        }
    }
}

impl<P> fmt::Debug for Variant<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub struct FixpointProblem<'a, S: DistanceSpace> {
    pub space: &'a S,
    pub map: PointMap<S::Point>,
    pub lambda: ContractionOperator<S::Monoid>,
    pub x0: S::Point,
    pub stop: StopRule,
    pub variant: Variant<S::Point>,
    /// Points for the sampled hypothesis checks. The space's sampler is
    /// used when absent.
    pub samples: Option<Arc<[S::Point]>>,
}

impl<S: DistanceSpace> Clone for FixpointProblem<'_, S> {
    fn clone(&self) -> Self {
        Self {
            space: self.space,
            map: Arc::clone(&self.map),
            lambda: self.lambda.clone(),
            x0: self.x0.clone(),
            stop: self.stop,
            variant: self.variant.clone(),
            samples: self.samples.clone(),
        }
    }
}

impl<'a, S: DistanceSpace> FixpointProblem<'a, S> {
    pub fn new(
        space: &'a S,
        map: impl Fn(&S::Point) -> S::Point + Send + Sync + 'static,
        lambda: ContractionOperator<S::Monoid>,
        x0: S::Point,
    ) -> Self {
        Self {
            space,
            map: Arc::new(map),
            lambda,
            x0,
            stop: StopRule::default(),
            variant: Variant::General,
            samples: None,
        }
    }

    pub fn with_stop(mut self, stop: StopRule) -> Self {
        self.stop = stop;
        self
    }

    pub fn with_eps_level(mut self, eps_level: usize) -> Self {
        self.stop.eps_level = eps_level;
        self
    }

    pub fn with_x0(mut self, x0: S::Point) -> Self {
        self.x0 = x0;
        self
    }

    pub fn orbital(mut self) -> Self {
        self.variant = Variant::Orbital;
        self
    }

    pub fn monotone(mut self, order: PointOrder<S::Point>, upper_riesz: bool) -> Self {
        self.variant = Variant::Monotone { order, upper_riesz };
        self
    }

    pub fn with_samples(mut self, samples: Vec<S::Point>) -> Self {
        self.samples = Some(samples.into());
        self
    }
}
