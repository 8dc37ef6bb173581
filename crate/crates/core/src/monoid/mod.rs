//! Partially ordered monoids and the families of null sequences that give
//! them a notion of convergence.
//!
//! An [`OrderedMonoid`] is a set with an associative addition, a neutral
//! element and a partial order compatible with addition. Convergence is not
//! defined by a norm but by a [`NullFamily`]: a decreasing generator of
//! positive elements `eps(1), eps(2), ...`. A sequence is null when it
//! eventually drops strictly below every generator element.
//!
//! Every check here is finite. Quantifiers over "all n" are replaced by a
//! [`Horizon`], and results are labelled accordingly.

mod axioms;
mod null;

pub use axioms::{monoid_axiom_suite, null_family_axiom_suite, SampleSequence, SequenceSampler};
pub use null::{
    cauchy_series_test, is_null, is_null_prefix, NullVerdict, SeriesState, SeriesStatus,
    SeriesVerdict, MAX_PROBE_INDEX,
};

use std::cmp::Ordering;
use std::fmt::Debug;

use rand::Rng;
use thiserror::Error;

/// Absolute equality tolerance used by float-backed carriers.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonoidError {
    #[error("difference requested on a non-cancellative monoid")]
    NonCancellative,
    #[error("difference is ambiguous: {first} and {second} both satisfy a = b + z")]
    Ambiguous { first: String, second: String },
    #[error("term {index} is not in the positive cone: {value}")]
    NegativeTerm { index: u64, value: String },
}

/// A partially ordered monoid `(M, +, θ, ≤)`.
///
/// `compare` is the single source of truth for the order: `Some(Equal)` is
/// the instance's equality (with tolerance for float carriers), `Some(Less)`
/// means `a ≤ b` and `a ≠ b`, `None` means incomparable.
pub trait OrderedMonoid: Send + Sync {
    type Elem: Clone + Debug + Send + Sync;

    fn zero(&self) -> Self::Elem;

    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;

    fn compare(&self, a: &Self::Elem, b: &Self::Elem) -> Option<Ordering>;

    fn sup(&self, _a: &Self::Elem, _b: &Self::Elem) -> Option<Self::Elem> {
        None
    }

    fn inf(&self, _a: &Self::Elem, _b: &Self::Elem) -> Option<Self::Elem> {
        None
    }

    /// Whether `sup` is total (upper Riesz property).
    fn has_sup(&self) -> bool {
        false
    }

    fn is_cancellative(&self) -> bool {
        false
    }

    /// Closed-form candidates `z` with `a = b + z`. Instances return every
    /// witness their search finds; [`difference`] validates them.
    fn difference_candidates(&self, _a: &Self::Elem, _b: &Self::Elem) -> Vec<Self::Elem> {
        Vec::new()
    }

    fn render(&self, a: &Self::Elem) -> String;

    /// A random element of the positive cone.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Elem;

    /// A random `y` with `θ ≤ y ≤ x`.
    fn sample_below<R: Rng + ?Sized>(&self, x: &Self::Elem, rng: &mut R) -> Self::Elem;

    fn leq(&self, a: &Self::Elem, b: &Self::Elem) -> bool {
        matches!(self.compare(a, b), Some(Ordering::Less | Ordering::Equal))
    }

    fn lt(&self, a: &Self::Elem, b: &Self::Elem) -> bool {
        self.compare(a, b) == Some(Ordering::Less)
    }

    fn approx_eq(&self, a: &Self::Elem, b: &Self::Elem) -> bool {
        self.compare(a, b) == Some(Ordering::Equal)
    }

    fn is_zero(&self, a: &Self::Elem) -> bool {
        self.approx_eq(a, &self.zero())
    }

    fn is_positive(&self, a: &Self::Elem) -> bool {
        self.leq(&self.zero(), a)
    }

    /// `a < eps` in the sense used by ε-families. Elements equal to θ within
    /// tolerance are below every positive `eps`.
    fn strictly_below(&self, a: &Self::Elem, eps: &Self::Elem) -> bool {
        self.is_zero(a) || self.lt(a, eps)
    }

    /// Left-to-right sum of a slice; θ for the empty slice.
    fn sum<'a, I>(&self, items: I) -> Self::Elem
    where
        I: IntoIterator<Item = &'a Self::Elem>,
        Self::Elem: 'a,
    {
        items
            .into_iter()
            .fold(self.zero(), |acc, x| self.add(&acc, x))
    }
}

/// Monoids that admit multiplication by a non-negative real, used to build
/// scalar contraction operators `λ(t) = q·t`.
pub trait ScalableMonoid: OrderedMonoid {
    fn scale(&self, q: f64, a: &Self::Elem) -> Self::Elem;
}

/// An ε-family `E ⊂ M₊ \ {θ}`: a decreasing generator together with the
/// halving map `ε ↦ δ` with `δ + δ ≤ ε`.
pub trait NullFamily<M: OrderedMonoid + ?Sized>: Send + Sync {
    /// Generator element at level `k ≥ 1`.
    fn eps(&self, k: usize) -> M::Elem;

    fn halving(&self, monoid: &M, eps: &M::Elem) -> Option<M::Elem>;

    /// Number of distinct levels for finite families; `None` when unbounded.
    fn levels(&self) -> Option<usize> {
        None
    }

    /// Whether `{xₙ}, {yₙ}` null implies `{xₙ ∨ yₙ}` null.
    fn closed_under_sup(&self) -> bool {
        false
    }
}

/// Finite stand-in for the quantifiers in the null and Cauchy criteria.
///
/// `levels` bounds how many generator elements are checked; `terms` bounds
/// the tail window length for lazy sequences and the prefix length for
/// series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Horizon {
    pub levels: usize,
    pub terms: u64,
}

impl Default for Horizon {
    fn default() -> Self {
        Self {
            levels: 64,
            terms: 10_000,
        }
    }
}

impl Horizon {
    pub fn new(levels: usize, terms: u64) -> Self {
        Self { levels, terms }
    }

    pub(crate) fn effective_levels<M, F>(&self, fam: &F) -> usize
    where
        M: OrderedMonoid + ?Sized,
        F: NullFamily<M> + ?Sized,
    {
        fam.levels()
            .map_or(self.levels, |n| n.min(self.levels))
            .max(1)
    }
}

/// `a ⊖ b`: the unique `z` with `a = b + z`, if it exists.
pub fn difference<M: OrderedMonoid + ?Sized>(
    monoid: &M,
    a: &M::Elem,
    b: &M::Elem,
) -> Result<Option<M::Elem>, MonoidError> {
    if !monoid.is_cancellative() {
        return Err(MonoidError::NonCancellative);
    }
    let mut found: Option<M::Elem> = None;
    for z in monoid.difference_candidates(a, b) {
        if !monoid.approx_eq(&monoid.add(b, &z), a) {
            continue;
        }
        match &found {
            None => found = Some(z),
            Some(prev) if monoid.approx_eq(prev, &z) => {}
            Some(prev) => {
                return Err(MonoidError::Ambiguous {
                    first: monoid.render(prev),
                    second: monoid.render(&z),
                })
            }
        }
    }
    Ok(found)
}
