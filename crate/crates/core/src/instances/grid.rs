use std::cmp::Ordering;
use std::sync::Arc;

use rand::Rng;

use super::{Dyadic, InstanceError, VectorMonoid};
use crate::monoid::{NullFamily, OrderedMonoid, SampleSequence, ScalableMonoid, SequenceSampler};

/// Non-negative functions on a fixed finite grid `t₁ < … < t_N`, stored by
/// node value, with pointwise addition and order. A finite stand-in for
/// `C(T, ℝ₊)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunctionMonoid {
    nodes: Arc<[f64]>,
    pointwise: VectorMonoid,
}

impl GridFunctionMonoid {
    pub fn new(nodes: impl Into<Arc<[f64]>>) -> Result<Self, InstanceError> {
        let nodes = nodes.into();
        if nodes.is_empty() {
            return Err(InstanceError::EmptyGrid);
        }
        let n = nodes.len();
        Ok(Self {
            nodes,
            pointwise: VectorMonoid::reals(n),
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.nodes == other.nodes
    }

    /// Validates node values for this grid.
    pub fn function(&self, values: Vec<f64>) -> Result<Vec<f64>, InstanceError> {
        if values.len() != self.len() {
            return Err(InstanceError::GridMismatch {
                expected: self.len(),
                found: values.len(),
            });
        }
        Ok(values)
    }

    pub fn from_fn(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&t| f(t)).collect()
    }

    pub fn constant(&self, c: f64) -> Vec<f64> {
        vec![c; self.len()]
    }

    /// Sup over nodes.
    pub fn sup_norm(&self, a: &[f64]) -> f64 {
        a.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl OrderedMonoid for GridFunctionMonoid {
    type Elem = Vec<f64>;

    fn zero(&self) -> Vec<f64> {
        self.pointwise.zero()
    }

    fn add(&self, a: &Vec<f64>, b: &Vec<f64>) -> Vec<f64> {
        assert_eq!(a.len(), self.len(), "grid function on a different grid");
        assert_eq!(b.len(), self.len(), "grid function on a different grid");
        self.pointwise.add(a, b)
    }

    fn compare(&self, a: &Vec<f64>, b: &Vec<f64>) -> Option<Ordering> {
        self.pointwise.compare(a, b)
    }

    fn sup(&self, a: &Vec<f64>, b: &Vec<f64>) -> Option<Vec<f64>> {
        self.pointwise.sup(a, b)
    }

    fn inf(&self, a: &Vec<f64>, b: &Vec<f64>) -> Option<Vec<f64>> {
        self.pointwise.inf(a, b)
    }

    fn has_sup(&self) -> bool {
        true
    }

    fn is_cancellative(&self) -> bool {
        true
    }

    fn difference_candidates(&self, a: &Vec<f64>, b: &Vec<f64>) -> Vec<Vec<f64>> {
        self.pointwise.difference_candidates(a, b)
    }

    fn render(&self, a: &Vec<f64>) -> String {
        self.pointwise.render(a)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.pointwise.sample(rng)
    }

    fn sample_below<R: Rng + ?Sized>(&self, x: &Vec<f64>, rng: &mut R) -> Vec<f64> {
        self.pointwise.sample_below(x, rng)
    }
}

impl ScalableMonoid for GridFunctionMonoid {
    fn scale(&self, q: f64, a: &Vec<f64>) -> Vec<f64> {
        a.iter().map(|x| q * x).collect()
    }
}

impl SequenceSampler for GridFunctionMonoid {
    fn sample_sequence<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        null: bool,
    ) -> SampleSequence<Vec<f64>> {
        let s = self.pointwise.sample_sequence(rng, null);
        let label = format!("grid {}", s.label);
        SampleSequence::new(label, null, move |n| s.term(n))
    }
}

/// Constant functions `2^{-k}` on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridFamily {
    pub nodes: usize,
}

impl NullFamily<GridFunctionMonoid> for GridFamily {
    fn eps(&self, k: usize) -> Vec<f64> {
        vec![Dyadic::value(k); self.nodes]
    }

    fn halving(&self, _monoid: &GridFunctionMonoid, eps: &Vec<f64>) -> Option<Vec<f64>> {
        Some(eps.iter().map(|e| e / 2.0).collect())
    }

    fn closed_under_sup(&self) -> bool {
        true
    }
}
