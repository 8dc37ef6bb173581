use std::cmp::Ordering;

use rand::Rng;

use super::reals::real_sequence;
use super::{Dyadic, Reals};
use crate::monoid::{NullFamily, OrderedMonoid, SampleSequence, ScalableMonoid, SequenceSampler};

/// `M^m` with coordinate-wise addition and order.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerMonoid<M> {
    pub base: M,
    pub dim: usize,
}

/// `ℝᵐ≥0` with coordinate-wise order.
pub type VectorMonoid = PowerMonoid<Reals>;

impl<M> PowerMonoid<M> {
    pub fn new(base: M, dim: usize) -> Self {
        Self { base, dim }
    }
}

impl VectorMonoid {
    pub fn reals(dim: usize) -> Self {
        Self::new(Reals::default(), dim)
    }
}

/// Combines coordinate orderings: equal if all equal, `Less`/`Greater` if
/// all coordinates agree up to equality, incomparable otherwise.
pub(crate) fn combine_orderings(
    it: impl IntoIterator<Item = Option<Ordering>>,
) -> Option<Ordering> {
    let mut acc = Ordering::Equal;
    for o in it {
        match (acc, o?) {
            (_, Ordering::Equal) => {}
            (Ordering::Equal, o) => acc = o,
            (a, o) if a == o => {}
            _ => return None,
        }
    }
    Some(acc)
}

impl<M: OrderedMonoid> OrderedMonoid for PowerMonoid<M> {
    type Elem = Vec<M::Elem>;

    fn zero(&self) -> Self::Elem {
        vec![self.base.zero(); self.dim]
    }

    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        debug_assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(x, y)| self.base.add(x, y)).collect()
    }

    fn compare(&self, a: &Self::Elem, b: &Self::Elem) -> Option<Ordering> {
        if a.len() != b.len() {
            return None;
        }
        combine_orderings(a.iter().zip(b).map(|(x, y)| self.base.compare(x, y)))
    }

    fn sup(&self, a: &Self::Elem, b: &Self::Elem) -> Option<Self::Elem> {
        a.iter().zip(b).map(|(x, y)| self.base.sup(x, y)).collect()
    }

    fn inf(&self, a: &Self::Elem, b: &Self::Elem) -> Option<Self::Elem> {
        a.iter().zip(b).map(|(x, y)| self.base.inf(x, y)).collect()
    }

    fn has_sup(&self) -> bool {
        self.base.has_sup()
    }

    fn is_cancellative(&self) -> bool {
        self.base.is_cancellative()
    }

    fn difference_candidates(&self, a: &Self::Elem, b: &Self::Elem) -> Vec<Self::Elem> {
        let per: Vec<Vec<M::Elem>> = a
            .iter()
            .zip(b)
            .map(|(x, y)| self.base.difference_candidates(x, y))
            .collect();
        if per.iter().any(|c| c.is_empty()) {
            return Vec::new();
        }
        // one witness per coordinate choice; closed forms give one each
        let mut out = vec![Vec::with_capacity(self.dim)];
        for cands in per {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    cands.iter().map(move |c| {
                        let mut v = prefix.clone();
                        v.push(c.clone());
                        v
                    })
                })
                .collect();
        }
        out
    }

    fn render(&self, a: &Self::Elem) -> String {
        let parts: Vec<String> = a.iter().map(|x| self.base.render(x)).collect();
        format!("({})", parts.join(", "))
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Elem {
        (0..self.dim).map(|_| self.base.sample(rng)).collect()
    }

    fn sample_below<R: Rng + ?Sized>(&self, x: &Self::Elem, rng: &mut R) -> Self::Elem {
        x.iter().map(|xi| self.base.sample_below(xi, rng)).collect()
    }
}

impl<M: ScalableMonoid> ScalableMonoid for PowerMonoid<M> {
    fn scale(&self, q: f64, a: &Self::Elem) -> Self::Elem {
        a.iter().map(|x| self.base.scale(q, x)).collect()
    }
}

/// Coordinate-wise ε-family `(eps(k), …, eps(k))` on `M^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerFamily<F> {
    pub base: F,
    pub dim: usize,
}

impl<F> PowerFamily<F> {
    pub fn new(base: F, dim: usize) -> Self {
        Self { base, dim }
    }
}

impl<M: OrderedMonoid, F: NullFamily<M>> NullFamily<PowerMonoid<M>> for PowerFamily<F> {
    fn eps(&self, k: usize) -> Vec<M::Elem> {
        vec![self.base.eps(k); self.dim]
    }

    fn halving(&self, monoid: &PowerMonoid<M>, eps: &Vec<M::Elem>) -> Option<Vec<M::Elem>> {
        eps.iter()
            .map(|e| self.base.halving(&monoid.base, e))
            .collect()
    }

    fn levels(&self) -> Option<usize> {
        self.base.levels()
    }

    fn closed_under_sup(&self) -> bool {
        self.base.closed_under_sup()
    }
}

impl PowerFamily<Dyadic> {
    pub fn dyadic(dim: usize) -> Self {
        Self::new(Dyadic, dim)
    }
}

impl SequenceSampler for VectorMonoid {
    fn sample_sequence<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        null: bool,
    ) -> SampleSequence<Vec<f64>> {
        // a non-null vector sequence needs only one non-null coordinate
        let bad = if null {
            None
        } else {
            Some(rng.gen_range(0..self.dim))
        };
        let coords: Vec<_> = (0..self.dim)
            .map(|i| real_sequence(rng, bad != Some(i)).1)
            .collect();
        let label = match bad {
            None => format!("null vector sequence in R^{}", self.dim),
            Some(i) => format!("vector sequence with non-null coordinate {i}"),
        };
        SampleSequence::new(label, null, move |n| coords.iter().map(|f| f(n)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monoid::{monoid_axiom_suite, null_family_axiom_suite, Horizon};

    #[test]
    fn mixed_coordinates_are_incomparable() {
        let m = VectorMonoid::reals(2);
        assert_eq!(m.compare(&vec![1.0, 0.0], &vec![0.0, 1.0]), None);
        assert_eq!(
            m.compare(&vec![0.0, 0.0], &vec![0.0, 1.0]),
            Some(Ordering::Less)
        );
        assert_eq!(
            m.compare(&vec![2.0, 1.0], &vec![2.0, 1.0]),
            Some(Ordering::Equal)
        );
        assert!(!m.leq(&vec![1.0, 0.0], &vec![0.0, 1.0]));
        assert!(!m.leq(&vec![0.0, 1.0], &vec![1.0, 0.0]));
    }

    #[test]
    fn sup_and_inf_are_coordinate_wise() {
        let m = VectorMonoid::reals(3);
        let a = vec![1.0, 5.0, 2.0];
        let b = vec![3.0, 0.5, 2.0];
        assert_eq!(m.sup(&a, &b).unwrap(), vec![3.0, 5.0, 2.0]);
        assert_eq!(m.inf(&a, &b).unwrap(), vec![1.0, 0.5, 2.0]);
    }

    #[test]
    fn axiom_suites_pass() {
        let m = VectorMonoid::reals(3);
        let report = monoid_axiom_suite(&m, 300, 11);
        assert!(report.all_pass(), "{}", report.to_json());
        let samples = m.sample_sequences(40, 11);
        let fam = PowerFamily::dyadic(3);
        let report = null_family_axiom_suite(&m, &fam, &samples, Horizon::new(24, 64), 11);
        assert!(report.all_pass(), "{}", report.to_json());
    }
}
