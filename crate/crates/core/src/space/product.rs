use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Dist, DistanceSpace, SpaceClass, SpaceError};
use crate::instances::{PowerFamily, PowerMonoid};
use crate::monoid::{NullFamily, OrderedMonoid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProductMode {
    Sigma,
    Sup,
    Vector,
}

fn sample_tuple<S: DistanceSpace, R: Rng + ?Sized>(
    base: &S,
    m: usize,
    rng: &mut R,
) -> Vec<S::Point> {
    (0..m).map(|_| base.sample_point(rng)).collect()
}

fn render_tuple<S: DistanceSpace>(base: &S, p: &[S::Point]) -> String {
    let parts: Vec<String> = p.iter().map(|x| base.render_point(x)).collect();
    format!("({})", parts.join(", "))
}

fn check_arity(m: usize) -> Result<(), SpaceError> {
    if m == 0 {
        Err(SpaceError::EmptyProduct)
    } else {
        Ok(())
    }
}

/// `X^m` with `d(x, y) = Σ_k d(x_k, y_k)`.
#[derive(Debug, Clone)]
pub struct SigmaProduct<S> {
    pub base: S,
    pub m: usize,
}

impl<S: DistanceSpace> SigmaProduct<S> {
    pub fn new(base: S, m: usize) -> Result<Self, SpaceError> {
        check_arity(m)?;
        Ok(Self { base, m })
    }
}

impl<S: DistanceSpace> DistanceSpace for SigmaProduct<S> {
    type Point = Vec<S::Point>;
    type Monoid = S::Monoid;
    type Family = S::Family;

    fn monoid(&self) -> &S::Monoid {
        self.base.monoid()
    }

    fn family(&self) -> &S::Family {
        self.base.family()
    }

    fn dist(&self, x: &Vec<S::Point>, y: &Vec<S::Point>) -> Dist<S> {
        let m = self.base.monoid();
        x.iter()
            .zip(y)
            .fold(m.zero(), |acc, (a, b)| m.add(&acc, &self.base.dist(a, b)))
    }

    fn class(&self) -> SpaceClass {
        self.base.class()
    }

    fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Point {
        sample_tuple(&self.base, self.m, rng)
    }

    fn render_point(&self, p: &Self::Point) -> String {
        render_tuple(&self.base, p)
    }
}

/// `X^m` with `d(x, y) = ⋁_k d(x_k, y_k)`. Needs binary suprema and a null
/// family closed under them.
#[derive(Debug, Clone)]
pub struct SupProduct<S> {
    pub base: S,
    pub m: usize,
}

impl<S: DistanceSpace> SupProduct<S> {
    pub fn new(base: S, m: usize) -> Result<Self, SpaceError> {
        check_arity(m)?;
        if !base.monoid().has_sup() || !base.family().closed_under_sup() {
            return Err(SpaceError::SupUnavailable);
        }
        Ok(Self { base, m })
    }
}

impl<S: DistanceSpace> DistanceSpace for SupProduct<S> {
    type Point = Vec<S::Point>;
    type Monoid = S::Monoid;
    type Family = S::Family;

    fn monoid(&self) -> &S::Monoid {
        self.base.monoid()
    }

    fn family(&self) -> &S::Family {
        self.base.family()
    }

    fn dist(&self, x: &Vec<S::Point>, y: &Vec<S::Point>) -> Dist<S> {
        let m = self.base.monoid();
        x.iter().zip(y).fold(m.zero(), |acc, (a, b)| {
            m.sup(&acc, &self.base.dist(a, b))
                .expect("sup checked at construction")
        })
    }

    fn class(&self) -> SpaceClass {
        self.base.class()
    }

    fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Point {
        sample_tuple(&self.base, self.m, rng)
    }

    fn render_point(&self, p: &Self::Point) -> String {
        render_tuple(&self.base, p)
    }
}

/// `X^m` with the `M^m`-valued distance `(d(x_1, y_1), …, d(x_m, y_m))` and
/// the coordinate-wise null family.
#[derive(Debug, Clone)]
pub struct VectorProduct<S: DistanceSpace> {
    pub base: S,
    monoid: PowerMonoid<S::Monoid>,
    family: PowerFamily<S::Family>,
}

impl<S> VectorProduct<S>
where
    S: DistanceSpace,
    S::Monoid: Clone,
    S::Family: Clone,
{
    pub fn new(base: S, m: usize) -> Result<Self, SpaceError> {
        check_arity(m)?;
        let monoid = PowerMonoid::new(base.monoid().clone(), m);
        let family = PowerFamily::new(base.family().clone(), m);
        Ok(Self {
            base,
            monoid,
            family,
        })
    }
}

impl<S> VectorProduct<S>
where
    S: DistanceSpace,
{
    pub fn arity(&self) -> usize {
        self.monoid.dim
    }
}

impl<S> DistanceSpace for VectorProduct<S>
where
    S: DistanceSpace,
    PowerFamily<S::Family>: NullFamily<PowerMonoid<S::Monoid>>,
{
    type Point = Vec<S::Point>;
    type Monoid = PowerMonoid<S::Monoid>;
    type Family = PowerFamily<S::Family>;

    fn monoid(&self) -> &Self::Monoid {
        &self.monoid
    }

    fn family(&self) -> &Self::Family {
        &self.family
    }

    fn dist(&self, x: &Vec<S::Point>, y: &Vec<S::Point>) -> Vec<Dist<S>> {
        x.iter().zip(y).map(|(a, b)| self.base.dist(a, b)).collect()
    }

    fn class(&self) -> SpaceClass {
        self.base.class()
    }

    fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Point {
        sample_tuple(&self.base, self.arity(), rng)
    }

    fn render_point(&self, p: &Self::Point) -> String {
        render_tuple(&self.base, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{EntourageBase, EntourageSpace, RealDistance, RealLine};
    use crate::monoid::Horizon;
    use crate::space::{converges_to, sample_points, verify_space_axioms};

    fn line() -> RealLine {
        RealLine::new(RealDistance::Absolute)
    }

    #[test]
    fn products_of_the_plane() {
        let x = vec![0.0, 0.0];
        let y = vec![3.0, 4.0];
        assert_eq!(SigmaProduct::new(line(), 2).unwrap().dist(&x, &y), 7.0);
        assert_eq!(SupProduct::new(line(), 2).unwrap().dist(&x, &y), 4.0);
        assert_eq!(
            VectorProduct::new(line(), 2).unwrap().dist(&x, &y),
            vec![3.0, 4.0]
        );
    }

    #[test]
    fn arity_one_reproduces_the_base() {
        let pts = sample_points(&line(), 20, 3);
        let sig = SigmaProduct::new(line(), 1).unwrap();
        let sup = SupProduct::new(line(), 1).unwrap();
        let vec = VectorProduct::new(line(), 1).unwrap();
        for a in &pts {
            for b in &pts {
                let d = line().dist(a, b);
                assert_eq!(sig.dist(&vec![*a], &vec![*b]), d);
                assert_eq!(sup.dist(&vec![*a], &vec![*b]), d);
                assert_eq!(vec.dist(&vec![*a], &vec![*b]), vec![d]);
            }
        }
    }

    #[test]
    fn empty_and_unsupported_products_are_rejected() {
        assert_eq!(
            SigmaProduct::new(line(), 0).unwrap_err(),
            SpaceError::EmptyProduct
        );
        // entourage families are not closed under union
        let base =
            EntourageBase::partition_chain(3, &[vec![], vec![vec![0, 1]], vec![vec![0, 1, 2]]])
                .unwrap();
        let space = EntourageSpace::new(base).unwrap();
        assert_eq!(
            SupProduct::new(space, 2).unwrap_err(),
            SpaceError::SupUnavailable
        );
    }

    #[test]
    fn product_axioms_hold() {
        let s = VectorProduct::new(line(), 3).unwrap();
        let r = verify_space_axioms(&s, &sample_points(&s, 10, 1));
        assert!(r.all_pass(), "{}", r.to_json());
        let s = SigmaProduct::new(RealLine::new(RealDistance::Mixed), 2).unwrap();
        let r = verify_space_axioms(&s, &sample_points(&s, 10, 2));
        assert!(r.all_pass(), "{}", r.to_json());
    }

    #[test]
    fn vector_convergence_is_coordinate_wise() {
        let s = VectorProduct::new(line(), 2).unwrap();
        let h = Horizon::new(30, 128);
        let good = |n: u64| vec![1.0 / n as f64, 2.0 + 0.5f64.powf(n as f64)];
        assert!(converges_to(&s, good, &vec![0.0, 2.0], h)
            .unwrap()
            .is_accepted());
        let stuck = |n: u64| vec![1.0 / n as f64, 2.5];
        assert!(!converges_to(&s, stuck, &vec![0.0, 2.0], h)
            .unwrap()
            .is_accepted());
    }
}
