//! Spaces with a distance valued in the positive cone of an ordered monoid.
//!
//! No triangle inequality is assumed. A [`DistanceSpace`] declares its
//! [`SpaceClass`]; the declaration is a modeling assertion that
//! [`verify_space_axioms`] samples but never proves.

mod probe;
mod product;

pub use probe::{random_paths, strong_fw_probe, subdivision_paths, FwProbe, FwWitness};
pub use product::{ProductMode, SigmaProduct, SupProduct, VectorProduct};

use std::fmt::Debug;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::monoid::{is_null, Horizon, MonoidError, NullFamily, NullVerdict, OrderedMonoid};
use crate::report::{AxiomReport, Check};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceClass {
    /// Symmetric, vanishing exactly on the diagonal.
    Distance,
    /// Additionally satisfies the triangle inequality.
    Metric,
    /// Satisfies the strong Fréchet-Wilson property.
    FmDistance,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("sup product needs a monoid with binary suprema and a null family closed under sup")]
    SupUnavailable,
    #[error("product dimension must be at least 1")]
    EmptyProduct,
}

/// Distance element type of a space.
pub type Dist<S> = <<S as DistanceSpace>::Monoid as OrderedMonoid>::Elem;

pub trait DistanceSpace: Send + Sync {
    type Point: Clone + Debug + PartialEq + Send + Sync;
    type Monoid: OrderedMonoid;
    type Family: NullFamily<Self::Monoid>;

    fn monoid(&self) -> &Self::Monoid;

    fn family(&self) -> &Self::Family;

    fn dist(&self, x: &Self::Point, y: &Self::Point) -> Dist<Self>;

    fn class(&self) -> SpaceClass;

    fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Point;

    fn render_point(&self, p: &Self::Point) -> String;

    fn render_dist(&self, d: &Dist<Self>) -> String {
        self.monoid().render(d)
    }
}

/// Seeded random points from the space's own sampler.
pub fn sample_points<S: DistanceSpace>(space: &S, count: usize, seed: u64) -> Vec<S::Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| space.sample_point(&mut rng)).collect()
}

/// Checks the distance axioms on every pair and triple drawn from `samples`.
///
/// The triangle inequality is required only for [`SpaceClass::Metric`];
/// for other classes it is still evaluated and reported as not required,
/// with a witness when it fails.
pub fn verify_space_axioms<S: DistanceSpace>(space: &S, samples: &[S::Point]) -> AxiomReport {
    let m = space.monoid();
    let rp = |p: &S::Point| space.render_point(p);
    let mut positive = Check::new("distance-positive");
    let mut symmetry = Check::new("symmetry");
    let mut identity = Check::new("identity");
    let mut triangle = Check::new("triangle");
    if space.class() != SpaceClass::Metric {
        triangle = triangle.informational();
    }

    let n = samples.len();
    let mut d = Vec::with_capacity(n * n);
    for x in samples {
        for y in samples {
            d.push(space.dist(x, y));
        }
    }
    for i in 0..n {
        for j in 0..n {
            let dij = &d[i * n + j];
            let (x, y) = (&samples[i], &samples[j]);
            positive.observe(m.is_positive(dij), || {
                format!("d({}, {}) = {}", rp(x), rp(y), m.render(dij))
            });
            symmetry.observe(m.approx_eq(dij, &d[j * n + i]), || {
                format!(
                    "d({}, {}) = {} but d({}, {}) = {}",
                    rp(x),
                    rp(y),
                    m.render(dij),
                    rp(y),
                    rp(x),
                    m.render(&d[j * n + i])
                )
            });
            let same = x == y;
            identity.observe(m.is_zero(dij) == same, || {
                format!(
                    "d({}, {}) = {} (same point: {same})",
                    rp(x),
                    rp(y),
                    m.render(dij)
                )
            });
        }
    }
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                let direct = &d[i * n + j];
                let via = m.add(&d[i * n + k], &d[k * n + j]);
                triangle.observe(m.leq(direct, &via), || {
                    format!(
                        "x={}, z={}, y={}: d(x,y) = {} > d(x,z) + d(z,y) = {}",
                        rp(&samples[i]),
                        rp(&samples[k]),
                        rp(&samples[j]),
                        m.render(direct),
                        m.render(&via)
                    )
                });
            }
        }
    }

    let mut report = AxiomReport::new("distance-axioms");
    for c in [positive, symmetry, identity, triangle] {
        report.record(c);
    }
    report
}

/// `xₙ → x`: the distances `d(xₙ, x)` form a null sequence.
pub fn converges_to<S, F>(
    space: &S,
    seq: F,
    x: &S::Point,
    horizon: Horizon,
) -> Result<NullVerdict, MonoidError>
where
    S: DistanceSpace,
    F: Fn(u64) -> S::Point,
{
    is_null(
        space.monoid(),
        space.family(),
        |n| space.dist(&seq(n), x),
        horizon,
    )
}

/// Cauchy-sequence check on the index schedules `(n, 2n)` and `(n, n+1)`.
pub fn is_cauchy_sequence<S, F>(
    space: &S,
    seq: F,
    horizon: Horizon,
) -> Result<NullVerdict, MonoidError>
where
    S: DistanceSpace,
    F: Fn(u64) -> S::Point,
{
    let doubling = is_null(
        space.monoid(),
        space.family(),
        |n| space.dist(&seq(n), &seq(2 * n)),
        horizon,
    )?;
    if !doubling.is_accepted() {
        return Ok(doubling);
    }
    is_null(
        space.monoid(),
        space.family(),
        |n| space.dist(&seq(n), &seq(n + 1)),
        horizon,
    )
}
