use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Dyadic, Reals};
use crate::sci;
use crate::space::{DistanceSpace, SpaceClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RealDistance {
    /// `|x − y|`.
    Absolute,
    /// `(x − y)²`.
    Squared,
    /// `|x − y|` up to 1, `(x − y)²` beyond.
    Mixed,
}

impl RealDistance {
    pub fn eval(self, x: f64, y: f64) -> f64 {
        let d = (x - y).abs();
        match self {
            RealDistance::Absolute => d,
            RealDistance::Squared => d * d,
            RealDistance::Mixed if d <= 1.0 => d,
            RealDistance::Mixed => d * d,
        }
    }

    pub fn class(self) -> SpaceClass {
        match self {
            RealDistance::Absolute => SpaceClass::Metric,
            RealDistance::Squared => SpaceClass::Distance,
            RealDistance::Mixed => SpaceClass::FmDistance,
        }
    }
}

/// The real line with one of the scalar distances above, valued in `ℝ₊`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealLine {
    pub kind: RealDistance,
    /// Points are sampled uniformly from `[-span, span]`.
    pub span: f64,
    monoid: Reals,
}

impl RealLine {
    pub fn new(kind: RealDistance) -> Self {
        Self {
            kind,
            span: 10.0,
            monoid: Reals::default(),
        }
    }

    pub fn with_span(mut self, span: f64) -> Self {
        self.span = span;
        self
    }
}

impl DistanceSpace for RealLine {
    type Point = f64;
    type Monoid = Reals;
    type Family = Dyadic;

    fn monoid(&self) -> &Reals {
        &self.monoid
    }

    fn family(&self) -> &Dyadic {
        &Dyadic
    }

    fn dist(&self, x: &f64, y: &f64) -> f64 {
        self.kind.eval(*x, *y)
    }

    fn class(&self) -> SpaceClass {
        self.kind.class()
    }

    fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng.gen_range(-self.span..=self.span)
    }

    fn render_point(&self, p: &f64) -> String {
        sci(*p)
    }
}

/// The two non-metric scalar distances: the mixed one (strong Fréchet-Wilson,
/// not metric) and the squared one (Fréchet-Wilson only).
pub fn example3_distances() -> (RealLine, RealLine) {
    (
        RealLine::new(RealDistance::Mixed),
        RealLine::new(RealDistance::Squared),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formulas() {
        let (mixed, squared) = example3_distances();
        assert_eq!(mixed.dist(&0.0, &0.5), 0.5);
        assert_eq!(mixed.dist(&0.0, &2.0), 4.0);
        assert_eq!(mixed.dist(&0.0, &1.0), 1.0);
        assert_eq!(squared.dist(&0.0, &1.0), 1.0);
        assert_eq!(squared.dist(&0.0, &3.0), 9.0);
        assert_eq!(mixed.class(), SpaceClass::FmDistance);
        assert_eq!(squared.class(), SpaceClass::Distance);
    }
}
