use std::cmp::Ordering;

use rand::Rng;

use crate::monoid::{
    NullFamily, OrderedMonoid, SampleSequence, ScalableMonoid, SequenceSampler, DEFAULT_TOLERANCE,
};
use crate::sci;

/// Non-negative reals under `+` with the usual order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reals {
    pub tolerance: f64,
}

impl Default for Reals {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

impl Reals {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self { tolerance }
    }

    pub(crate) fn cmp_f64(&self, a: f64, b: f64) -> Option<Ordering> {
        if (a - b).abs() <= self.tolerance {
            Some(Ordering::Equal)
        } else {
            a.partial_cmp(&b)
        }
    }
}

impl OrderedMonoid for Reals {
    type Elem = f64;

    fn zero(&self) -> f64 {
        0.0
    }

    fn add(&self, a: &f64, b: &f64) -> f64 {
        a + b
    }

    fn compare(&self, a: &f64, b: &f64) -> Option<Ordering> {
        self.cmp_f64(*a, *b)
    }

    fn sup(&self, a: &f64, b: &f64) -> Option<f64> {
        Some(a.max(*b))
    }

    fn inf(&self, a: &f64, b: &f64) -> Option<f64> {
        Some(a.min(*b))
    }

    fn has_sup(&self) -> bool {
        true
    }

    fn is_cancellative(&self) -> bool {
        true
    }

    fn difference_candidates(&self, a: &f64, b: &f64) -> Vec<f64> {
        let d = a - b;
        if d >= -self.tolerance {
            vec![d.max(0.0)]
        } else {
            Vec::new()
        }
    }

    fn render(&self, a: &f64) -> String {
        sci(*a)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if rng.gen_bool(0.1) {
            0.0
        } else {
            10f64.powf(rng.gen_range(-6.0..2.0))
        }
    }

    fn sample_below<R: Rng + ?Sized>(&self, x: &f64, rng: &mut R) -> f64 {
        x * rng.gen::<f64>()
    }
}

impl ScalableMonoid for Reals {
    fn scale(&self, q: f64, a: &f64) -> f64 {
        q * a
    }
}

/// The dyadic ε-family `eps(k) = 2^{-k}`, applied coordinate-wise on vector
/// and grid carriers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Dyadic;

impl Dyadic {
    pub fn value(k: usize) -> f64 {
        0.5f64.powi(k as i32)
    }
}

impl NullFamily<Reals> for Dyadic {
    fn eps(&self, k: usize) -> f64 {
        Self::value(k)
    }

    fn halving(&self, _monoid: &Reals, eps: &f64) -> Option<f64> {
        Some(eps / 2.0)
    }

    fn closed_under_sup(&self) -> bool {
        true
    }
}

/// Random real sequences used by the null-family suite.
pub(crate) fn real_sequence<R: Rng + ?Sized>(
    rng: &mut R,
    null: bool,
) -> (String, Box<dyn Fn(u64) -> f64 + Send + Sync>) {
    let a: f64 = rng.gen_range(0.1..10.0);
    if null {
        match rng.gen_range(0..3) {
            0 => {
                let p: f64 = rng.gen_range(1.0..2.0);
                (
                    format!("{a:.3}/n^{p:.3}"),
                    Box::new(move |n| a / (n as f64).powf(p)),
                )
            }
            1 => {
                let q: f64 = rng.gen_range(0.1..0.95);
                (
                    format!("{a:.3}*{q:.3}^n"),
                    Box::new(move |n| a * q.powf(n as f64)),
                )
            }
            _ => {
                let cut: u64 = rng.gen_range(1..50);
                (
                    format!("{a:.3} until {cut} then 0"),
                    Box::new(move |n| if n <= cut { a } else { 0.0 }),
                )
            }
        }
    } else {
        let c: f64 = rng.gen_range(0.6..5.0);
        match rng.gen_range(0..3) {
            0 => (format!("constant {c:.3}"), Box::new(move |_| c)),
            1 => (
                format!("{c:.3} + {a:.3}/n"),
                Box::new(move |n| c + a / n as f64),
            ),
            _ => (
                format!("alternating {c:.3} and {a:.3}/n"),
                Box::new(move |n| if n % 2 == 1 { c } else { a / n as f64 }),
            ),
        }
    }
}

impl SequenceSampler for Reals {
    fn sample_sequence<R: Rng + ?Sized>(&self, rng: &mut R, null: bool) -> SampleSequence<f64> {
        let (label, f) = real_sequence(rng, null);
        SampleSequence::new(label, null, f)
    }
}
