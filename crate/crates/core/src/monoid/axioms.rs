use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{difference, is_null, Horizon, NullFamily, OrderedMonoid};
use crate::report::{AxiomReport, Check};

type SeqFn<E> = Arc<dyn Fn(u64) -> E + Send + Sync>;

/// A lazily evaluated sequence `n ↦ xₙ` (indexed from 1) used as a sample in
/// the null-family suite. `null_by_construction` records what the generator
/// intended.
#[derive(Clone)]
pub struct SampleSequence<E> {
    pub label: String,
    pub null_by_construction: bool,
    seq: SeqFn<E>,
}

impl<E> SampleSequence<E> {
    pub fn new(
        label: impl Into<String>,
        null_by_construction: bool,
        f: impl Fn(u64) -> E + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            null_by_construction,
            seq: Arc::new(f),
        }
    }

    pub fn term(&self, n: u64) -> E {
        (self.seq)(n)
    }

    fn derived(
        &self,
        label: &str,
        null: bool,
        f: impl Fn(&SeqFn<E>, u64) -> E + Send + Sync + 'static,
    ) -> Self
    where
        E: 'static,
    {
        let inner = Arc::clone(&self.seq);
        Self::new(format!("{} {}", self.label, label), null, move |n| {
            f(&inner, n)
        })
    }
}

impl<E> fmt::Debug for SampleSequence<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampleSequence")
            .field("label", &self.label)
            .field("null_by_construction", &self.null_by_construction)
            .finish()
    }
}

fn index_rng(seed: u64, n: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ n.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Monoid and order axioms on `samples` random tuples.
pub fn monoid_axiom_suite<M: OrderedMonoid>(monoid: &M, samples: usize, seed: u64) -> AxiomReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = |e: &M::Elem| monoid.render(e);

    let mut positive = Check::new("samples-in-positive-cone");
    let mut assoc = Check::new("associativity");
    let mut left_id = Check::new("left-identity");
    let mut right_id = Check::new("right-identity");
    let mut refl = Check::new("reflexivity");
    let mut antisym = Check::new("antisymmetry");
    let mut trans = Check::new("transitivity");
    let mut compat = Check::new("order-compatibility");
    let mut nontrivial = Check::new("positive-cone-nontrivial");
    let mut sup_upper = Check::new("sup-upper-bound");
    let mut sup_least = Check::new("sup-least-upper-bound");
    let mut inf_lower = Check::new("inf-lower-bound");
    let mut diff_chain = Check::new("difference-chaining");

    let zero = monoid.zero();
    let mut saw_nonzero = false;

    for _ in 0..samples {
        let a = monoid.sample(&mut rng);
        let b = monoid.sample(&mut rng);
        let c = monoid.sample(&mut rng);

        for x in [&a, &b, &c] {
            positive.observe(monoid.is_positive(x), || r(x));
            saw_nonzero |= !monoid.is_zero(x);
        }

        let lhs = monoid.add(&monoid.add(&a, &b), &c);
        let rhs = monoid.add(&a, &monoid.add(&b, &c));
        assoc.observe(monoid.approx_eq(&lhs, &rhs), || {
            format!(
                "a={}, b={}, c={}: {} vs {}",
                r(&a),
                r(&b),
                r(&c),
                r(&lhs),
                r(&rhs)
            )
        });
        left_id.observe(monoid.approx_eq(&monoid.add(&zero, &a), &a), || r(&a));
        right_id.observe(monoid.approx_eq(&monoid.add(&a, &zero), &a), || r(&a));
        refl.observe(monoid.leq(&a, &a), || r(&a));

        // nearby pairs so that both directions can hold
        let b_near = if rng.gen_bool(0.5) {
            a.clone()
        } else {
            b.clone()
        };
        if monoid.leq(&a, &b_near) && monoid.leq(&b_near, &a) {
            antisym.observe(monoid.approx_eq(&a, &b_near), || {
                format!("{} and {}", r(&a), r(&b_near))
            });
        } else {
            antisym.observe(true, String::new);
        }

        // chain a ≤ a+b ≤ a+b+c
        let ab = monoid.add(&a, &b);
        let abc = monoid.add(&ab, &c);
        let holds = monoid.leq(&a, &ab) && monoid.leq(&ab, &abc);
        trans.observe(!holds || monoid.leq(&a, &abc), || {
            format!("{} ≤ {} ≤ {}", r(&a), r(&ab), r(&abc))
        });
        if monoid.leq(&a, &b) && monoid.leq(&b, &c) {
            trans.observe(monoid.leq(&a, &c), || {
                format!("{} ≤ {} ≤ {}", r(&a), r(&b), r(&c))
            });
        }

        // x1 ≤ y1 and x2 ≤ y2 with y = x + d
        let d1 = monoid.sample(&mut rng);
        let d2 = monoid.sample(&mut rng);
        let (x1, x2) = (a.clone(), c.clone());
        let (y1, y2) = (monoid.add(&x1, &d1), monoid.add(&x2, &d2));
        if monoid.leq(&x1, &y1) && monoid.leq(&x2, &y2) {
            let s = monoid.add(&x1, &x2);
            let t = monoid.add(&y1, &y2);
            compat.observe(monoid.leq(&s, &t), || {
                format!("{} + {} vs {} + {}", r(&x1), r(&x2), r(&y1), r(&y2))
            });
        }

        if monoid.has_sup() {
            match monoid.sup(&a, &b) {
                Some(s) => {
                    sup_upper.observe(monoid.leq(&a, &s) && monoid.leq(&b, &s), || {
                        format!("sup({}, {}) = {}", r(&a), r(&b), r(&s))
                    });
                    for ub in [monoid.add(&a, &b), monoid.add(&b, &a), c.clone()] {
                        if monoid.leq(&a, &ub) && monoid.leq(&b, &ub) {
                            sup_least.observe(monoid.leq(&s, &ub), || {
                                format!("sup({}, {}) = {} not ≤ {}", r(&a), r(&b), r(&s), r(&ub))
                            });
                        }
                    }
                }
                None => sup_upper.observe(false, || format!("sup({}, {}) missing", r(&a), r(&b))),
            }
        }
        if let Some(i) = monoid.inf(&a, &b) {
            inf_lower.observe(monoid.leq(&i, &a) && monoid.leq(&i, &b), || {
                format!("inf({}, {}) = {}", r(&a), r(&b), r(&i))
            });
        }

        if monoid.is_cancellative() {
            // z ≤ y = z + d1 ≤ x = y + d2
            let z = c.clone();
            let y = monoid.add(&z, &d1);
            let x = monoid.add(&y, &d2);
            let ok = match (
                difference(monoid, &x, &y),
                difference(monoid, &y, &z),
                difference(monoid, &x, &z),
            ) {
                (Ok(Some(xy)), Ok(Some(yz)), Ok(Some(xz))) => {
                    monoid.approx_eq(&xz, &monoid.add(&xy, &yz))
                }
                _ => false,
            };
            diff_chain.observe(ok, || format!("x={}, y={}, z={}", r(&x), r(&y), r(&z)));
        }
    }
    nontrivial.observe(saw_nonzero, || "every sample equals θ".to_string());

    let mut report = AxiomReport::new("monoid-axioms");
    for c in [
        positive, assoc, left_id, right_id, refl, antisym, trans, compat, nontrivial,
    ] {
        report.record(c);
    }
    if monoid.has_sup() {
        report.record(sup_upper);
        report.record(sup_least);
    }
    if monoid.inf(&zero, &zero).is_some() {
        report.record(inf_lower);
    }
    if monoid.is_cancellative() {
        report.record(diff_chain);
    }
    report
}

/// Null-family properties checked on sample sequences at a finite horizon:
/// constants, addition, squeeze, finite modification, subsequences, plus
/// the ε-family separation and halving conditions.
pub fn null_family_axiom_suite<M, F>(
    monoid: &M,
    fam: &F,
    samples: &[SampleSequence<M::Elem>],
    horizon: Horizon,
    seed: u64,
) -> AxiomReport
where
    M: OrderedMonoid + Clone + 'static,
    M::Elem: 'static,
    F: NullFamily<M>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = |e: &M::Elem| monoid.render(e);
    let null = |s: &SampleSequence<M::Elem>| {
        is_null(monoid, fam, |n| s.term(n), horizon)
            .map(|v| v.is_accepted())
            .unwrap_or(false)
    };
    let levels = horizon.effective_levels(fam);

    let mut decreasing = Check::new("epsilon-decreasing");
    let mut halving = Check::new("epsilon-halving");
    for k in 1..=levels {
        let eps = fam.eps(k);
        if k < levels {
            let next = fam.eps(k + 1);
            decreasing.observe(monoid.leq(&next, &eps), || {
                format!("eps({}) = {} above eps({k}) = {}", k + 1, r(&next), r(&eps))
            });
        }
        let ok = match fam.halving(monoid, &eps) {
            Some(d) => !monoid.is_zero(&d) && monoid.leq(&monoid.add(&d, &d), &eps),
            None => false,
        };
        halving.observe(ok, || format!("no δ with δ+δ ≤ eps({k}) = {}", r(&eps)));
    }

    let mut zero_const = Check::new("constant-theta-null");
    let z = monoid.zero();
    let zero_seq = SampleSequence::new("θ", true, move |_| z.clone());
    zero_const.observe(null(&zero_seq), || "constant θ rejected".to_string());

    let mut nonzero_const = Check::new("constant-nonzero-not-null");
    let mut separation = Check::new("epsilon-separation");
    for _ in 0..samples.len().max(1) {
        let x = monoid.sample(&mut rng);
        if monoid.is_zero(&x) {
            continue;
        }
        let xc = x.clone();
        let s = SampleSequence::new("const", false, move |_| xc.clone());
        nonzero_const.observe(!null(&s), || format!("constant {} accepted", r(&x)));
        let below_all = (1..=levels).all(|k| monoid.strictly_below(&x, &fam.eps(k)));
        separation.observe(!below_all, || format!("{} < every eps", r(&x)));
    }

    let mut classification = Check::new("construction-agrees");
    let mut addition = Check::new("closure-under-addition");
    let mut squeeze = Check::new("squeeze");
    let mut modification = Check::new("finite-modification");
    let mut subsequence = Check::new("subsequence");

    let verdicts: Vec<bool> = samples.iter().map(&null).collect();
    for (i, (s, &v)) in samples.iter().zip(&verdicts).enumerate() {
        classification.observe(v == s.null_by_construction, || {
            format!(
                "{}: expected null={}, got {}",
                s.label, s.null_by_construction, v
            )
        });

        let salt: u64 = rng.gen();
        let m1 = monoid.clone();
        let substituted = s.derived("substituted", v, move |f, n| {
            if n <= 5 {
                m1.sample(&mut index_rng(salt, n))
            } else {
                f(n)
            }
        });
        let m2 = monoid.clone();
        let prepended = s.derived("prepended", v, move |f, n| {
            if n <= 3 {
                m2.sample(&mut index_rng(salt ^ 1, n))
            } else {
                f(n - 3)
            }
        });
        let dropped = s.derived("dropped", v, |f, n| f(n + 3));
        for t in [&substituted, &prepended, &dropped] {
            modification.observe(null(t) == v, || {
                format!("{} changed verdict from {}", t.label, v)
            });
        }

        if !v {
            continue;
        }

        for (label, sub) in [
            ("even terms", s.derived("even", true, |f, n| f(2 * n))),
            ("3n+1 terms", s.derived("3n+1", true, |f, n| f(3 * n + 1))),
        ] {
            subsequence.observe(null(&sub), || format!("{} of {} rejected", label, s.label));
        }

        let m3 = monoid.clone();
        let below = s.derived("squeezed", true, move |f, n| {
            m3.sample_below(&f(n), &mut index_rng(salt ^ 2, n))
        });
        squeeze.observe(null(&below), || format!("{} rejected", below.label));

        // pair with another accepted sample
        let j = (i + 1..samples.len()).chain(0..i).find(|&j| verdicts[j]);
        if let Some(j) = j {
            let other = samples[j].clone();
            let m4 = monoid.clone();
            let sum = s.derived(&format!("+ {}", other.label), true, move |f, n| {
                m4.add(&f(n), &other.term(n))
            });
            addition.observe(null(&sum), || format!("{} rejected", sum.label));
        }
    }

    let mut report = AxiomReport::new("null-family");
    for c in [
        zero_const,
        nonzero_const,
        addition,
        squeeze,
        modification,
        subsequence,
        separation,
        halving,
        decreasing,
        classification,
    ] {
        report.record(c);
    }
    report
}

/// Instances that can generate random null and non-null sequences for the
/// null-family suite.
pub trait SequenceSampler: OrderedMonoid + Sized {
    fn sample_sequence<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        null: bool,
    ) -> SampleSequence<Self::Elem>;

    fn sample_sequences(&self, count: usize, seed: u64) -> Vec<SampleSequence<Self::Elem>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|i| self.sample_sequence(&mut rng, i % 2 == 0))
            .collect()
    }
}
