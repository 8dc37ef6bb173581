use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::operator::{precheck_lambda, Certificate, Verdict};
use super::trace::{
    IterationTrace, SampledCheck, SolveFailure, SolveResult, Termination, Uniqueness,
};
use super::{EngineError, FixpointProblem, SolveOptions, Variant};
use crate::monoid::{NullFamily, OrderedMonoid};
use crate::space::{Dist, DistanceSpace};

type Trace<S> = IterationTrace<<S as DistanceSpace>::Point, Dist<S>>;

fn fail<S: DistanceSpace>(
    mut trace: Trace<S>,
    error: EngineError,
    termination: Termination<S::Point, Dist<S>>,
) -> SolveResult<S::Point, Dist<S>> {
    trace.termination = termination;
    Err(SolveFailure {
        error,
        trace: Box::new(trace),
    })
}

/// Draws point pairs from the problem's sample set or the space sampler.
fn sample_pairs<S: DistanceSpace>(
    problem: &FixpointProblem<S>,
    count: usize,
    seed: u64,
) -> Vec<(S::Point, S::Point)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| match &problem.samples {
            Some(pts) if !pts.is_empty() => {
                let a = rng.gen_range(0..pts.len());
                let b = rng.gen_range(0..pts.len());
                (pts[a].clone(), pts[b].clone())
            }
            _ => (
                problem.space.sample_point(&mut rng),
                problem.space.sample_point(&mut rng),
            ),
        })
        .collect()
}

/// Samples `d(f(x), f(y)) ≤ λ(d(x, y))`, restricted to pairs accepted by
/// `keep`.
fn contraction_check<S: DistanceSpace>(
    problem: &FixpointProblem<S>,
    pairs: &[(S::Point, S::Point)],
    property: &str,
    keep: impl Fn(&S::Point, &S::Point) -> bool,
) -> SampledCheck {
    let space = problem.space;
    let m = space.monoid();
    let mut check = SampledCheck {
        property: property.to_string(),
        pairs: 0,
        violations: 0,
        first_violation: None,
    };
    for (x, y) in pairs {
        if !keep(x, y) {
            continue;
        }
        check.pairs += 1;
        let lhs = space.dist(&(problem.map)(x), &(problem.map)(y));
        let rhs = problem.lambda.apply(&space.dist(x, y));
        if !m.leq(&lhs, &rhs) {
            check.violations += 1;
            check.first_violation.get_or_insert_with(|| {
                format!(
                    "x = {}, y = {}: d(f(x), f(y)) = {} exceeds λ(d(x, y)) = {}",
                    space.render_point(x),
                    space.render_point(y),
                    m.render(&lhs),
                    m.render(&rhs)
                )
            });
        }
    }
    check
}

fn order_preservation_check<S: DistanceSpace>(
    problem: &FixpointProblem<S>,
    pairs: &[(S::Point, S::Point)],
    order: &(dyn Fn(&S::Point, &S::Point) -> bool + Send + Sync),
) -> SampledCheck {
    let mut check = SampledCheck {
        property: "order-preserving".to_string(),
        pairs: 0,
        violations: 0,
        first_violation: None,
    };
    for (x, y) in pairs {
        let (lo, hi) = if order(x, y) {
            (x, y)
        } else if order(y, x) {
            (y, x)
        } else {
            continue;
        };
        check.pairs += 1;
        if !order(&(problem.map)(lo), &(problem.map)(hi)) {
            check.violations += 1;
            check.first_violation.get_or_insert_with(|| {
                format!(
                    "{} ≼ {} but their images are not ordered",
                    problem.space.render_point(lo),
                    problem.space.render_point(hi)
                )
            });
        }
    }
    check
}

/// Runs the precheck unless a certificate is supplied, then iterates.
pub(crate) fn solve_with_certificate<S: DistanceSpace>(
    problem: &FixpointProblem<S>,
    options: &SolveOptions,
    certificate: Option<Certificate>,
) -> SolveResult<S::Point, Dist<S>> {
    let space = problem.space;
    let m = space.monoid();
    let fam = space.family();
    let f = &problem.map;

    let uniqueness = match &problem.variant {
        Variant::General => Uniqueness::Unique,
        Variant::Orbital => Uniqueness::NotClaimed,
        Variant::Monotone {
            upper_riesz: true, ..
        } => Uniqueness::Unique,
        Variant::Monotone {
            upper_riesz: false, ..
        } => Uniqueness::WithinComparablePoints,
    };
    let mut trace: Trace<S> = IterationTrace::empty(problem.variant.label(), uniqueness);

    let mut x = problem.x0.clone();
    let mut fx = f(&x);
    let alpha = space.dist(&x, &fx);

    let certificate = match certificate {
        Some(c) => Ok(c),
        None => precheck_lambda(
            &problem.lambda,
            m,
            &alpha,
            fam,
            options.horizon,
            options.check_pairs,
            options.seed,
        ),
    };
    let mut certificate = match certificate {
        Ok(c) => c,
        Err(err) => {
            trace.certificate = Certificate::new(Verdict::Refuted, "monotonicity", err.to_string());
            return fail::<S>(trace, err, Termination::CertificateFailed);
        }
    };
    if certificate.verdict != Verdict::Certified {
        if !options.override_certificate {
            let err = EngineError::CertificateRefused {
                verdict: certificate.verdict,
                detail: certificate.detail.clone(),
            };
            trace.certificate = certificate;
            return fail::<S>(trace, err, Termination::CertificateFailed);
        }
        certificate.overridden = true;
        trace
            .notes
            .push("certificate overridden by caller".to_string());
    }
    trace.certificate = certificate;

    let pairs = sample_pairs(problem, options.check_pairs, options.seed ^ 0x5eed);
    let order = match &problem.variant {
        Variant::General => {
            trace
                .checks
                .push(contraction_check(problem, &pairs, "contraction", |_, _| {
                    true
                }));
            None
        }
        Variant::Orbital => {
            trace.notes.push(
                "orbital continuity of f is asserted by the caller, not verified".to_string(),
            );
            None
        }
        Variant::Monotone { order, .. } => {
            let o = order.as_ref();
            trace.checks.push(contraction_check(
                problem,
                &pairs,
                "contraction-on-comparable-pairs",
                |a, b| o(a, b) || o(b, a),
            ));
            trace
                .checks
                .push(order_preservation_check(problem, &pairs, o));
            trace
                .notes
                .push("regularity of monotone convergence is assumed for this space".to_string());
            if !o(&x, &fx) {
                return fail::<S>(
                    trace,
                    EngineError::NotMonotoneStart,
                    Termination::NotMonotoneStart,
                );
            }
            Some(o)
        }
    };
    let orbital = matches!(problem.variant, Variant::Orbital);

    let eps = fam.eps(problem.stop.eps_level);
    let max_iter = problem.stop.max_iter;
    let mut prev: Option<Dist<S>> = None;
    let mut growth = 0usize;
    for n in 0..=max_iter {
        let d = space.dist(&x, &fx);
        trace.iterates.push(x.clone());
        trace.step_dists.push(d.clone());

        if let Some(o) = order {
            if !o(&x, &fx) {
                return fail::<S>(
                    trace,
                    EngineError::OrderViolated { step: n },
                    Termination::OrderViolated { step: n },
                );
            }
        }
        if let Some(p) = &prev {
            if orbital && trace.orbit_violation.is_none() && !m.leq(&d, &problem.lambda.apply(p)) {
                trace.orbit_violation = Some(n);
            }
            if m.leq(p, &d) && !m.is_zero(&d) {
                growth += 1;
            } else {
                growth = 0;
            }
            if growth >= options.divergence_window {
                return fail::<S>(
                    trace,
                    EngineError::DivergenceDetected { step: n },
                    Termination::DivergenceDetected { step: n },
                );
            }
        }

        let settled =
            m.strictly_below(&d, &eps) && prev.as_ref().is_none_or(|p| m.strictly_below(p, &eps));
        if settled {
            if let Some(step) = trace.orbit_violation {
                return fail::<S>(
                    trace,
                    EngineError::OrbitContractionViolated { step },
                    Termination::OrbitContractionViolated { step },
                );
            }
            trace.termination = Termination::Converged {
                fixpoint: x,
                residual: d,
                iterations: n,
            };
            return Ok(trace);
        }
        if n == max_iter {
            break;
        }
        prev = Some(d);
        x = fx;
        fx = f(&x);
    }
    trace.termination = Termination::MaxIterExhausted {
        iterations: max_iter,
    };
    Ok(trace)
}

/// Dispatches on `problem.variant`.
pub fn solve<S: DistanceSpace>(
    problem: &FixpointProblem<S>,
    options: &SolveOptions,
) -> SolveResult<S::Point, Dist<S>> {
    solve_with_certificate(problem, options, None)
}

/// Global contraction; the fixed point is unique.
pub fn picard_solve<S: DistanceSpace>(
    problem: &FixpointProblem<S>,
    options: &SolveOptions,
) -> SolveResult<S::Point, Dist<S>> {
    let mut p = problem.clone();
    p.variant = Variant::General;
    solve(&p, options)
}

/// Contraction along the orbit only; uniqueness is not claimed.
pub fn picard_solve_orbital<S: DistanceSpace>(
    problem: &FixpointProblem<S>,
    options: &SolveOptions,
) -> SolveResult<S::Point, Dist<S>> {
    let mut p = problem.clone();
    p.variant = Variant::Orbital;
    solve(&p, options)
}

/// Contraction on comparable pairs from a start below its image. Requires
/// [`Variant::Monotone`].
pub fn monotone_picard_solve<S: DistanceSpace>(
    problem: &FixpointProblem<S>,
    options: &SolveOptions,
) -> SolveResult<S::Point, Dist<S>> {
    if !matches!(problem.variant, Variant::Monotone { .. }) {
        let trace = IterationTrace::empty(problem.variant.label(), Uniqueness::NotClaimed);
        return Err(SolveFailure {
            error: EngineError::VariantMismatch {
                expected: "monotone",
            },
            trace: Box::new(trace),
        });
    }
    solve(problem, options)
}

#[derive(Debug, Clone)]
pub struct UniquenessReport<P> {
    /// Fixed point per start, `None` where the run did not converge.
    pub fixpoints: Vec<Option<P>>,
    /// Every run converged and every pair of results is strictly below
    /// `eps(agreement_level)`.
    pub agree: bool,
    pub first_disagreement: Option<String>,
}

/// Solves from each start concurrently and compares the results pairwise.
pub fn uniqueness_check<S: DistanceSpace>(
    problem: &FixpointProblem<S>,
    starts: &[S::Point],
    agreement_level: usize,
    options: &SolveOptions,
) -> UniquenessReport<S::Point> {
    let fixpoints: Vec<Option<S::Point>> = starts
        .par_iter()
        .map(|x0| {
            let p = problem.clone().with_x0(x0.clone());
            solve(&p, options).ok().and_then(|t| t.fixpoint().cloned())
        })
        .collect();
    let space = problem.space;
    let m = space.monoid();
    let eps = space.family().eps(agreement_level);
    let mut first_disagreement = None;
    for (i, a) in fixpoints.iter().enumerate() {
        let Some(a) = a else {
            first_disagreement.get_or_insert_with(|| format!("start {i} did not converge"));
            continue;
        };
        for (j, b) in fixpoints.iter().enumerate().skip(i + 1) {
            if let Some(b) = b {
                let d = space.dist(a, b);
                if !m.strictly_below(&d, &eps) {
                    first_disagreement.get_or_insert_with(|| {
                        format!("starts {i} and {j}: results at distance {}", m.render(&d))
                    });
                }
            }
        }
    }
    UniquenessReport {
        agree: first_disagreement.is_none(),
        fixpoints,
        first_disagreement,
    }
}
