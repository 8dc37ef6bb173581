//! Spec invariants as property tests over seeded random inputs.

use std::sync::Arc;

use monofix::engine::{
    monotone_picard_solve, multiple_fixpoint_solve, real_order, solve, uniqueness_check,
    ContractionOperator, FixpointProblem, MultipleProblem, SolveOptions, StopRule, TupleMap,
};
use monofix::fredholm::{
    fredholm_solve, iterated_kernels, linear_integrand, FredholmProblem, GridSpace, KernelBound,
    KernelSpec, Quadrature,
};
use monofix::instances::{
    Dyadic, EntourageBase, EntourageSpace, GridFunctionMonoid, PowerMonoid, RealDistance, RealLine,
    Reals, Relation,
};
use monofix::monoid::{
    cauchy_series_test, difference, is_null, Horizon, OrderedMonoid, SeriesVerdict,
};
use monofix::space::{
    converges_to, is_cauchy_sequence, random_paths, strong_fw_probe, DistanceSpace, SigmaProduct,
    VectorProduct,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn vec3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..100.0f64, 3)
}

fn relation(n: usize) -> impl Strategy<Value = Relation> {
    prop::collection::vec(any::<bool>(), n * n).prop_map(move |bits| {
        let mut r = Relation::diagonal(n);
        for (k, b) in bits.into_iter().enumerate() {
            if b {
                r.insert(k / n, k % n);
            }
        }
        r
    })
}

proptest! {
    #![proptest_config(cfg(256))]

    #[test]
    fn reals_monoid_laws(a in 0.0..1e3f64, b in 0.0..1e3f64, c in 0.0..1e3f64) {
        let m = Reals::default();
        prop_assert!(m.approx_eq(&m.add(&m.add(&a, &b), &c), &m.add(&a, &m.add(&b, &c))));
        prop_assert!(m.approx_eq(&m.add(&a, &m.zero()), &a));
        if m.leq(&a, &b) {
            prop_assert!(m.leq(&m.add(&a, &c), &m.add(&b, &c)));
        }
    }

    #[test]
    fn vector_monoid_laws(a in vec3(), b in vec3(), c in vec3()) {
        let m = PowerMonoid::reals(3);
        prop_assert!(m.approx_eq(&m.add(&m.add(&a, &b), &c), &m.add(&a, &m.add(&b, &c))));
        if m.leq(&a, &b) {
            prop_assert!(m.leq(&m.add(&a, &c), &m.add(&b, &c)));
        }
        let s = m.sup(&a, &b).unwrap();
        prop_assert!(m.leq(&a, &s) && m.leq(&b, &s));
    }

    #[test]
    fn entourage_monoid_laws(a in relation(4), b in relation(4), c in relation(4)) {
        prop_assert_eq!(a.compose(&b).compose(&c), a.compose(&b.compose(&c)));
        prop_assert_eq!(a.compose(&Relation::diagonal(4)), a.clone());
        if a.is_subset(&b) {
            prop_assert!(a.compose(&c).is_subset(&b.compose(&c)));
            prop_assert!(c.compose(&a).is_subset(&c.compose(&b)));
        }
    }

    #[test]
    fn difference_recomposes(b in vec3(), z in vec3()) {
        let m = PowerMonoid::reals(3);
        let a = m.add(&b, &z);
        let d = difference(&m, &a, &b).unwrap().expect("b ≤ a");
        prop_assert!(m.approx_eq(&m.add(&b, &d), &a));
    }

    #[test]
    fn grid_difference_recomposes(b in prop::collection::vec(0.0..10.0f64, 4), z in prop::collection::vec(0.0..10.0f64, 4)) {
        let m = GridFunctionMonoid::new(vec![0.125, 0.375, 0.625, 0.875]).unwrap();
        let a = m.add(&b, &z);
        let d = difference(&m, &a, &b).unwrap().expect("b ≤ a");
        prop_assert!(m.approx_eq(&m.add(&b, &d), &a));
    }

    /// Certified series have null block sums on sampled index windows.
    #[test]
    fn certified_series_have_null_blocks(q in 0.05..0.8f64, scale in 0.1..10.0f64, stride in 1u64..8) {
        let m = Reals::default();
        let h = Horizon::new(32, 400);
        let terms = (1..=400).map(|n| scale * q.powi(n));
        prop_assume!(cauchy_series_test(&m, &Dyadic, terms, h).unwrap().is_certified());
        let block = |n: u64| (n..=n + stride * n).map(|s| scale * q.powi(s as i32)).sum::<f64>();
        prop_assert!(is_null(&m, &Dyadic, block, Horizon::new(32, 64)).unwrap().is_accepted());
    }

    /// On metric spaces no path is a strong Fréchet-Wilson witness.
    #[test]
    fn metric_spaces_resist_the_probe(seed in any::<u64>(), span in 0.1..100.0f64) {
        let space = RealLine::new(RealDistance::Absolute).with_span(span);
        let probe = strong_fw_probe(&space, random_paths(span, 50, seed), 200, 6, 1);
        prop_assert!(probe.witness().is_none());
    }

    /// Two accepted limits are at zero distance; convergent implies Cauchy.
    #[test]
    fn limits_are_unique(x in -10.0..10.0f64, y in -10.0..10.0f64, q in 0.1..0.9f64) {
        let space = RealLine::new(RealDistance::Mixed);
        let h = Horizon::new(24, 64);
        let seq = move |n: u64| x + q.powi(n as i32);
        prop_assert!(converges_to(&space, seq, &x, h).unwrap().is_accepted());
        prop_assert!(is_cauchy_sequence(&space, seq, h).unwrap().is_accepted());
        let other = converges_to(&space, seq, &y, h).unwrap().is_accepted();
        prop_assert_eq!(other, space.monoid().is_zero(&space.dist(&x, &y)));
    }

    #[test]
    fn sigma_product_distance_is_the_coordinate_sum(x in prop::collection::vec(-5.0..5.0f64, 3), y in prop::collection::vec(-5.0..5.0f64, 3)) {
        let p = SigmaProduct::new(RealLine::new(RealDistance::Squared), 3).unwrap();
        let base = RealLine::new(RealDistance::Squared);
        let expect: f64 = x.iter().zip(&y).map(|(a, b)| base.dist(a, b)).fold(0.0, |acc, d| acc + d);
        prop_assert_eq!(p.dist(&x, &y), expect);
    }

    /// Convergence in a finite uniform space is eventual constancy.
    #[test]
    fn entourage_convergence_is_eventual_constancy(prefix in prop::collection::vec(0usize..5, 0..6), tail in 0usize..5, target in 0usize..5) {
        let base = EntourageBase::partition_chain(5, &[vec![], vec![vec![0, 1], vec![2, 3]], vec![vec![0, 1, 2, 3]], vec![vec![0, 1, 2, 3, 4]]]).unwrap();
        let space = EntourageSpace::new(base).unwrap();
        let pre = prefix.clone();
        let seq = move |n: u64| pre.get(n as usize - 1).copied().unwrap_or(tail);
        let accepted = converges_to(&space, seq, &target, Horizon::new(8, 16)).unwrap().is_accepted();
        prop_assert_eq!(accepted, tail == target);
    }

    /// Sup-node Cauchy check on grid functions agrees with the sup-norm
    /// criterion for `fₙ = g + aₙ·h`: geometric `aₙ` is Cauchy, the others are not.
    #[test]
    fn grid_cauchy_matches_sup_norm(r in 0.1..0.9f64, kind in 0usize..3, hs in prop::collection::vec(0.5..2.0f64, 4)) {
        let space = GridSpace::new(vec![0.125, 0.375, 0.625, 0.875], 1).unwrap();
        let h = DMatrix::from_column_slice(4, 1, &hs);
        let coef = move |n: u64| match kind {
            0 => r.powi(n as i32),
            1 => (n as f64).ln(),
            _ => if n.is_multiple_of(2) { r } else { -r },
        };
        let seq = move |n: u64| &h * coef(n);
        let accepted = is_cauchy_sequence(&space, seq, Horizon::new(24, 64)).unwrap().is_accepted();
        prop_assert_eq!(accepted, kind == 0);
    }
}

proptest! {
    #![proptest_config(cfg(64))]

    /// Trace invariant, idempotence and uniqueness for certified affine maps.
    #[test]
    fn affine_contractions(a in -0.9..0.9f64, b in -5.0..5.0f64, x0 in -10.0..10.0f64, seed in any::<u64>()) {
        let space = RealLine::new(RealDistance::Absolute);
        let q = a.abs().max(0.01);
        let lambda = ContractionOperator::scalar(&Reals::default(), q).unwrap();
        let p = FixpointProblem::new(&space, move |x: &f64| a * x + b, lambda.clone(), x0);
        let opts = SolveOptions { seed, ..SolveOptions::default() };
        let trace = solve(&p, &opts).unwrap();
        prop_assert!(trace.converged());
        prop_assert_eq!(trace.step_bound_violation(&lambda, &Reals::default()), None);
        let x = *trace.fixpoint().unwrap();
        prop_assert!((x - (a * x + b)).abs() < Dyadic::value(p.stop.eps_level));
        let starts: Vec<f64> = (0..10).map(|i| x0 + i as f64 * 3.7 - 18.0).collect();
        let r = uniqueness_check(&p, &starts, p.stop.eps_level - 8, &opts);
        prop_assert!(r.agree, "{:?}", r.first_disagreement);
    }

    /// Monotone runs climb: xₙ ≤ xₙ₊₁ along the whole trace.
    #[test]
    fn monotone_chain(q in 0.05..0.95f64, b in 0.0..5.0f64, below in 0.0..10.0f64) {
        let space = RealLine::new(RealDistance::Absolute);
        let fix = b / (1.0 - q);
        let lambda = ContractionOperator::scalar(&Reals::default(), q).unwrap();
        let p = FixpointProblem::new(&space, move |x: &f64| q * x + b, lambda, fix - below)
            .monotone(real_order(), true);
        let trace = monotone_picard_solve(&p, &SolveOptions::default()).unwrap();
        prop_assert!(trace.converged());
        prop_assert!(trace.iterates.windows(2).all(|w| w[0] <= w[1]));
    }

    /// m = 1, σ = id, P = {0} reproduces the monotone solver bit for bit.
    #[test]
    fn single_coordinate_lift(q in 0.05..0.95f64, b in 0.0..5.0f64, below in 0.0..10.0f64) {
        let line = RealLine::new(RealDistance::Absolute);
        let x0 = b / (1.0 - q) - below;
        let f: TupleMap<f64> = Arc::new(move |xs: &[f64]| q * xs[0] + b);
        let mp = MultipleProblem {
            f,
            sigma: vec![vec![0]],
            p: vec![0],
            order: real_order(),
            upper_riesz: true,
            lambda: ContractionOperator::matrix(&PowerMonoid::reals(1), DMatrix::from_element(1, 1, q)).unwrap(),
            x0: vec![x0],
            stop: StopRule::default(),
            samples: None,
        };
        let multi = multiple_fixpoint_solve(&line, &mp, &SolveOptions::default()).unwrap();
        let lambda = ContractionOperator::scalar(&Reals::default(), q).unwrap();
        let single = FixpointProblem::new(&line, move |x: &f64| q * x + b, lambda, x0).monotone(real_order(), true);
        let single = monotone_picard_solve(&single, &SolveOptions::default()).unwrap();
        let lifted: Vec<f64> = multi.iterates.iter().map(|v| v[0]).collect();
        prop_assert_eq!(lifted, single.iterates);
    }

    /// `Q_{n+m} = Qₙ·Q_m` up to rounding in the products.
    #[test]
    fn iterated_kernel_semigroup(vals in prop::collection::vec(0.0..1.0f64, 36), n in 1usize..4, m in 1usize..4) {
        let quad = Quadrature::midpoint(0.0, 1.0, 6).unwrap();
        let bound = KernelBound::from_values(&quad, DMatrix::from_row_slice(6, 6, &vals)).unwrap();
        let q = iterated_kernels(&bound, n + m).unwrap();
        let prod = &q[n - 1] * &q[m - 1];
        let scale = q[n + m - 1].amax().max(1e-300);
        prop_assert!((&q[n + m - 1] - prod).amax() <= 1e-14 * scale);
    }

    /// Picard solution of a linear equation against the dense solve
    /// `(I − KW)x = f`, within rounding plus the stopping error.
    #[test]
    fn fredholm_matches_dense_solve(vals in prop::collection::vec(0.0..1.0f64, 64), scale in 0.05..0.9f64, fs in prop::collection::vec(-2.0..2.0f64, 8)) {
        let quad = Quadrature::midpoint(0.0, 1.0, 8).unwrap();
        let k = DMatrix::from_row_slice(8, 8, &vals) * scale;
        let f = DMatrix::from_column_slice(8, 1, &fs);
        let p = KernelSpec::Table { values: k.row_iter().map(|r| r.iter().copied().collect()).collect() }
            .linear_problem(quad.clone(), f)
            .unwrap();
        let run = fredholm_solve(&p, &SolveOptions { override_certificate: true, ..SolveOptions::default() }).unwrap();
        let rho = run.certificate.radius();
        prop_assume!(rho < 0.95);
        let x = run.solution().unwrap().column(0).clone_owned();
        let w = DMatrix::from_diagonal(&DVector::from_row_slice(quad.weights()));
        let sys = DMatrix::identity(8, 8) - &k * w;
        let dense = sys.clone().lu().solve(&DVector::from_column_slice(&fs)).unwrap();
        let cond = sys.norm() * sys.try_inverse().unwrap().norm();
        let trace = run.result.as_ref().unwrap();
        let residual = trace.residual().unwrap().iter().fold(0.0f64, |a, b| a.max(*b));
        // the residual lives in the zero tolerance when Picard lands exactly
        let stop_err = residual.max(1e-12) * 8.0 / (1.0 - rho);
        let tol = 10.0 * f64::EPSILON * cond * dense.amax().max(1.0) + stop_err;
        prop_assert!((x - dense).amax() <= tol);
        // pointwise step bound against λ = Qmat·
        let lambda = ContractionOperator::integral(&GridFunctionMonoid::new(quad.nodes().to_vec()).unwrap(), p.bound.qmat().clone()).unwrap();
        prop_assert_eq!(trace.step_bound_violation(&lambda, &GridFunctionMonoid::new(quad.nodes().to_vec()).unwrap()), None);
    }

    #[test]
    fn vector_product_convergence_is_coordinatewise(x in prop::collection::vec(-3.0..3.0f64, 2), q in 0.1..0.9f64) {
        let space = VectorProduct::new(RealLine::new(RealDistance::Absolute), 2).unwrap();
        let target = x.clone();
        let seq = move |n: u64| vec![x[0] + q.powi(n as i32), x[1] - q.powi(n as i32)];
        prop_assert!(converges_to(&space, seq, &target, Horizon::new(24, 64)).unwrap().is_accepted());
    }
}

/// The linear integrand route and the tabulated route give the same iterates.
#[test]
fn linear_integrand_routes_agree() {
    let quad = Quadrature::midpoint(0.0, 1.0, 16).unwrap();
    let f = FredholmProblem::scalar_rhs(&quad, |t| t * t);
    let a = KernelSpec::Product { c: 0.8 }
        .linear_problem(quad.clone(), f.clone())
        .unwrap();
    let b = FredholmProblem::new(
        quad.clone(),
        f,
        linear_integrand(&quad, |t, s| 0.8 * t * s),
        KernelBound::new(&quad, |t, s| 0.8 * t * s).unwrap(),
    )
    .unwrap();
    let ra = fredholm_solve(&a, &SolveOptions::default()).unwrap();
    let rb = fredholm_solve(&b, &SolveOptions::default()).unwrap();
    assert_eq!(ra.result.unwrap().iterates, rb.result.unwrap().iterates);
}

/// Twenty constructed real series against the classical Cauchy criterion.
#[test]
fn reals_series_match_classical_cauchy() {
    let m = Reals::default();
    let h = Horizon::new(32, 4000);
    type Series = (&'static str, fn(u64) -> f64, bool);
    let cases: [Series; 20] = [
        ("2^-n", |n| 0.5f64.powi(n as i32), true),
        ("3^-n", |n| 3f64.powi(-(n as i32)), true),
        ("0.9^n", |n| 0.9f64.powi(n as i32), true),
        ("0.95^n", |n| 0.95f64.powi(n as i32), true),
        ("5·0.7^n", |n| 5.0 * 0.7f64.powi(n as i32), true),
        (
            "1/n!",
            |n| 1.0 / (1..=n).map(|k| k as f64).product::<f64>(),
            true,
        ),
        ("n·2^-n", |n| n as f64 * 0.5f64.powi(n as i32), true),
        ("n²·0.8^n", |n| (n * n) as f64 * 0.8f64.powi(n as i32), true),
        ("zero", |_| 0.0, true),
        ("finite support", |n| if n <= 10 { 1.0 } else { 0.0 }, true),
        ("1/n", |n| 1.0 / n as f64, false),
        ("1/√n", |n| 1.0 / (n as f64).sqrt(), false),
        ("constant 1", |_| 1.0, false),
        ("constant 1e-3", |_| 1e-3, false),
        ("1/log(n+1)", |n| 1.0 / ((n + 1) as f64).ln(), false),
        ("1.01^n", |n| 1.01f64.powi(n as i32), false),
        ("alternating 0/1", |n| (n % 2) as f64, false),
        ("n", |n| n as f64, false),
        (
            "1/(n log(n+1))",
            |n| 1.0 / (n as f64 * ((n + 1) as f64).ln()),
            false,
        ),
        (
            "every 3rd is 0.1",
            |n| if n % 3 == 0 { 0.1 } else { 0.0 },
            false,
        ),
    ];
    for (name, f, convergent) in cases {
        let verdict = cauchy_series_test(&m, &Dyadic, (1..).map(f), h).unwrap();
        assert_eq!(verdict.is_certified(), convergent, "{name}: {verdict:?}");
        if !convergent {
            assert!(matches!(verdict, SeriesVerdict::Refuted { .. }));
        }
    }
}
