use std::sync::Arc;

use super::trace::{IterationTrace, SolveFailure, SolveResult, Uniqueness};
use super::{
    monotone_picard_solve, ContractionOperator, EngineError, FixpointProblem, PointMap, PointOrder,
    SolveOptions, StopRule,
};
use crate::instances::{PowerFamily, PowerMonoid};
use crate::monoid::NullFamily;
use crate::space::{Dist, DistanceSpace, VectorProduct};

pub type TupleMap<P> = Arc<dyn Fn(&[P]) -> P + Send + Sync>;

fn check_indices(sigma: &[Vec<usize>], m: usize) -> Result<(), EngineError> {
    for (map, s) in sigma.iter().enumerate() {
        if s.len() != m {
            return Err(EngineError::ArityMismatch {
                expected: m,
                found: s.len(),
            });
        }
        if let Some((position, &value)) = s.iter().enumerate().find(|(_, &v)| v >= m) {
            return Err(EngineError::IndexOutOfRange {
                map,
                position,
                value,
                arity: m,
            });
        }
    }
    Ok(())
}

/// `(x₁, …, x_m) ↦ (y₁, …, y_m)` with `yᵢ = f(x_{σᵢ(0)}, …, x_{σᵢ(m−1)})`.
/// Indices are 0-based.
pub fn sigma_lift<P: Clone + 'static>(
    f: TupleMap<P>,
    sigma: Vec<Vec<usize>>,
) -> Result<PointMap<Vec<P>>, EngineError> {
    let m = sigma.len();
    check_indices(&sigma, m)?;
    Ok(Arc::new(move |x: &Vec<P>| {
        assert_eq!(x.len(), m, "tuple arity does not match the lift");
        sigma
            .iter()
            .map(|s| {
                let args: Vec<P> = s.iter().map(|&j| x[j].clone()).collect();
                f(&args)
            })
            .collect()
    }))
}

/// `x ≼ y` iff `xᵢ ≤ yᵢ` for `i ∈ p` and `yᵢ ≤ xᵢ` otherwise.
pub fn p_order<P: 'static>(
    order: PointOrder<P>,
    p: &[usize],
    m: usize,
) -> Result<PointOrder<Vec<P>>, EngineError> {
    if let Some((position, &value)) = p.iter().enumerate().find(|(_, &v)| v >= m) {
        return Err(EngineError::IndexOutOfRange {
            map: 0,
            position,
            value,
            arity: m,
        });
    }
    let forward: Vec<bool> = (0..m).map(|i| p.contains(&i)).collect();
    Ok(Arc::new(move |x: &Vec<P>, y: &Vec<P>| {
        x.len() == y.len()
            && forward
                .iter()
                .zip(x.iter().zip(y))
                .all(|(&fw, (a, b))| if fw { order(a, b) } else { order(b, a) })
    }))
}

/// Data for a σ̄-multiple fixed point of `f: X^m → X`.
pub struct MultipleProblem<P, M: crate::monoid::OrderedMonoid> {
    pub f: TupleMap<P>,
    pub sigma: Vec<Vec<usize>>,
    /// Coordinates ordered forwards; the rest are reversed.
    pub p: Vec<usize>,
    pub order: PointOrder<P>,
    pub upper_riesz: bool,
    /// Acts on `M^m`.
    pub lambda: ContractionOperator<PowerMonoid<M>>,
    pub x0: Vec<P>,
    pub stop: StopRule,
    pub samples: Option<Vec<Vec<P>>>,
}

impl<P, M> MultipleProblem<P, M>
where
    P: Clone + Send + Sync + 'static,
    M: crate::monoid::OrderedMonoid,
{
    pub fn arity(&self) -> usize {
        self.sigma.len()
    }

    /// The monotone problem on `(X^m, ≼_P, d^m)` for the lifted map.
    pub fn lifted<'a, S>(
        &self,
        product: &'a VectorProduct<S>,
    ) -> Result<FixpointProblem<'a, VectorProduct<S>>, EngineError>
    where
        S: DistanceSpace<Point = P, Monoid = M>,
        PowerFamily<S::Family>: NullFamily<PowerMonoid<M>>,
    {
        let m = self.arity();
        if product.arity() != m {
            return Err(EngineError::ArityMismatch {
                expected: m,
                found: product.arity(),
            });
        }
        if self.x0.len() != m {
            return Err(EngineError::ArityMismatch {
                expected: m,
                found: self.x0.len(),
            });
        }
        let lift = sigma_lift(Arc::clone(&self.f), self.sigma.clone())?;
        let order = p_order(Arc::clone(&self.order), &self.p, m)?;
        let mut problem = FixpointProblem {
            space: product,
            map: lift,
            lambda: self.lambda.clone(),
            x0: self.x0.clone(),
            stop: self.stop,
            variant: super::Variant::General,
            samples: self.samples.clone().map(Into::into),
        };
        problem = problem.monotone(order, self.upper_riesz);
        Ok(problem)
    }
}

/// Runs the monotone solver on the lifted map over `X^m` with the
/// vector-valued distance.
pub fn multiple_fixpoint_solve<S>(
    space: &S,
    problem: &MultipleProblem<S::Point, S::Monoid>,
    options: &SolveOptions,
) -> SolveResult<Vec<S::Point>, Vec<Dist<S>>>
where
    S: DistanceSpace + Clone,
    S::Point: 'static,
    S::Monoid: Clone,
    S::Family: Clone,
    PowerFamily<S::Family>: NullFamily<PowerMonoid<S::Monoid>>,
{
    let refuse = |error| {
        Err(SolveFailure {
            error,
            trace: Box::new(IterationTrace::empty("multiple", Uniqueness::NotClaimed)),
        })
    };
    let product = match VectorProduct::new(space.clone(), problem.arity()) {
        Ok(p) => p,
        Err(_) => {
            return refuse(EngineError::ArityMismatch {
                expected: 1,
                found: 0,
            })
        }
    };
    let lifted = match problem.lifted(&product) {
        Ok(l) => l,
        Err(e) => return refuse(e),
    };
    match monotone_picard_solve(&lifted, options) {
        Ok(mut t) => {
            t.variant = "multiple".to_string();
            Ok(t)
        }
        Err(mut f) => {
            f.trace.variant = "multiple".to_string();
            Err(f)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{real_order, Verdict};
    use crate::instances::{RealDistance, RealLine, Reals, VectorMonoid};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn coupled(x0: Vec<f64>, l: DMatrix<f64>) -> MultipleProblem<f64, Reals> {
        MultipleProblem {
            f: Arc::new(|a: &[f64]| (2.0 * a[0] - a[1] + 3.0) / 4.0),
            sigma: vec![vec![0, 1], vec![1, 0]],
            p: vec![0],
            order: real_order(),
            upper_riesz: true,
            lambda: ContractionOperator::matrix(&VectorMonoid::reals(2), l).unwrap(),
            x0,
            stop: StopRule {
                eps_level: 40,
                max_iter: 10_000,
            },
            samples: None,
        }
    }

    fn lipschitz() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.5, 0.25, 0.25, 0.5])
    }

    #[test]
    fn lift_by_substitution() {
        let f: TupleMap<f64> = Arc::new(|a: &[f64]| (2.0 * a[0] - a[1] + 3.0) / 4.0);
        let lift = sigma_lift(f, vec![vec![0, 1], vec![1, 0]]).unwrap();
        let (x, y) = (0.3, -1.7);
        assert_eq!(
            lift(&vec![x, y]),
            vec![(2.0 * x - y + 3.0) / 4.0, (2.0 * y - x + 3.0) / 4.0]
        );
        let id = sigma_lift(Arc::new(|a: &[f64]| a[0] * 3.0), vec![vec![0]]).unwrap();
        assert_eq!(id(&vec![2.0]), vec![6.0]);
        let c = sigma_lift(Arc::new(|_: &[f64]| 5.0), vec![vec![0, 1], vec![1, 1]]).unwrap();
        assert_eq!(c(&vec![1.0, 2.0]), vec![5.0, 5.0]);
    }

    #[test]
    fn bad_index_maps() {
        let f: TupleMap<f64> = Arc::new(|a: &[f64]| a[0]);
        assert_eq!(
            sigma_lift(Arc::clone(&f), vec![vec![0, 2], vec![1, 0]]).err(),
            Some(EngineError::IndexOutOfRange {
                map: 0,
                position: 1,
                value: 2,
                arity: 2
            })
        );
        assert_eq!(
            sigma_lift(f, vec![vec![0], vec![1, 0]]).err(),
            Some(EngineError::ArityMismatch {
                expected: 2,
                found: 1
            })
        );
        assert!(p_order(real_order(), &[3], 2).is_err());
    }

    #[test]
    fn p_order_reverses_outside_p() {
        let o = p_order(real_order(), &[0], 2).unwrap();
        assert!(o(&vec![0.0, 3.0], &vec![1.0, 2.0]));
        assert!(!o(&vec![0.0, 2.0], &vec![1.0, 3.0]));
    }

    #[test]
    fn coupled_fixed_point() {
        let line = RealLine::new(RealDistance::Absolute);
        let t = multiple_fixpoint_solve(
            &line,
            &coupled(vec![0.0, 3.0], lipschitz()),
            &Default::default(),
        )
        .unwrap();
        let x = t.fixpoint().unwrap();
        assert!(
            (x[0] - 1.0).abs() < 1e-8 && (x[1] - 1.0).abs() < 1e-8,
            "{x:?}"
        );
        assert!(t.checks.iter().all(|c| c.holds()), "{:?}", t.checks);
        assert_eq!(t.variant, "multiple");
        let rho = t.certificate.spectral.unwrap().radius;
        assert!((rho - 0.75).abs() < 1e-9);
    }

    #[test]
    fn coupled_fixed_point_from_random_starts() {
        let line = RealLine::new(RealDistance::Absolute);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            // (1 − u, 1 + v) with v ∈ [u/2, 2u] lies below its lift
            let u: f64 = rng.gen_range(0.1..50.0);
            let v = rng.gen_range(u / 2.0..2.0 * u);
            let t = multiple_fixpoint_solve(
                &line,
                &coupled(vec![1.0 - u, 1.0 + v], lipschitz()),
                &Default::default(),
            )
            .unwrap();
            let x = t.fixpoint().unwrap();
            assert!((x[0] - 1.0).abs() < 1e-8 && (x[1] - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_map_in_one_step() {
        let line = RealLine::new(RealDistance::Absolute);
        let mut p = coupled(vec![0.0, 9.0], lipschitz());
        p.f = Arc::new(|_| 4.0);
        let t = multiple_fixpoint_solve(&line, &p, &Default::default()).unwrap();
        assert_eq!(t.iterates[1], vec![4.0, 4.0]);
        assert_eq!(t.fixpoint().unwrap(), &vec![4.0, 4.0]);
        // the stop also needs the step into (c, c) to be small, one step later
        assert_eq!(t.iterations(), 2);
    }

    #[test]
    fn expanding_coupling_is_refused() {
        let line = RealLine::new(RealDistance::Absolute);
        let l = DMatrix::from_row_slice(2, 2, &[0.6, 0.6, 0.6, 0.6]);
        let err = multiple_fixpoint_solve(&line, &coupled(vec![0.0, 3.0], l), &Default::default())
            .unwrap_err();
        assert!(matches!(
            err.error,
            EngineError::CertificateRefused {
                verdict: Verdict::Refuted,
                ..
            }
        ));
    }

    #[test]
    fn start_above_its_lift_is_rejected() {
        let line = RealLine::new(RealDistance::Absolute);
        let err = multiple_fixpoint_solve(
            &line,
            &coupled(vec![3.0, 0.0], lipschitz()),
            &Default::default(),
        )
        .unwrap_err();
        assert_eq!(err.error, EngineError::NotMonotoneStart);
    }

    #[test]
    fn single_coordinate_matches_the_monotone_solver() {
        let line = RealLine::new(RealDistance::Absolute);
        let q = 1.0 / (2.0 * 2f64.sqrt());
        let samples: Vec<f64> = (0..=40).map(|i| i as f64 / 20.0).collect();
        let single = FixpointProblem::new(
            &line,
            |x: &f64| (x + 2.0).sqrt(),
            ContractionOperator::scalar(&Reals::default(), q).unwrap(),
            0.0,
        )
        .monotone(real_order(), true)
        .with_samples(samples.clone());
        let a = monotone_picard_solve(&single, &Default::default()).unwrap();
        let lifted = MultipleProblem {
            f: Arc::new(|a: &[f64]| (a[0] + 2.0).sqrt()),
            sigma: vec![vec![0]],
            p: vec![0],
            order: real_order(),
            upper_riesz: true,
            lambda: ContractionOperator::matrix(
                &VectorMonoid::reals(1),
                DMatrix::from_element(1, 1, q),
            )
            .unwrap(),
            x0: vec![0.0],
            stop: StopRule::default(),
            samples: Some(samples.iter().map(|&s| vec![s]).collect()),
        };
        let b = multiple_fixpoint_solve(&line, &lifted, &Default::default()).unwrap();
        assert_eq!(a.iterates.len(), b.iterates.len());
        for (x, y) in a.iterates.iter().zip(&b.iterates) {
            assert_eq!(x.to_bits(), y[0].to_bits());
        }
    }
}
