//! Nyström-type discretization of `x(t) = f(t) + ∫_T g(t, s, x(s)) dμ(s)`.
//!
//! Unknowns are `ℝᵈ`-valued on the quadrature nodes and the distance is the
//! per-node Euclidean norm, valued in the grid-function monoid. Convergence
//! is certified by two routes on the weighted kernel matrix
//! `Qmat[i, j] = Q(tᵢ, sⱼ)·wⱼ`: its spectral radius, and the Cauchy-series
//! test on the row sums of its powers.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{
    matrix_certificate, solve_with_certificate, Certificate, ContractionOperator, EngineError,
    FixpointProblem, SolveOptions, SolveResult, SpectralEstimate, StopRule, UniquenessReport,
    Verdict, SPECTRAL_TOLERANCE,
};
use crate::instances::{GridFamily, GridFunctionMonoid, InstanceError, RealDistance};
use crate::monoid::{cauchy_series_test, Horizon, NullFamily, OrderedMonoid, SeriesVerdict};
use crate::sci;
use crate::space::{DistanceSpace, SpaceClass};

/// Default number of iterated kernels in the row-sum route.
pub const DEFAULT_SERIES_TERMS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FredholmError {
    #[error("quadrature needs at least one node")]
    EmptyQuadrature,
    #[error("interval [{a}, {b}] is empty or not finite")]
    InvalidInterval { a: f64, b: f64 },
    #[error("{nodes} nodes but {weights} weights")]
    LengthMismatch { nodes: usize, weights: usize },
    #[error("weight {index} is {value}; weights must be finite and non-negative")]
    NegativeWeight { index: usize, value: f64 },
    #[error("weights sum to {found}, expected measure {expected}")]
    MeasureMismatch { expected: f64, found: f64 },
    #[error("kernel bound Q({t}, {s}) = {value} is negative or not finite")]
    NegativeKernel { t: f64, s: f64, value: f64 },
    #[error("iterated kernels need n ≥ 1")]
    InvalidCount,
    #[error("expected {expected} rows, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// Nodes and non-negative weights approximating `μ` on `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Quadrature {
    /// Composite midpoint rule with `n` cells on `[a, b]`.
    pub fn midpoint(a: f64, b: f64, n: usize) -> Result<Self, FredholmError> {
        if n == 0 {
            return Err(FredholmError::EmptyQuadrature);
        }
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(FredholmError::InvalidInterval { a, b });
        }
        let h = (b - a) / n as f64;
        Ok(Self {
            nodes: (0..n).map(|i| a + (i as f64 + 0.5) * h).collect(),
            weights: vec![h; n],
        })
    }

    /// User-supplied table. With `measure` given, the weights must sum to
    /// it within `1e-12`.
    pub fn from_table(
        nodes: Vec<f64>,
        weights: Vec<f64>,
        measure: Option<f64>,
    ) -> Result<Self, FredholmError> {
        if nodes.is_empty() {
            return Err(FredholmError::EmptyQuadrature);
        }
        if nodes.len() != weights.len() {
            return Err(FredholmError::LengthMismatch {
                nodes: nodes.len(),
                weights: weights.len(),
            });
        }
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w >= 0.0 && w.is_finite()))
        {
            return Err(FredholmError::NegativeWeight { index, value });
        }
        let q = Self { nodes, weights };
        if let Some(expected) = measure {
            let found = q.measure();
            if (found - expected).abs() > 1e-12 {
                return Err(FredholmError::MeasureMismatch { expected, found });
            }
        }
        Ok(q)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ wⱼ`.
    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Dominating kernel `Q ≥ 0` and its weighted discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBound {
    qmat: DMatrix<f64>,
}

impl KernelBound {
    pub fn new(quad: &Quadrature, q: impl Fn(f64, f64) -> f64) -> Result<Self, FredholmError> {
        let n = quad.len();
        let mut values = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                values[(i, j)] = q(quad.nodes[i], quad.nodes[j]);
            }
        }
        Self::from_values(quad, values)
    }

    /// Tabulated `Q(tᵢ, sⱼ)`, unweighted.
    pub fn from_values(quad: &Quadrature, values: DMatrix<f64>) -> Result<Self, FredholmError> {
        let n = quad.len();
        if values.nrows() != n || values.ncols() != n {
            return Err(FredholmError::DimensionMismatch {
                expected: n,
                found: if values.nrows() != n {
                    values.nrows()
                } else {
                    values.ncols()
                },
            });
        }
        let mut qmat = values;
        for j in 0..n {
            for i in 0..n {
                let v = qmat[(i, j)];
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(FredholmError::NegativeKernel {
                        t: quad.nodes[i],
                        s: quad.nodes[j],
                        value: v,
                    });
                }
                qmat[(i, j)] = v * quad.weights[j];
            }
        }
        Ok(Self { qmat })
    }

    /// `Q(tᵢ, sⱼ)·wⱼ`.
    pub fn qmat(&self) -> &DMatrix<f64> {
        &self.qmat
    }
}

/// `Q₁mat, …, Qₙmat` with `Qₖmat = Qₖ₋₁mat · Q₁mat`.
pub fn iterated_kernels(bound: &KernelBound, n: usize) -> Result<Vec<DMatrix<f64>>, FredholmError> {
    if n == 0 {
        return Err(FredholmError::InvalidCount);
    }
    let mut out = Vec::with_capacity(n);
    out.push(bound.qmat.clone());
    for k in 1..n {
        let next = &out[k - 1] * &bound.qmat;
        out.push(next);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesRoute {
    pub verdict: Verdict,
    pub terms: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FredholmCertificate {
    /// Certified or refuted when both routes agree, inconclusive otherwise.
    pub verdict: Verdict,
    pub spectral: SpectralEstimate,
    pub spectral_verdict: Verdict,
    pub series: SeriesRoute,
    pub agree: bool,
}

impl FredholmCertificate {
    pub fn radius(&self) -> f64 {
        self.spectral.radius
    }

    fn to_engine(&self) -> Certificate {
        let mut c = Certificate::new(
            self.verdict,
            "spectral-radius+row-sum-series",
            format!(
                "rho in [{}, {}] ({:?}); row sums over {} kernels {:?}: {}",
                sci(self.spectral.lower),
                sci(self.spectral.upper),
                self.spectral_verdict,
                self.series.terms,
                self.series.verdict,
                self.series.detail
            ),
        );
        c.spectral = Some(self.spectral);
        c
    }
}

/// Both certificate routes. Row sums `rₙ = Qₙmat·1` are built by
/// matrix-vector products and tested as a series in the grid-function
/// monoid, with `series_terms` terms and `horizon.levels` levels.
pub fn convergence_certificate(
    bound: &KernelBound,
    quad: &Quadrature,
    series_terms: usize,
    horizon: Horizon,
) -> Result<FredholmCertificate, FredholmError> {
    let monoid = GridFunctionMonoid::new(quad.nodes.clone())?;
    let fam = GridFamily { nodes: quad.len() };

    let spec = matrix_certificate(&bound.qmat, SPECTRAL_TOLERANCE)?;
    let spectral = spec
        .spectral
        .expect("matrix certificate carries an estimate");
    // the early-exit bracket decides; report a converged estimate
    let spectral = match crate::engine::spectral_radius(
        &bound.qmat,
        1e-13,
        crate::engine::SPECTRAL_MAX_ITER,
    ) {
        Ok(full) => full,
        Err(_) => spectral,
    };

    let mut r = DVector::from_element(quad.len(), 1.0);
    let terms = (0..series_terms).map(|_| {
        r = &bound.qmat * &r;
        r.iter().copied().collect::<Vec<f64>>()
    });
    let series = match cauchy_series_test(
        &monoid,
        &fam,
        terms,
        Horizon::new(horizon.levels, series_terms as u64),
    )
    .map_err(|e| FredholmError::Engine(EngineError::InvalidOperator(e.to_string())))?
    {
        SeriesVerdict::Certified => SeriesRoute {
            verdict: Verdict::Certified,
            terms: series_terms,
            detail: "tail sums below every level".to_string(),
        },
        SeriesVerdict::Refuted { level, n, m } => SeriesRoute {
            verdict: Verdict::Refuted,
            terms: series_terms,
            detail: format!("block [{n}, {m}] not below eps({level})"),
        },
    };
    let agree = series.verdict == spec.verdict;
    Ok(FredholmCertificate {
        verdict: if agree {
            spec.verdict
        } else {
            Verdict::Inconclusive
        },
        spectral,
        spectral_verdict: spec.verdict,
        series,
        agree,
    })
}

/// Grid functions `T_h → ℝᵈ` stored as `N×d` matrices, with the per-node
/// distance valued in the grid-function monoid.
#[derive(Debug, Clone)]
pub struct GridSpace {
    monoid: GridFunctionMonoid,
    family: GridFamily,
    dim: usize,
    node_distance: RealDistance,
}

impl GridSpace {
    /// Per-node Euclidean distance.
    pub fn new(nodes: Vec<f64>, dim: usize) -> Result<Self, FredholmError> {
        let monoid = GridFunctionMonoid::new(nodes)?;
        let family = GridFamily {
            nodes: monoid.len(),
        };
        Ok(Self {
            monoid,
            family,
            dim: dim.max(1),
            node_distance: RealDistance::Absolute,
        })
    }

    /// Applies a scalar distance to the per-node Euclidean gap, pointwise:
    /// `d(x, y)(t) = h(|x(t) − y(t)|)`.
    pub fn with_node_distance(mut self, kind: RealDistance) -> Self {
        self.node_distance = kind;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[f64] {
        self.monoid.nodes()
    }
}

impl DistanceSpace for GridSpace {
    type Point = DMatrix<f64>;
    type Monoid = GridFunctionMonoid;
    type Family = GridFamily;

    fn monoid(&self) -> &GridFunctionMonoid {
        &self.monoid
    }

    fn family(&self) -> &GridFamily {
        &self.family
    }

    fn dist(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Vec<f64> {
        (0..x.nrows())
            .map(|i| self.node_distance.eval((x.row(i) - y.row(i)).norm(), 0.0))
            .collect()
    }

    fn class(&self) -> SpaceClass {
        self.node_distance.class()
    }

    fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64> {
        DMatrix::from_fn(self.monoid.len(), self.dim, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn render_point(&self, p: &DMatrix<f64>) -> String {
        let rows: Vec<String> = p
            .row_iter()
            .map(|r| {
                let v: Vec<String> = r.iter().map(|&x| sci(x)).collect();
                format!("[{}]", v.join(", "))
            })
            .collect();
        format!("[{}]", rows.join(", "))
    }
}

/// `g(t, s, x(s))`, writing its `ℝᵈ` value into `out`.
pub type IntegrandFn = Arc<dyn Fn(f64, f64, &[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub enum Integrand {
    /// `g(t, s, x) = K(t, s)·x` with `K(tᵢ, sⱼ)` tabulated; applied as a
    /// matrix product.
    Linear(DMatrix<f64>),
    General(IntegrandFn),
}

/// Linear integrand `K(t, s)·x` tabulated on the quadrature nodes.
pub fn linear_integrand(quad: &Quadrature, k: impl Fn(f64, f64) -> f64) -> Integrand {
    let n = quad.len();
    Integrand::Linear(DMatrix::from_fn(n, n, |i, j| {
        k(quad.nodes[i], quad.nodes[j])
    }))
}

#[derive(Clone)]
pub struct FredholmProblem {
    pub quad: Quadrature,
    /// `f(tᵢ)` as an `N×d` matrix.
    pub f: DMatrix<f64>,
    pub g: Integrand,
    pub bound: KernelBound,
    pub stop: StopRule,
    /// Start point; `f` when absent.
    pub x0: Option<DMatrix<f64>>,
    pub series_terms: usize,
}

impl FredholmProblem {
    pub fn new(
        quad: Quadrature,
        f: DMatrix<f64>,
        g: Integrand,
        bound: KernelBound,
    ) -> Result<Self, FredholmError> {
        if f.nrows() != quad.len() {
            return Err(FredholmError::DimensionMismatch {
                expected: quad.len(),
                found: f.nrows(),
            });
        }
        if bound.qmat.nrows() != quad.len() {
            return Err(FredholmError::DimensionMismatch {
                expected: quad.len(),
                found: bound.qmat.nrows(),
            });
        }
        if let Integrand::Linear(k) = &g {
            if k.nrows() != quad.len() || k.ncols() != quad.len() {
                return Err(FredholmError::DimensionMismatch {
                    expected: quad.len(),
                    found: if k.nrows() != quad.len() {
                        k.nrows()
                    } else {
                        k.ncols()
                    },
                });
            }
        }
        Ok(Self {
            quad,
            f,
            g,
            bound,
            stop: StopRule {
                eps_level: 40,
                max_iter: 10_000,
            },
            x0: None,
            series_terms: DEFAULT_SERIES_TERMS,
        })
    }

    /// `f(t)` sampled at the nodes for a scalar right-hand side.
    pub fn scalar_rhs(quad: &Quadrature, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        DMatrix::from_iterator(quad.len(), 1, quad.nodes.iter().map(|&t| f(t)))
    }

    /// `(Ax)(tᵢ) = f(tᵢ) + Σⱼ wⱼ·g(tᵢ, sⱼ, x(sⱼ))`. General integrands run
    /// rows in parallel, each row summed in node order.
    pub fn operator(&self) -> impl Fn(&DMatrix<f64>) -> DMatrix<f64> + Send + Sync + 'static {
        let quad = self.quad.clone();
        let f = self.f.clone();
        let weighted = match &self.g {
            Integrand::Linear(k) => Some(DMatrix::from_fn(k.nrows(), k.ncols(), |i, j| {
                k[(i, j)] * quad.weights[j]
            })),
            Integrand::General(_) => None,
        };
        let g = match &self.g {
            Integrand::General(g) => Some(Arc::clone(g)),
            Integrand::Linear(_) => None,
        };
        move |x: &DMatrix<f64>| {
            if let Some(kw) = &weighted {
                return &f + kw * x;
            }
            let g = g.as_ref().expect("general integrand");
            let n = quad.len();
            let d = f.ncols();
            let xs: Vec<Vec<f64>> = x.row_iter().map(|r| r.iter().copied().collect()).collect();
            let rows: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let t = quad.nodes[i];
                    let mut acc: Vec<f64> = f.row(i).iter().copied().collect();
                    let mut buf = vec![0.0; d];
                    for ((&s, &w), xj) in quad.nodes.iter().zip(&quad.weights).zip(&xs) {
                        g(t, s, xj, &mut buf);
                        for (a, b) in acc.iter_mut().zip(&buf) {
                            *a += w * b;
                        }
                    }
                    acc
                })
                .collect();
            DMatrix::from_fn(n, d, |i, k| rows[i][k])
        }
    }
}

pub struct FredholmRun {
    pub nodes: Vec<f64>,
    pub certificate: FredholmCertificate,
    pub result: SolveResult<DMatrix<f64>, Vec<f64>>,
}

impl FredholmRun {
    pub fn solution(&self) -> Option<&DMatrix<f64>> {
        self.result.as_ref().ok().and_then(|t| t.fixpoint())
    }

    /// Per-node CSV: `t,x` or `t,x0,x1,…`.
    pub fn to_csv(&self) -> Option<String> {
        let x = self.solution()?;
        let mut out = String::from("t");
        if x.ncols() == 1 {
            out.push_str(",x");
        } else {
            for k in 0..x.ncols() {
                write!(out, ",x{k}").expect("write to string");
            }
        }
        out.push('\n');
        for (i, t) in self.nodes.iter().enumerate() {
            out.push_str(&sci(*t));
            for k in 0..x.ncols() {
                out.push(',');
                out.push_str(&sci(x[(i, k)]));
            }
            out.push('\n');
        }
        Some(out)
    }
}

/// Certificate, then Picard iteration of the discretized operator through
/// the engine with the integral contraction `λ = Qmat·`.
pub fn fredholm_solve(
    problem: &FredholmProblem,
    options: &SolveOptions,
) -> Result<FredholmRun, FredholmError> {
    let certificate = convergence_certificate(
        &problem.bound,
        &problem.quad,
        problem.series_terms,
        options.horizon,
    )?;
    let space = GridSpace::new(problem.quad.nodes.clone(), problem.f.ncols())?;
    let lambda = ContractionOperator::integral(space.monoid(), problem.bound.qmat.clone())?;
    let x0 = problem.x0.clone().unwrap_or_else(|| problem.f.clone());
    if x0.nrows() != problem.quad.len() || x0.ncols() != problem.f.ncols() {
        return Err(FredholmError::DimensionMismatch {
            expected: problem.quad.len(),
            found: x0.nrows(),
        });
    }
    let fp = FixpointProblem::new(&space, problem.operator(), lambda, x0).with_stop(problem.stop);
    let result = solve_with_certificate(&fp, options, Some(certificate.to_engine()));
    Ok(FredholmRun {
        nodes: problem.quad.nodes.clone(),
        certificate,
        result,
    })
}

/// Start points for multi-start checks: `f` plus seeded perturbations.
pub fn random_starts(problem: &FredholmProblem, count: usize, seed: u64) -> Vec<DMatrix<f64>> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| problem.f.map(|v| v + rng.gen_range(-5.0..5.0)))
        .collect()
}

/// Solves from each start and compares the results pairwise at
/// `eps(agreement_level)` of the grid family.
pub fn fredholm_uniqueness(
    problem: &FredholmProblem,
    starts: &[DMatrix<f64>],
    agreement_level: usize,
    options: &SolveOptions,
) -> Result<UniquenessReport<DMatrix<f64>>, FredholmError> {
    let space = GridSpace::new(problem.quad.nodes.clone(), problem.f.ncols())?;
    let fixpoints = starts
        .par_iter()
        .map(|x0| {
            let mut p = problem.clone();
            p.x0 = Some(x0.clone());
            fredholm_solve(&p, options).map(|run| run.solution().cloned())
        })
        .collect::<Result<Vec<_>, _>>()?;
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
                        format!("starts {i} and {j}: sup gap {}", sci(m.sup_norm(&d)))
                    });
                }
            }
        }
    }
    Ok(UniquenessReport {
        agree: first_disagreement.is_none(),
        fixpoints,
        first_disagreement,
    })
}

/// Named built-in kernels for problem files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelSpec {
    /// `K ≡ c`.
    Constant { c: f64 },
    /// `K(t, s) = c·t·s`.
    Product {
        #[serde(default = "one")]
        c: f64,
    },
    /// `K(tᵢ, sⱼ)` given at the nodes.
    Table { values: Vec<Vec<f64>> },
}

fn one() -> f64 {
    1.0
}

impl KernelSpec {
    /// Kernel matrix at the nodes, unweighted.
    pub fn values(&self, quad: &Quadrature) -> Result<DMatrix<f64>, FredholmError> {
        let n = quad.len();
        match self {
            KernelSpec::Constant { c } => Ok(DMatrix::from_element(n, n, *c)),
            KernelSpec::Product { c } => Ok(DMatrix::from_fn(n, n, |i, j| {
                c * quad.nodes[i] * quad.nodes[j]
            })),
            KernelSpec::Table { values } => {
                if values.len() != n {
                    return Err(FredholmError::DimensionMismatch {
                        expected: n,
                        found: values.len(),
                    });
                }
                if let Some(r) = values.iter().find(|r| r.len() != n) {
                    return Err(FredholmError::DimensionMismatch {
                        expected: n,
                        found: r.len(),
                    });
                }
                Ok(DMatrix::from_fn(n, n, |i, j| values[i][j]))
            }
        }
    }

    /// Linear problem `x = f + ∫ K x dμ` with `Q = |K|` as the bound.
    pub fn linear_problem(
        &self,
        quad: Quadrature,
        f: DMatrix<f64>,
    ) -> Result<FredholmProblem, FredholmError> {
        let k = self.values(&quad)?;
        let bound = KernelBound::from_values(&quad, k.abs())?;
        let g = Integrand::Linear(k);
        FredholmProblem::new(quad, f, g, bound)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize) -> Quadrature {
        Quadrature::midpoint(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn quadrature_contracts() {
        let q = uniform(64);
        assert!((q.measure() - 1.0).abs() < 1e-12);
        assert_eq!(q.nodes()[0], 0.5 / 64.0);
        assert_eq!(
            Quadrature::midpoint(0.0, 1.0, 0),
            Err(FredholmError::EmptyQuadrature)
        );
        assert!(matches!(
            Quadrature::midpoint(1.0, 0.0, 3),
            Err(FredholmError::InvalidInterval { .. })
        ));
        assert_eq!(
            Quadrature::from_table(vec![0.0, 1.0], vec![0.5, -0.5], None),
            Err(FredholmError::NegativeWeight {
                index: 1,
                value: -0.5
            })
        );
        assert!(matches!(
            Quadrature::from_table(vec![0.0, 1.0], vec![0.5, 0.4], Some(1.0)),
            Err(FredholmError::MeasureMismatch { .. })
        ));
        assert!(Quadrature::from_table(vec![0.25, 0.75], vec![0.5, 0.5], Some(1.0)).is_ok());
    }

    #[test]
    fn constant_kernel_powers() {
        let q = uniform(16);
        let c = 0.7;
        let k = iterated_kernels(&KernelBound::new(&q, |_, _| c).unwrap(), 5).unwrap();
        for (n, m) in k.iter().enumerate() {
            // Qₙ ≡ cⁿ, weighted by 1/16
            let expect = c.powi(n as i32 + 1) / 16.0;
            assert!(m.iter().all(|v| (v - expect).abs() < 1e-15));
        }
        assert_eq!(
            iterated_kernels(&KernelBound::new(&q, |_, _| c).unwrap(), 0),
            Err(FredholmError::InvalidCount)
        );
    }

    #[test]
    fn product_kernel_second_power() {
        let q = uniform(400);
        let k = iterated_kernels(&KernelBound::new(&q, |t, s| t * s).unwrap(), 2).unwrap();
        let w = 1.0 / 400.0;
        for (i, &t) in q.nodes().iter().enumerate().step_by(37) {
            for (j, &s) in q.nodes().iter().enumerate().step_by(41) {
                // Q₂(t, s) = t·s/3 up to the midpoint error in ∫u²
                assert!((k[1][(i, j)] / w - t * s / 3.0).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn negative_bounds_are_rejected() {
        let q = uniform(4);
        assert!(matches!(
            KernelBound::new(&q, |t, _| t - 0.5),
            Err(FredholmError::NegativeKernel { .. })
        ));
    }

    #[test]
    fn certificates_for_constant_kernels() {
        let q = uniform(64);
        let h = Horizon::default();
        let half = convergence_certificate(&KernelBound::new(&q, |_, _| 0.5).unwrap(), &q, 200, h)
            .unwrap();
        assert_eq!(half.verdict, Verdict::Certified);
        assert!(half.agree);
        assert!((half.radius() - 0.5).abs() < 1e-10);
        let unit = convergence_certificate(&KernelBound::new(&q, |_, _| 1.0).unwrap(), &q, 200, h)
            .unwrap();
        assert_eq!(unit.verdict, Verdict::Refuted);
        assert!(unit.agree);
        // on [0, 2] the ratio is c·μ(T) = 0.8
        let wide = Quadrature::midpoint(0.0, 2.0, 32).unwrap();
        let c = convergence_certificate(
            &KernelBound::new(&wide, |_, _| 0.4).unwrap(),
            &wide,
            1000,
            h,
        )
        .unwrap();
        assert_eq!(c.verdict, Verdict::Certified);
        assert!((c.radius() - 0.8).abs() < 1e-10);
        let c = convergence_certificate(
            &KernelBound::new(&wide, |_, _| 0.6).unwrap(),
            &wide,
            1000,
            h,
        )
        .unwrap();
        assert_eq!(c.verdict, Verdict::Refuted);
    }

    #[test]
    fn short_series_horizons_are_inconclusive() {
        let q = uniform(8);
        let c = convergence_certificate(
            &KernelBound::new(&q, |_, _| 0.9).unwrap(),
            &q,
            200,
            Horizon::default(),
        )
        .unwrap();
        assert_eq!(c.spectral_verdict, Verdict::Certified);
        assert_eq!(c.verdict, Verdict::Inconclusive);
        assert!(!c.agree);
        let c = convergence_certificate(
            &KernelBound::new(&q, |_, _| 0.9).unwrap(),
            &q,
            2000,
            Horizon::default(),
        )
        .unwrap();
        assert_eq!(c.verdict, Verdict::Certified);
    }

    fn constant_problem(c: f64) -> FredholmProblem {
        let q = uniform(64);
        let f = FredholmProblem::scalar_rhs(&q, |_| 1.0);
        KernelSpec::Constant { c }.linear_problem(q, f).unwrap()
    }

    #[test]
    fn constant_kernel_solution() {
        let run = fredholm_solve(&constant_problem(0.5), &SolveOptions::default()).unwrap();
        let x = run.solution().unwrap();
        assert!(x.iter().all(|v| (v - 2.0).abs() < 1e-8));
        let trace = run.result.as_ref().unwrap();
        assert_eq!(trace.checks[0].violations, 0);
        let lambda = ContractionOperator::integral(
            &GridFunctionMonoid::new(run.nodes.clone()).unwrap(),
            constant_problem(0.5).bound.qmat().clone(),
        )
        .unwrap();
        assert_eq!(
            trace.step_bound_violation(&lambda, lambda_monoid(&run)),
            None
        );
    }

    fn lambda_monoid(run: &FredholmRun) -> &'static GridFunctionMonoid {
        Box::leak(Box::new(
            GridFunctionMonoid::new(run.nodes.clone()).unwrap(),
        ))
    }

    #[test]
    fn zero_integrand_returns_f() {
        let q = uniform(8);
        let f = FredholmProblem::scalar_rhs(&q, |t| t.sin());
        let p = KernelSpec::Constant { c: 0.0 }
            .linear_problem(q, f.clone())
            .unwrap();
        let run = fredholm_solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(run.solution().unwrap(), &f);
    }

    #[test]
    fn separable_kernel() {
        let q = uniform(64);
        let f = FredholmProblem::scalar_rhs(&q, |t| t);
        let p = KernelSpec::Product { c: 1.0 }
            .linear_problem(q.clone(), f)
            .unwrap();
        let run = fredholm_solve(&p, &SolveOptions::default()).unwrap();
        let x = run.solution().unwrap();
        for (i, &t) in q.nodes().iter().enumerate() {
            assert!((x[(i, 0)] - 1.5 * t).abs() < 1e-4);
        }
    }

    #[test]
    fn refusal_and_override() {
        let p = constant_problem(1.0);
        let run = fredholm_solve(&p, &SolveOptions::default()).unwrap();
        let err = run.result.unwrap_err();
        assert!(matches!(err.error, EngineError::CertificateRefused { .. }));
        let opts = SolveOptions {
            override_certificate: true,
            ..Default::default()
        };
        let run = fredholm_solve(&p, &opts).unwrap();
        assert!(matches!(
            run.result.unwrap_err().error,
            EngineError::DivergenceDetected { .. }
        ));
    }

    #[test]
    fn vector_valued_unknowns() {
        // two uncoupled copies of the constant equation with f = (1, −3)
        let q = uniform(16);
        let f = DMatrix::from_fn(16, 2, |_, k| if k == 0 { 1.0 } else { -3.0 });
        let bound = KernelBound::new(&q, |_, _| 0.5).unwrap();
        let p =
            FredholmProblem::new(q.clone(), f, linear_integrand(&q, |_, _| 0.5), bound).unwrap();
        let run = fredholm_solve(&p, &SolveOptions::default()).unwrap();
        let x = run.solution().unwrap();
        assert!(x.column(0).iter().all(|v| (v - 2.0).abs() < 1e-8));
        assert!(x.column(1).iter().all(|v| (v + 6.0).abs() < 1e-8));
        let csv = run.to_csv().unwrap();
        assert!(csv.starts_with("t,x0,x1\n"));
        assert_eq!(csv.lines().count(), 17);
    }

    #[test]
    fn nonlinear_integrand_matches_linear_bound() {
        // x = 1 + ∫ 0.5·sin(x(s)) ds, dominated by Q ≡ 0.5
        let q = uniform(32);
        let f = FredholmProblem::scalar_rhs(&q, |_| 1.0);
        let g: IntegrandFn = Arc::new(|_, _, x, out| out[0] = 0.5 * x[0].sin());
        let bound = KernelBound::new(&q, |_, _| 0.5).unwrap();
        let p = FredholmProblem::new(q, f, Integrand::General(g), bound).unwrap();
        let run = fredholm_solve(&p, &SolveOptions::default()).unwrap();
        let trace = run.result.as_ref().unwrap();
        assert_eq!(trace.checks[0].violations, 0);
        let x = run.solution().unwrap()[(0, 0)];
        // scalar fixed point of x = 1 + 0.5·sin x
        let mut y = 1.0f64;
        for _ in 0..200 {
            y = 1.0 + 0.5 * y.sin();
        }
        assert!((x - y).abs() < 1e-10);
    }

    #[test]
    fn understated_bound_is_caught_by_sampling() {
        let q = uniform(16);
        let f = FredholmProblem::scalar_rhs(&q, |_| 1.0);
        let p = FredholmProblem::new(
            q.clone(),
            f,
            linear_integrand(&q, |_, _| 0.9),
            KernelBound::new(&q, |_, _| 0.3).unwrap(),
        )
        .unwrap();
        let run = fredholm_solve(&p, &SolveOptions::default()).unwrap();
        let trace = run.result.as_ref().unwrap();
        assert!(trace.checks[0].violations > 0);
    }

    #[test]
    fn multi_start_agrees() {
        let p = constant_problem(0.5);
        let starts = random_starts(&p, 10, 3);
        let r = fredholm_uniqueness(&p, &starts, 39, &SolveOptions::default()).unwrap();
        assert!(r.agree, "{:?}", r.first_disagreement);
        assert_eq!(r.fixpoints.len(), 10);
    }
}
