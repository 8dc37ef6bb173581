use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::spectral::{power_iteration, validate_nonnegative, SpectralEstimate};
use super::EngineError;
use crate::instances::{GridFunctionMonoid, VectorMonoid};
use crate::monoid::{
    cauchy_series_test, Horizon, NullFamily, OrderedMonoid, ScalableMonoid, SeriesVerdict,
};

/// Margin used by the matrix certificate: certified when `ρ < 1 − tol`.
pub const SPECTRAL_TOLERANCE: f64 = 1e-10;

/// Iteration cap for spectral certificates.
pub const SPECTRAL_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaKind {
    Scalar {
        q: f64,
    },
    Matrix(DMatrix<f64>),
    /// Weighted discretization of a dominating kernel, `Q(tᵢ, sⱼ)·wⱼ`.
    Integral(DMatrix<f64>),
    Custom {
        name: String,
    },
}

impl LambdaKind {
    pub fn label(&self) -> &str {
        match self {
            LambdaKind::Scalar { .. } => "scalar",
            LambdaKind::Matrix(_) => "matrix",
            LambdaKind::Integral(_) => "integral",
            LambdaKind::Custom { .. } => "custom",
        }
    }
}

type Apply<E> = Arc<dyn Fn(&E) -> E + Send + Sync>;

/// A self-map `λ` of the positive cone together with its certificate
/// strategy.
pub struct ContractionOperator<M: OrderedMonoid> {
    kind: LambdaKind,
    apply: Apply<M::Elem>,
}

impl<M: OrderedMonoid> Clone for ContractionOperator<M> {
    fn clone(&self) -> Self {
        Self {
            kind: self.kind.clone(),
            apply: Arc::clone(&self.apply),
        }
    }
}

impl<M: OrderedMonoid> fmt::Debug for ContractionOperator<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContractionOperator")
            .field("kind", &self.kind)
            .finish()
    }
}

fn mat_vec(mat: &DMatrix<f64>, t: &[f64]) -> Vec<f64> {
    assert_eq!(
        mat.ncols(),
        t.len(),
        "operator dimension does not match the element"
    );
    (mat * DVector::from_column_slice(t))
        .iter()
        .copied()
        .collect()
}

impl<M: OrderedMonoid> ContractionOperator<M> {
    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(&M::Elem) -> M::Elem + Send + Sync + 'static,
    ) -> Self {
        Self {
            kind: LambdaKind::Custom { name: name.into() },
            apply: Arc::new(f),
        }
    }

    pub fn kind(&self) -> &LambdaKind {
        &self.kind
    }

    pub fn apply(&self, t: &M::Elem) -> M::Elem {
        (self.apply)(t)
    }

    /// `λⁿ(t)`.
    pub fn iterate(&self, n: usize, t: &M::Elem) -> M::Elem {
        (0..n).fold(t.clone(), |acc, _| self.apply(&acc))
    }
}

impl<M: ScalableMonoid + Clone + 'static> ContractionOperator<M> {
    /// `λ(t) = q·t`.
    pub fn scalar(monoid: &M, q: f64) -> Result<Self, EngineError> {
        if !(q >= 0.0 && q.is_finite()) {
            return Err(EngineError::InvalidOperator(format!(
                "scalar factor {q} must be finite and non-negative"
            )));
        }
        let m = monoid.clone();
        Ok(Self {
            kind: LambdaKind::Scalar { q },
            apply: Arc::new(move |t| m.scale(q, t)),
        })
    }
}

impl ContractionOperator<VectorMonoid> {
    /// `λ(t) = L·t` on `ℝᵐ₊`.
    pub fn matrix(monoid: &VectorMonoid, mat: DMatrix<f64>) -> Result<Self, EngineError> {
        validate_nonnegative(&mat).map_err(|e| EngineError::InvalidOperator(e.to_string()))?;
        if mat.nrows() != monoid.dim {
            return Err(EngineError::DimensionMismatch {
                expected: monoid.dim,
                found: mat.nrows(),
            });
        }
        let m = mat.clone();
        Ok(Self {
            kind: LambdaKind::Matrix(mat),
            apply: Arc::new(move |t| mat_vec(&m, t)),
        })
    }
}

impl ContractionOperator<GridFunctionMonoid> {
    /// `λ(t)(tᵢ) = Σⱼ Qmat[i, j]·t(tⱼ)`.
    pub fn integral(monoid: &GridFunctionMonoid, qmat: DMatrix<f64>) -> Result<Self, EngineError> {
        validate_nonnegative(&qmat).map_err(|e| EngineError::InvalidOperator(e.to_string()))?;
        if qmat.nrows() != monoid.len() {
            return Err(EngineError::DimensionMismatch {
                expected: monoid.len(),
                found: qmat.nrows(),
            });
        }
        let m = qmat.clone();
        Ok(Self {
            kind: LambdaKind::Integral(qmat),
            apply: Arc::new(move |t| mat_vec(&m, t)),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Certified,
    Refuted,
    Inconclusive,
}

/// Outcome of the precheck on `Σ λⁿ(α)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub verdict: Verdict,
    pub method: String,
    pub detail: String,
    pub spectral: Option<SpectralEstimate>,
    /// Set when the run proceeded despite a verdict other than certified.
    pub overridden: bool,
}

impl Certificate {
    pub fn new(verdict: Verdict, method: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            verdict,
            method: method.into(),
            detail: detail.into(),
            spectral: None,
            overridden: false,
        }
    }
}

/// Certificate for `λ(t) = L·t`: certified iff `ρ(L) < 1 − tol`, refuted
/// once the lower bound reaches `1 − tol`.
pub fn matrix_certificate(mat: &DMatrix<f64>, tol: f64) -> Result<Certificate, EngineError> {
    let threshold = 1.0 - tol;
    let est = power_iteration(mat, tol, SPECTRAL_MAX_ITER, |lo, hi| {
        hi < threshold || lo >= threshold
    })
    .map_err(|e| EngineError::InvalidOperator(e.to_string()))?;
    let verdict = if est.upper < threshold {
        Verdict::Certified
    } else if est.lower >= threshold {
        Verdict::Refuted
    } else {
        Verdict::Inconclusive
    };
    let mut c = Certificate::new(
        verdict,
        "spectral-radius",
        format!(
            "rho in [{}, {}]",
            crate::sci(est.lower),
            crate::sci(est.upper)
        ),
    );
    c.spectral = Some(est);
    Ok(c)
}

/// Samples `x ≤ x + z` and checks `λ(x) ≤ λ(x + z)`.
pub fn check_monotone<M: OrderedMonoid>(
    lambda: &ContractionOperator<M>,
    monoid: &M,
    samples: usize,
    seed: u64,
) -> Result<(), EngineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let x = monoid.sample(&mut rng);
        let z = monoid.sample(&mut rng);
        let y = monoid.add(&x, &z);
        let (lx, ly) = (lambda.apply(&x), lambda.apply(&y));
        if !monoid.leq(&lx, &ly) {
            return Err(EngineError::NonMonotone {
                witness: format!(
                    "x = {} ≤ y = {} but λ(x) = {} is not ≤ λ(y) = {}",
                    monoid.render(&x),
                    monoid.render(&y),
                    monoid.render(&lx),
                    monoid.render(&ly)
                ),
            });
        }
    }
    Ok(())
}

/// Decides whether `Σ λⁿ(α)` is a Cauchy series, after sampling
/// monotonicity of `λ`.
///
/// Scalar and matrix operators use closed forms. Integral and custom
/// operators run the Cauchy-series test on `horizon.terms` iterates; a
/// refutation there only means the horizon was too short, so it is
/// reported as inconclusive.
pub fn precheck_lambda<M, F>(
    lambda: &ContractionOperator<M>,
    monoid: &M,
    alpha: &M::Elem,
    fam: &F,
    horizon: Horizon,
    samples: usize,
    seed: u64,
) -> Result<Certificate, EngineError>
where
    M: OrderedMonoid,
    F: NullFamily<M>,
{
    check_monotone(lambda, monoid, samples, seed)?;
    match lambda.kind() {
        LambdaKind::Scalar { q } => {
            let verdict = if *q < 1.0 {
                Verdict::Certified
            } else {
                Verdict::Refuted
            };
            Ok(Certificate::new(
                verdict,
                "geometric",
                format!("q = {}", crate::sci(*q)),
            ))
        }
        LambdaKind::Matrix(mat) => matrix_certificate(mat, SPECTRAL_TOLERANCE),
        LambdaKind::Integral(_) | LambdaKind::Custom { .. } => {
            let mut t = alpha.clone();
            let terms = std::iter::from_fn(|| {
                let out = t.clone();
                t = lambda.apply(&t);
                Some(out)
            })
            .take(horizon.terms as usize);
            let (verdict, detail) = match cauchy_series_test(monoid, fam, terms, horizon)
                .map_err(|e| EngineError::InvalidOperator(e.to_string()))?
            {
                SeriesVerdict::Certified => {
                    (Verdict::Certified, format!("{} terms", horizon.terms))
                }
                SeriesVerdict::Refuted { level, n, m } => (
                    Verdict::Inconclusive,
                    format!(
                        "block [{n}, {m}] not below eps({level}) within {} terms",
                        horizon.terms
                    ),
                ),
            };
            Ok(Certificate::new(verdict, "cauchy-series", detail))
        }
    }
}
