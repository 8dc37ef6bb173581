use serde::Serialize;

use super::{difference, Horizon, MonoidError, NullFamily, OrderedMonoid};

/// Largest index probed when searching for the start of a null tail.
pub const MAX_PROBE_INDEX: u64 = 1 << 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum NullVerdict {
    Accepted,
    /// First generator level that no probed tail satisfied, and the index of
    /// the offending term in the last probed window.
    Rejected {
        level: usize,
        index: u64,
    },
}

impl NullVerdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, NullVerdict::Accepted)
    }
}

/// Null-sequence check against an ε-family.
///
/// `seq` is indexed from 1. For each level `k` the tail start `N` is searched
/// over `1, 2, 4, …` up to [`MAX_PROBE_INDEX`]; a probe succeeds when every
/// term in the window `[N, N + horizon.terms)` is strictly below `eps(k)`.
/// Later levels resume the search where the previous level succeeded.
pub fn is_null<M, F, S>(
    monoid: &M,
    fam: &F,
    seq: S,
    horizon: Horizon,
) -> Result<NullVerdict, MonoidError>
where
    M: OrderedMonoid + ?Sized,
    F: NullFamily<M> + ?Sized,
    S: Fn(u64) -> M::Elem,
{
    let window = horizon.terms.max(1);
    let mut start = 1u64;
    for level in 1..=horizon.effective_levels(fam) {
        let eps = fam.eps(level);
        let mut probe = start;
        loop {
            let mut failed = None;
            for n in probe..probe + window {
                let term = seq(n);
                if !monoid.is_positive(&term) {
                    return Err(MonoidError::NegativeTerm {
                        index: n,
                        value: monoid.render(&term),
                    });
                }
                if !monoid.strictly_below(&term, &eps) {
                    failed = Some(n);
                    break;
                }
            }
            match failed {
                None => {
                    start = probe;
                    break;
                }
                Some(index) if probe >= MAX_PROBE_INDEX => {
                    return Ok(NullVerdict::Rejected { level, index });
                }
                Some(_) => probe *= 2,
            }
        }
    }
    Ok(NullVerdict::Accepted)
}

/// Null check on a finite prefix `x₁ … x_L`: for each level some `N ≤ L/2`
/// must have the whole tail `[N, L]` strictly below `eps(k)`.
pub fn is_null_prefix<M, F>(
    monoid: &M,
    fam: &F,
    terms: &[M::Elem],
    horizon: Horizon,
) -> Result<NullVerdict, MonoidError>
where
    M: OrderedMonoid + ?Sized,
    F: NullFamily<M> + ?Sized,
{
    check_positive(monoid, terms)?;
    if terms.is_empty() {
        return Ok(NullVerdict::Accepted);
    }
    let len = terms.len();
    let last_probe = (len / 2).max(1);
    let mut probe = 1usize;
    for level in 1..=horizon.effective_levels(fam) {
        let eps = fam.eps(level);
        loop {
            let bad = (probe..=len).find(|&n| !monoid.strictly_below(&terms[n - 1], &eps));
            match bad {
                None => break,
                Some(n) if probe * 2 > last_probe => {
                    return Ok(NullVerdict::Rejected {
                        level,
                        index: n as u64,
                    })
                }
                Some(_) => probe *= 2,
            }
        }
    }
    Ok(NullVerdict::Accepted)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum SeriesVerdict {
    /// Certified at the given horizon.
    Certified,
    /// The block sum `Σ_{s=n}^{m} x_s` is not below `eps(level)` for the
    /// last admissible tail start.
    Refuted { level: usize, n: u64, m: u64 },
}

impl SeriesVerdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, SeriesVerdict::Certified)
    }
}

/// Cauchy-series test over the first `horizon.terms` terms.
///
/// For each level a tail start `N ∈ {1, 2, 4, …}` with `2N ≤ L` is searched
/// such that every block sum inside `[N, L]` is strictly below `eps(k)`.
/// Terms are positive, so a block `[n, m]` is dominated by `[n, L]` and only
/// the suffix sums need checking.
pub fn cauchy_series_test<M, F, I>(
    monoid: &M,
    fam: &F,
    terms: I,
    horizon: Horizon,
) -> Result<SeriesVerdict, MonoidError>
where
    M: OrderedMonoid + ?Sized,
    F: NullFamily<M> + ?Sized,
    I: IntoIterator<Item = M::Elem>,
{
    let xs: Vec<M::Elem> = terms
        .into_iter()
        .take(horizon.terms.max(1) as usize)
        .collect();
    check_positive(monoid, &xs)?;
    if xs.is_empty() {
        return Ok(SeriesVerdict::Certified);
    }
    let len = xs.len();

    // suffix[i] = x_{i+1} + … + x_L (0-based storage)
    let mut suffix = vec![monoid.zero(); len + 1];
    for i in (0..len).rev() {
        suffix[i] = monoid.add(&xs[i], &suffix[i + 1]);
    }

    let last_probe = (len / 2).max(1);
    let mut probe = 1usize;
    for level in 1..=horizon.effective_levels(fam) {
        let eps = fam.eps(level);
        loop {
            let bad = (probe..=len).find(|&n| !monoid.strictly_below(&suffix[n - 1], &eps));
            let Some(n) = bad else { break };
            if probe * 2 > last_probe {
                // smallest m whose block [n, m] is already too large
                let mut acc = monoid.zero();
                let mut m = len;
                for (j, x) in xs.iter().enumerate().skip(n - 1) {
                    acc = monoid.add(&acc, x);
                    if !monoid.strictly_below(&acc, &eps) {
                        m = j + 1;
                        break;
                    }
                }
                return Ok(SeriesVerdict::Refuted {
                    level,
                    n: n as u64,
                    m: m as u64,
                });
            }
            probe *= 2;
        }
    }
    Ok(SeriesVerdict::Certified)
}

fn check_positive<M: OrderedMonoid + ?Sized>(
    monoid: &M,
    xs: &[M::Elem],
) -> Result<(), MonoidError> {
    match xs.iter().position(|x| !monoid.is_positive(x)) {
        Some(i) => Err(MonoidError::NegativeTerm {
            index: i as u64 + 1,
            value: monoid.render(&xs[i]),
        }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum SeriesStatus {
    CauchyCertified,
    CauchyRefutedAtHorizon {
        level: usize,
        n: u64,
        m: u64,
    },
    /// `s = sₙ + rₙ` holds for every checked `n` and `{rₙ}` is null.
    ConvergentWithSum {
        sum: String,
    },
}

/// A finite prefix of a series together with its partial sums.
#[derive(Debug, Clone)]
pub struct SeriesState<E> {
    pub terms: Vec<E>,
    pub partial_sums: Vec<E>,
    pub status: SeriesStatus,
}

impl<E: Clone> SeriesState<E> {
    /// Computes partial sums and classifies the prefix. When `sum` is given
    /// and the monoid is cancellative, remainders `rₙ = s ⊖ sₙ` are formed and
    /// checked for nullity; otherwise the Cauchy criterion is used.
    pub fn analyze<M, F>(
        monoid: &M,
        fam: &F,
        terms: Vec<E>,
        sum: Option<&E>,
        horizon: Horizon,
    ) -> Result<Self, MonoidError>
    where
        M: OrderedMonoid<Elem = E> + ?Sized,
        F: NullFamily<M> + ?Sized,
    {
        let mut partial_sums = Vec::with_capacity(terms.len());
        let mut acc = monoid.zero();
        for t in &terms {
            acc = monoid.add(&acc, t);
            partial_sums.push(acc.clone());
        }

        if let Some(s) = sum {
            if monoid.is_cancellative() {
                let remainders: Option<Vec<E>> = partial_sums
                    .iter()
                    .map(|sn| difference(monoid, s, sn).ok().flatten())
                    .collect();
                if let Some(rs) = remainders {
                    if is_null_prefix(monoid, fam, &rs, horizon)?.is_accepted() {
                        return Ok(Self {
                            terms,
                            partial_sums,
                            status: SeriesStatus::ConvergentWithSum {
                                sum: monoid.render(s),
                            },
                        });
                    }
                }
            }
        }

        let status = match cauchy_series_test(monoid, fam, terms.iter().cloned(), horizon)? {
            SeriesVerdict::Certified => SeriesStatus::CauchyCertified,
            SeriesVerdict::Refuted { level, n, m } => {
                SeriesStatus::CauchyRefutedAtHorizon { level, n, m }
            }
        };
        Ok(Self {
            terms,
            partial_sums,
            status,
        })
    }
}
