use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dist, DistanceSpace};
use crate::monoid::{NullFamily, OrderedMonoid};

/// A path whose consecutive distances sum below a small generator element
/// while its endpoints stay far apart.
#[derive(Debug, Clone)]
pub struct FwWitness<P, E> {
    pub path: Vec<P>,
    pub chain_sum: E,
    pub endpoint: E,
}

#[derive(Debug, Clone)]
pub enum FwProbe<P, E> {
    /// Budget exhausted. This is not evidence that the property holds.
    NoWitnessFound {
        paths_checked: usize,
    },
    Witness(FwWitness<P, E>),
}

impl<P, E> FwProbe<P, E> {
    pub fn witness(&self) -> Option<&FwWitness<P, E>> {
        match self {
            FwProbe::Witness(w) => Some(w),
            FwProbe::NoWitnessFound { .. } => None,
        }
    }
}

/// Searches `paths` for a violation of the strong Fréchet-Wilson property:
/// `chain_sum < eps(chain_level)` while `endpoint` is not below
/// `eps(endpoint_level)`. At most `budget` paths are examined; paths with
/// fewer than two points are skipped without counting.
pub fn strong_fw_probe<S, I>(
    space: &S,
    paths: I,
    budget: usize,
    chain_level: usize,
    endpoint_level: usize,
) -> FwProbe<S::Point, Dist<S>>
where
    S: DistanceSpace,
    I: IntoIterator<Item = Vec<S::Point>>,
{
    let m = space.monoid();
    let small = space.family().eps(chain_level);
    let far = space.family().eps(endpoint_level);
    let mut checked = 0;
    for path in paths {
        if checked >= budget {
            break;
        }
        if path.len() < 2 {
            continue;
        }
        checked += 1;
        let chain_sum = path
            .windows(2)
            .fold(m.zero(), |acc, w| m.add(&acc, &space.dist(&w[0], &w[1])));
        if !m.strictly_below(&chain_sum, &small) {
            continue;
        }
        let endpoint = space.dist(&path[0], &path[path.len() - 1]);
        if !m.strictly_below(&endpoint, &far) {
            return FwProbe::Witness(FwWitness {
                path,
                chain_sum,
                endpoint,
            });
        }
    }
    FwProbe::NoWitnessFound {
        paths_checked: checked,
    }
}

/// Uniform subdivisions `a, a + (b−a)/n, …, b` for each `n` in `counts`.
pub fn subdivision_paths(
    a: f64,
    b: f64,
    counts: impl IntoIterator<Item = usize>,
) -> impl Iterator<Item = Vec<f64>> {
    counts.into_iter().filter(|&n| n > 0).map(move |n| {
        (0..=n)
            .map(|i| {
                if i == n {
                    b
                } else {
                    a + (b - a) * i as f64 / n as f64
                }
            })
            .collect()
    })
}

/// Random monotone refinements of random intervals in `[-span, span]`, with
/// up to `max_steps` steps each. Deterministic in `seed`.
pub fn random_paths(span: f64, max_steps: usize, seed: u64) -> impl Iterator<Item = Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_steps = max_steps.max(1);
    std::iter::repeat_with(move || {
        let a = rng.gen_range(-span..span);
        let b = rng.gen_range(-span..span);
        let n = rng.gen_range(1..=max_steps);
        let mut cuts: Vec<f64> = (0..n - 1).map(|_| rng.gen::<f64>()).collect();
        cuts.sort_by(f64::total_cmp);
        std::iter::once(a)
            .chain(cuts.into_iter().map(|u| a + (b - a) * u))
            .chain(std::iter::once(b))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{RealDistance, RealLine};

    #[test]
    fn squared_distance_has_a_witness_at_one_hundred_steps() {
        let s = RealLine::new(RealDistance::Squared);
        // chain sum n·(1/n)² = 1/n, endpoint 1
        let probe = strong_fw_probe(&s, subdivision_paths(0.0, 1.0, [100]), 1, 6, 1);
        let w = probe.witness().expect("witness");
        assert_eq!(w.path.len(), 101);
        assert!((w.chain_sum - 0.01).abs() < 1e-12);
        assert_eq!(w.endpoint, 1.0);
    }

    #[test]
    fn squared_distance_below_threshold_needs_enough_steps() {
        let s = RealLine::new(RealDistance::Squared);
        // eps(6) = 1/64: chain sums 1/n need n > 64
        let probe = strong_fw_probe(&s, subdivision_paths(0.0, 1.0, 1..=64), 64, 6, 1);
        assert!(matches!(
            probe,
            FwProbe::NoWitnessFound { paths_checked: 64 }
        ));
        let probe = strong_fw_probe(&s, subdivision_paths(0.0, 1.0, 1..), 1000, 6, 1);
        assert_eq!(probe.witness().unwrap().path.len(), 66);
    }

    #[test]
    fn metric_and_mixed_distances_resist_the_probe() {
        for kind in [RealDistance::Absolute, RealDistance::Mixed] {
            let s = RealLine::new(kind);
            let p = strong_fw_probe(&s, subdivision_paths(0.0, 1.0, 1..=2000), 2000, 6, 1);
            assert!(p.witness().is_none());
            let p = strong_fw_probe(&s, random_paths(3.0, 500, 7), 2000, 6, 6);
            assert!(matches!(
                p,
                FwProbe::NoWitnessFound {
                    paths_checked: 2000
                }
            ));
        }
    }

    #[test]
    fn degenerate_paths_are_skipped() {
        let s = RealLine::new(RealDistance::Squared);
        let p = strong_fw_probe(&s, vec![vec![], vec![1.0]], 10, 1, 1);
        assert!(matches!(p, FwProbe::NoWitnessFound { paths_checked: 0 }));
    }
}
