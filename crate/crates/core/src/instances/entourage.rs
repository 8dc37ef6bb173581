use std::cmp::Ordering;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Deserialize;

use super::InstanceError;
use crate::monoid::{NullFamily, OrderedMonoid, SampleSequence, SequenceSampler};
use crate::report::{AxiomReport, Check};
use crate::space::{DistanceSpace, SpaceClass};

/// Largest supported ground set; rows are stored as `u64` bitmasks.
pub const MAX_GROUND_SET: usize = 64;

fn check_size(n: usize) -> Result<(), InstanceError> {
    if n == 0 {
        Err(InstanceError::EmptyGroundSet)
    } else if n > MAX_GROUND_SET {
        Err(InstanceError::GroundSetTooLarge { size: n })
    } else {
        Ok(())
    }
}

/// A binary relation on `{0, …, n−1}` as a boolean matrix, one bitmask per
/// row.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    n: usize,
    rows: Vec<u64>,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        assert!(
            n <= MAX_GROUND_SET,
            "ground set larger than {MAX_GROUND_SET}"
        );
        Self {
            n,
            rows: vec![0; n],
        }
    }

    pub fn diagonal(n: usize) -> Self {
        let mut r = Self::empty(n);
        for i in 0..n {
            r.rows[i] = 1 << i;
        }
        r
    }

    pub fn full(n: usize) -> Self {
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        Self {
            n,
            rows: vec![mask; n],
        }
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut r = Self::empty(n);
        for (i, j) in pairs {
            r.insert(i, j);
        }
        r
    }

    /// `Δ ∪ ⋃_B B×B` for a family of disjoint blocks; unlisted points stay
    /// singletons.
    pub fn from_partition(n: usize, blocks: &[Vec<usize>]) -> Result<Self, InstanceError> {
        let mut seen = vec![false; n];
        let mut r = Self::diagonal(n);
        for block in blocks {
            for &i in block {
                if i >= n {
                    return Err(InstanceError::InvalidPartition(format!(
                        "point {i} outside ground set of size {n}"
                    )));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(InstanceError::InvalidPartition(format!(
                        "point {i} appears in two blocks"
                    )));
                }
            }
            for &i in block {
                for &j in block {
                    r.insert(i, j);
                }
            }
        }
        Ok(r)
    }

    /// Rows of 0/1 entries.
    pub fn from_matrix(rows: &[Vec<u8>]) -> Result<Self, InstanceError> {
        let n = rows.len();
        check_size(n)?;
        let mut r = Self::empty(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(InstanceError::NotSquare {
                    row: i,
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => r.insert(i, j),
                    _ => {
                        return Err(InstanceError::NotBoolean {
                            row: i,
                            col: j,
                            value: v,
                        })
                    }
                }
            }
        }
        Ok(r)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.rows[i] >> j & 1 == 1
    }

    pub fn insert(&mut self, i: usize, j: usize) {
        assert!(
            i < self.n && j < self.n,
            "pair ({i}, {j}) outside ground set"
        );
        self.rows[i] |= 1 << j;
    }

    /// Number of pairs.
    pub fn count(&self) -> u32 {
        self.rows.iter().map(|r| r.count_ones()).sum()
    }

    /// `self ∘ other = {(x, z) : (x, y) ∈ self, (y, z) ∈ other}`.
    pub fn compose(&self, other: &Relation) -> Relation {
        assert_eq!(self.n, other.n, "relations on different ground sets");
        let rows = self
            .rows
            .iter()
            .map(|&row| {
                let mut out = 0;
                let mut bits = row;
                while bits != 0 {
                    let y = bits.trailing_zeros() as usize;
                    out |= other.rows[y];
                    bits &= bits - 1;
                }
                out
            })
            .collect();
        Relation { n: self.n, rows }
    }

    pub fn union(&self, other: &Relation) -> Relation {
        self.zip(other, |a, b| a | b)
    }

    pub fn intersect(&self, other: &Relation) -> Relation {
        self.zip(other, |a, b| a & b)
    }

    fn zip(&self, other: &Relation, op: impl Fn(u64, u64) -> u64) -> Relation {
        assert_eq!(self.n, other.n, "relations on different ground sets");
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(&a, &b)| op(a, b))
            .collect();
        Relation { n: self.n, rows }
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        self.n == other.n
            && self
                .rows
                .iter()
                .zip(&other.rows)
                .all(|(&a, &b)| a & !b == 0)
    }

    pub fn transpose(&self) -> Relation {
        let mut t = Self::empty(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                if self.contains(i, j) {
                    t.insert(j, i);
                }
            }
        }
        t
    }

    pub fn is_symmetric(&self) -> bool {
        *self == self.transpose()
    }

    pub fn contains_diagonal(&self) -> bool {
        (0..self.n).all(|i| self.contains(i, i))
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            if i > 0 {
                f.write_str("|")?;
            }
            for j in 0..self.n {
                f.write_str(if self.contains(i, j) { "1" } else { "0" })?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Relation({self})")
    }
}

/// Reflexive relations on a finite set under composition, ordered by
/// inclusion. `θ = Δ` and every element is positive.
///
/// With generators attached, the samplers stay inside the sub-monoid they
/// generate. This keeps sampled constants comparable with a base's
/// ε-family; arbitrary relations need not be.
#[derive(Debug, Clone)]
pub struct EntourageMonoid {
    n: usize,
    generators: Option<Arc<[Relation]>>,
}

impl EntourageMonoid {
    pub fn new(n: usize) -> Result<Self, InstanceError> {
        check_size(n)?;
        Ok(Self {
            n,
            generators: None,
        })
    }

    pub fn with_generators(n: usize, generators: Vec<Relation>) -> Result<Self, InstanceError> {
        check_size(n)?;
        Ok(Self {
            n,
            generators: Some(generators.into()),
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn random_relation<R: Rng + ?Sized>(&self, rng: &mut R) -> Relation {
        match &self.generators {
            Some(gens) if !gens.is_empty() => {
                let k = rng.gen_range(0..=3);
                (0..k).fold(self.zero(), |acc, _| {
                    acc.compose(gens.choose(rng).expect("non-empty"))
                })
            }
            _ => {
                let density: f64 = rng.gen();
                let mut r = Relation::diagonal(self.n);
                for i in 0..self.n {
                    for j in 0..self.n {
                        if rng.gen_bool(density) {
                            r.insert(i, j);
                        }
                    }
                }
                r
            }
        }
    }
}

impl OrderedMonoid for EntourageMonoid {
    type Elem = Relation;

    fn zero(&self) -> Relation {
        Relation::diagonal(self.n)
    }

    fn add(&self, a: &Relation, b: &Relation) -> Relation {
        a.compose(b)
    }

    fn compare(&self, a: &Relation, b: &Relation) -> Option<Ordering> {
        match (a.is_subset(b), b.is_subset(a)) {
            (true, true) => Some(Ordering::Equal),
            (true, false) => Some(Ordering::Less),
            (false, true) => Some(Ordering::Greater),
            (false, false) => None,
        }
    }

    fn sup(&self, a: &Relation, b: &Relation) -> Option<Relation> {
        Some(a.union(b))
    }

    fn inf(&self, a: &Relation, b: &Relation) -> Option<Relation> {
        Some(a.intersect(b))
    }

    fn has_sup(&self) -> bool {
        true
    }

    fn render(&self, a: &Relation) -> String {
        a.to_string()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Relation {
        self.random_relation(rng)
    }

    fn sample_below<R: Rng + ?Sized>(&self, x: &Relation, rng: &mut R) -> Relation {
        match &self.generators {
            Some(gens) => {
                let mut below: Vec<Relation> =
                    gens.iter().filter(|g| g.is_subset(x)).cloned().collect();
                below.push(self.zero());
                below.choose(rng).expect("non-empty").clone()
            }
            None => {
                let mut r = self.zero();
                for i in 0..self.n {
                    for j in 0..self.n {
                        if x.contains(i, j) && rng.gen_bool(0.5) {
                            r.insert(i, j);
                        }
                    }
                }
                r
            }
        }
    }
}

impl SequenceSampler for EntourageMonoid {
    fn sample_sequence<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        null: bool,
    ) -> SampleSequence<Relation> {
        let head: Vec<Relation> = (0..rng.gen_range(1..20))
            .map(|_| self.random_relation(rng))
            .collect();
        let cut = head.len() as u64;
        let delta = self.zero();
        // on a one-point set every relation is Δ
        let stuck = (0..50)
            .map(|_| self.random_relation(rng))
            .find(|r| *r != delta);
        match (null, stuck) {
            (false, Some(x)) if rng.gen_bool(0.5) => {
                SampleSequence::new(format!("constant {x}"), false, move |_| x.clone())
            }
            (false, Some(x)) => {
                SampleSequence::new(format!("alternating {x} and Δ"), false, move |n| {
                    if n % 2 == 1 {
                        x.clone()
                    } else {
                        delta.clone()
                    }
                })
            }
            _ => SampleSequence::new(format!("Δ after {cut} terms"), true, move |n| {
                if n <= cut {
                    head[(n - 1) as usize].clone()
                } else {
                    delta.clone()
                }
            }),
        }
    }
}

/// A finite base of entourages on `{0, …, n−1}`. Every relation contains
/// `Δ`; symmetry and separation are checked where they are needed.
#[derive(Debug, Clone, PartialEq)]
pub struct EntourageBase {
    n: usize,
    relations: Vec<Relation>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BaseFile {
    size: usize,
    #[serde(default)]
    relations: Vec<Vec<Vec<u8>>>,
    #[serde(default)]
    partitions: Vec<Vec<Vec<usize>>>,
}

impl EntourageBase {
    pub fn new(n: usize, relations: Vec<Relation>) -> Result<Self, InstanceError> {
        check_size(n)?;
        if relations.is_empty() {
            return Err(InstanceError::EmptyBase);
        }
        for (index, r) in relations.iter().enumerate() {
            if r.size() != n {
                return Err(InstanceError::NotSquare {
                    row: index,
                    expected: n,
                    found: r.size(),
                });
            }
            if !r.contains_diagonal() {
                return Err(InstanceError::MissingDiagonal { index });
            }
        }
        Ok(Self { n, relations })
    }

    /// Base of partition entourages, one per partition.
    pub fn partition_chain(
        n: usize,
        partitions: &[Vec<Vec<usize>>],
    ) -> Result<Self, InstanceError> {
        check_size(n)?;
        let rels = partitions
            .iter()
            .map(|p| Relation::from_partition(n, p))
            .collect::<Result<_, _>>()?;
        Self::new(n, rels)
    }

    /// Parses `size = n` plus `relations` (0/1 matrices) and/or `partitions`
    /// (lists of blocks).
    pub fn from_toml_str(text: &str) -> Result<Self, InstanceError> {
        let file: BaseFile =
            toml::from_str(text).map_err(|e| InstanceError::Parse(e.to_string()))?;
        check_size(file.size)?;
        let mut rels = Vec::new();
        for m in &file.relations {
            let r = Relation::from_matrix(m)?;
            if r.size() != file.size {
                return Err(InstanceError::NotSquare {
                    row: rels.len(),
                    expected: file.size,
                    found: r.size(),
                });
            }
            rels.push(r);
        }
        for p in &file.partitions {
            rels.push(Relation::from_partition(file.size, p)?);
        }
        Self::new(file.size, rels)
    }

    pub fn load(path: &Path) -> Result<Self, InstanceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| InstanceError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn is_symmetric(&self) -> bool {
        self.relations.iter().all(Relation::is_symmetric)
    }

    /// `⋂E = Δ`.
    pub fn is_separating(&self) -> bool {
        let meet = self
            .relations
            .iter()
            .fold(Relation::full(self.n), |acc, r| acc.intersect(r));
        meet == Relation::diagonal(self.n)
    }

    /// `⋂{ε ∈ E : (x, y) ∈ ε}`, or `X×X` when no base element contains
    /// the pair.
    fn raw_distance(&self, x: usize, y: usize) -> Relation {
        self.relations
            .iter()
            .filter(|r| r.contains(x, y))
            .fold(Relation::full(self.n), |acc, r| acc.intersect(r))
    }
}

pub fn entourage_distance(
    base: &EntourageBase,
    x: usize,
    y: usize,
) -> Result<Relation, InstanceError> {
    for p in [x, y] {
        if p >= base.n {
            return Err(InstanceError::PointOutOfRange {
                point: p,
                size: base.n,
            });
        }
    }
    if !base.is_separating() {
        return Err(InstanceError::NotSeparating);
    }
    Ok(base.raw_distance(x, y))
}

/// Exhaustive check of the metric axioms on every pair and triple of the
/// ground set.
pub fn verify_entourage_metric(base: &EntourageBase) -> AxiomReport {
    let n = base.n;
    let delta = Relation::diagonal(n);
    let d: Vec<Relation> = (0..n * n)
        .map(|k| base.raw_distance(k / n, k % n))
        .collect();

    let mut base_sym = Check::new("base-symmetric");
    for (i, r) in base.relations.iter().enumerate() {
        base_sym.observe(r.is_symmetric(), || {
            format!("base relation {i} = {r} is not symmetric")
        });
    }
    let mut separation = Check::new("separation");
    separation.observe(base.is_separating(), || {
        "intersection of the base is larger than Δ".to_string()
    });

    let mut symmetry = Check::new("symmetry");
    let mut identity = Check::new("identity");
    for x in 0..n {
        for y in 0..n {
            let dxy = &d[x * n + y];
            symmetry.observe(*dxy == d[y * n + x], || {
                format!("d({x},{y}) = {dxy} but d({y},{x}) = {}", d[y * n + x])
            });
            identity.observe((*dxy == delta) == (x == y), || {
                format!("d({x},{y}) = {dxy}")
            });
        }
    }

    let mut triangle = Check::new("triangle");
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let via = d[x * n + y].compose(&d[y * n + z]);
                let direct = &d[x * n + z];
                triangle.observe(direct.is_subset(&via), || {
                    format!("d({x},{z}) = {direct} not within d({x},{y}) ∘ d({y},{z}) = {via}")
                });
            }
        }
    }

    let mut report = AxiomReport::new("entourage-metric");
    for c in [base_sym, separation, symmetry, identity, triangle] {
        report.record(c);
    }
    report
}

/// ε-family of a base: its elements other than `Δ`, largest first.
#[derive(Debug, Clone)]
pub struct EntourageFamily {
    eps: Vec<Relation>,
}

impl EntourageFamily {
    /// Falls back to `{X×X}` when the base has no element besides `Δ`.
    pub fn from_base(base: &EntourageBase) -> Self {
        let delta = Relation::diagonal(base.n);
        let mut eps: Vec<Relation> = Vec::new();
        for r in &base.relations {
            if *r != delta && !eps.contains(r) {
                eps.push(r.clone());
            }
        }
        eps.sort_by_key(|r| std::cmp::Reverse(r.count()));
        if eps.is_empty() {
            eps.push(Relation::full(base.n));
        }
        Self { eps }
    }

    pub fn elements(&self) -> &[Relation] {
        &self.eps
    }
}

impl NullFamily<EntourageMonoid> for EntourageFamily {
    fn eps(&self, k: usize) -> Relation {
        self.eps[(k.max(1) - 1).min(self.eps.len() - 1)].clone()
    }

    fn halving(&self, _monoid: &EntourageMonoid, eps: &Relation) -> Option<Relation> {
        self.eps
            .iter()
            .find(|d| d.compose(d).is_subset(eps))
            .cloned()
    }

    fn levels(&self) -> Option<usize> {
        Some(self.eps.len())
    }
}

/// A finite ground set metrized by a separating base. Points are indices.
#[derive(Debug, Clone)]
pub struct EntourageSpace {
    base: EntourageBase,
    monoid: EntourageMonoid,
    family: EntourageFamily,
    table: Vec<Relation>,
}

impl EntourageSpace {
    pub fn new(base: EntourageBase) -> Result<Self, InstanceError> {
        if !base.is_separating() {
            return Err(InstanceError::NotSeparating);
        }
        let n = base.n;
        let monoid = EntourageMonoid::with_generators(n, base.relations.clone())?;
        let family = EntourageFamily::from_base(&base);
        let table = (0..n * n)
            .map(|k| base.raw_distance(k / n, k % n))
            .collect();
        Ok(Self {
            base,
            monoid,
            family,
            table,
        })
    }

    pub fn base(&self) -> &EntourageBase {
        &self.base
    }
}

impl DistanceSpace for EntourageSpace {
    type Point = usize;
    type Monoid = EntourageMonoid;
    type Family = EntourageFamily;

    fn monoid(&self) -> &EntourageMonoid {
        &self.monoid
    }

    fn family(&self) -> &EntourageFamily {
        &self.family
    }

    fn dist(&self, x: &usize, y: &usize) -> Relation {
        self.table[x * self.base.n + y].clone()
    }

    fn class(&self) -> SpaceClass {
        SpaceClass::Metric
    }

    fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.gen_range(0..self.base.n)
    }

    fn render_point(&self, p: &usize) -> String {
        p.to_string()
    }
}
