//! Closed-form optimal sets of n-means for the R-measure.
//!
//! With `ℓ = ℓ(n)` the unique integer satisfying `3^ℓ ≤ n < 3^{ℓ+1}` there are three regimes:
//!
//! * `n = 3^ℓ`: the centroids `a(ω)` of all level-ℓ cells (unique).
//! * `3^ℓ < n ≤ 2·3^ℓ`: a two-means set inside each cell of `J`, centroids elsewhere,
//!   with `|J| = n - 3^ℓ`.
//! * `2·3^ℓ < n < 3^{ℓ+1}`: the three-means set inside each cell of `J` and a two-means
//!   set in every other cell, with `|J| = n - 2·3^ℓ`.
//!
//! In all cases `V_n = (13·3^ℓ - 4n) / (2·27^{ℓ+1})`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_traits::One;

use crate::algebra::{PointQ, Rat};
use crate::error::{Error, Result};
use crate::measure::{SelfSimilarMeasure, Word};

/// Which median the two-means Voronoi boundary is perpendicular to.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Alpha2Variant {
    /// `{a(1,2), a(3)}`
    TopMedian,
    /// `{a(2,3), a(1)}`
    LeftMedian,
    /// `{a(1,3), a(2)}`
    RightMedian,
}

impl Alpha2Variant {
    pub const ALL: [Alpha2Variant; 3] = [
        Alpha2Variant::TopMedian,
        Alpha2Variant::LeftMedian,
        Alpha2Variant::RightMedian,
    ];

    /// The pair of symbols merged into one Voronoi region, and the lone symbol.
    pub fn groups(self) -> ([u8; 2], u8) {
        match self {
            Alpha2Variant::TopMedian => ([1, 2], 3),
            Alpha2Variant::LeftMedian => ([2, 3], 1),
            Alpha2Variant::RightMedian => ([1, 3], 2),
        }
    }

    /// The two points of this optimal two-means set.
    pub fn points(self) -> [PointQ; 2] {
        let m = SelfSimilarMeasure::standard();
        let ([i, j], k) = self.groups();
        let root = Word::empty();
        let merged = m
            .conditional_centroid(&[root.child(i), root.child(j)])
            .expect("sibling cells are disjoint");
        [merged, m.centroid(&root.child(k))]
    }

    pub fn label(self) -> &'static str {
        match self {
            Alpha2Variant::TopMedian => "topMedian",
            Alpha2Variant::LeftMedian => "leftMedian",
            Alpha2Variant::RightMedian => "rightMedian",
        }
    }
}

impl fmt::Display for Alpha2Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Alpha2Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Alpha2Variant::ALL
            .into_iter()
            .find(|v| v.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parse(format!("unknown two-means variant {s:?}")))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Regime {
    /// `n = 3^ℓ`
    A,
    /// `3^ℓ < n ≤ 2·3^ℓ`
    B,
    /// `2·3^ℓ < n < 3^{ℓ+1}`
    C,
}

/// `3^k`, panicking on overflow.
pub fn pow3(k: u32) -> u64 {
    3u64.checked_pow(k).expect("3^k overflows u64")
}

/// The unique `ℓ` with `3^ℓ ≤ n < 3^{ℓ+1}`.
pub fn ell(n: u64) -> u32 {
    assert!(n >= 1, "ell is defined for n >= 1");
    let mut l = 0;
    let mut p = 1u64;
    while let Some(next) = p.checked_mul(3) {
        if next > n {
            break;
        }
        p = next;
        l += 1;
    }
    l
}

pub fn regime(n: u64) -> Regime {
    let base = pow3(ell(n));
    if n == base {
        Regime::A
    } else if n <= 2 * base {
        Regime::B
    } else {
        Regime::C
    }
}

/// `V_n = (13·3^ℓ - 4n) / (2·27^{ℓ+1})`, exact. Also valid for `n = 1, 2`.
pub fn quantization_error(n: u64) -> Rat {
    let l = ell(n);
    let three_l = BigInt::from(3u32).pow(l);
    let num = BigInt::from(13u32) * three_l - BigInt::from(4u32) * BigInt::from(n);
    let den = BigInt::from(2u32) * BigInt::from(27u32).pow(l + 1);
    Rat::new(num, den)
}

fn binomial(n: &BigUint, k: u64) -> BigUint {
    let k = BigUint::from(k);
    let k = if &k + &k > *n { n - &k } else { k };
    let mut acc = BigUint::one();
    let mut i = BigUint::one();
    while i <= k {
        acc = acc * (n - &k + &i) / &i;
        i += 1u32;
    }
    acc
}

/// Number of distinct optimal sets of n-means in the closed-form family.
///
/// `1` for `n = 3^ℓ`, `C(3^ℓ, n - 3^ℓ)·3^{n-3^ℓ}` in regime B and
/// `C(3^ℓ, n - 2·3^ℓ)·3^{3^{ℓ+1}-n}` in regime C. For `n = 2` this gives the three
/// two-means sets, one per median.
pub fn count_optimal_sets(n: u64) -> BigUint {
    let l = ell(n);
    let base = pow3(l);
    let three = BigUint::from(3u32);
    match regime(n) {
        Regime::A => BigUint::one(),
        Regime::B => {
            let k = n - base;
            binomial(&BigUint::from(base), k) * three.pow(k as u32)
        }
        Regime::C => {
            let k = n - 2 * base;
            binomial(&BigUint::from(base), k) * three.pow((3 * base - n) as u32)
        }
    }
}

/// One member of the closed-form family of optimal n-point sets.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OptimalSetSpec {
    pub n: u64,
    pub ell: u32,
    /// Regime B: cells holding a two-means set. Regime C: cells holding the three-means set.
    pub j: BTreeSet<Word>,
    /// Two-means orientation for each cell that carries one.
    pub variants: BTreeMap<Word, Alpha2Variant>,
}

impl OptimalSetSpec {
    pub fn regime(&self) -> Regime {
        regime(self.n)
    }

    /// Words of length `ℓ` that carry a two-means set under this spec.
    fn expected_variant_keys(&self) -> BTreeSet<Word> {
        match self.regime() {
            Regime::A => BTreeSet::new(),
            Regime::B => self.j.clone(),
            Regime::C => Word::all_of_length(self.ell as usize)
                .filter(|w| !self.j.contains(w))
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::MalformedSpec(m));
        if self.n == 0 {
            return Err(Error::ZeroPoints);
        }
        if self.ell != ell(self.n) {
            return bad(format!("ell = {} but ell({}) = {}", self.ell, self.n, ell(self.n)));
        }
        if let Some(w) = self.j.iter().find(|w| w.len() != self.ell as usize) {
            return bad(format!("word {w} in J does not have length {}", self.ell));
        }
        let base = pow3(self.ell);
        let want = match self.regime() {
            Regime::A => 0,
            Regime::B => self.n - base,
            Regime::C => self.n - 2 * base,
        };
        if self.j.len() as u64 != want {
            return bad(format!("|J| = {} but {} is required", self.j.len(), want));
        }
        let keys: BTreeSet<Word> = self.variants.keys().cloned().collect();
        if keys != self.expected_variant_keys() {
            return bad("variants are not keyed by the two-means cells".into());
        }
        Ok(())
    }
}

/// A finite set of distinct points, kept sorted.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PointSet {
    points: Vec<PointQ>,
}

impl PointSet {
    pub fn new(mut points: Vec<PointQ>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        points.sort();
        if let Some(w) = points.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicatePoint(w[0].to_string()));
        }
        Ok(PointSet { points })
    }

    pub fn points(&self) -> &[PointQ] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_f64(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(PointQ::to_f64).collect()
    }
}

/// Places `α₃` in the cells `three`, the given `α₂` variants in their cells, and the
/// cell centroid in the cells `single`.
fn assemble<'a>(
    three: impl IntoIterator<Item = &'a Word>,
    two: impl IntoIterator<Item = (&'a Word, &'a Alpha2Variant)>,
    single: impl IntoIterator<Item = &'a Word>,
) -> Result<PointSet> {
    let m = SelfSimilarMeasure::standard();
    let root = Word::empty();
    let alpha3: Vec<PointQ> = (1..=3).map(|i| m.centroid(&root.child(i))).collect();
    let mut points = Vec::new();
    for w in single {
        points.push(m.centroid(w));
    }
    for (w, v) in two {
        let cell = m.cell(w);
        points.extend(v.points().iter().map(|p| cell.map.apply(p)));
    }
    for w in three {
        let cell = m.cell(w);
        points.extend(alpha3.iter().map(|p| cell.map.apply(p)));
    }
    PointSet::new(points)
}

/// The point set described by `spec`.
pub fn optimal_set(spec: &OptimalSetSpec) -> Result<PointSet> {
    spec.validate()?;
    let level: Vec<Word> = Word::all_of_length(spec.ell as usize).collect();
    let set = match spec.regime() {
        Regime::A => assemble([], [], &level)?,
        Regime::B => assemble([], &spec.variants, level.iter().filter(|w| !spec.j.contains(*w)))?,
        Regime::C => assemble(&spec.j, &spec.variants, [])?,
    };
    debug_assert_eq!(set.len() as u64, spec.n);
    Ok(set)
}

/// The regime-C construction with an explicit (possibly empty) `J`, used to compare the
/// two constructions at `n = 2·3^ℓ`.
pub fn regime_c_set(l: u32, j: &BTreeSet<Word>, variants: &BTreeMap<Word, Alpha2Variant>) -> Result<PointSet> {
    let expected: BTreeSet<Word> = Word::all_of_length(l as usize).filter(|w| !j.contains(w)).collect();
    if variants.keys().cloned().collect::<BTreeSet<_>>() != expected {
        return Err(Error::MalformedSpec("variants must cover the complement of J".into()));
    }
    assemble(j, variants, [])
}

/// Lexicographically smallest `J`, every two-means set oriented `topMedian`.
pub fn canonical_spec(n: u64) -> OptimalSetSpec {
    enumerate_optimal_sets(n, 1)
        .next()
        .expect("every n >= 1 has at least one optimal set")
}

/// Streams the family of optimal specs for `n` in lexicographic order of
/// `(J, variants)`, stopping after `cap` items.
pub fn enumerate_optimal_sets(n: u64, cap: usize) -> impl Iterator<Item = OptimalSetSpec> {
    SpecIter::new(n).take(cap)
}

struct SpecIter {
    n: u64,
    ell: u32,
    regime: Regime,
    words: Vec<Word>,
    comb: Vec<usize>,
    digits: Vec<u8>,
    started: bool,
    done: bool,
}

impl SpecIter {
    fn new(n: u64) -> Self {
        assert!(n >= 1, "n must be at least 1");
        let l = ell(n);
        let base = pow3(l);
        let regime = regime(n);
        let k = match regime {
            Regime::A => 0,
            Regime::B => n - base,
            Regime::C => n - 2 * base,
        } as usize;
        let keyed = match regime {
            Regime::A => 0,
            Regime::B => k,
            Regime::C => base as usize - k,
        };
        SpecIter {
            n,
            ell: l,
            regime,
            words: Word::all_of_length(l as usize).collect(),
            comb: (0..k).collect(),
            digits: vec![0; keyed],
            started: false,
            done: false,
        }
    }

    fn current(&self) -> OptimalSetSpec {
        let j: BTreeSet<Word> = self.comb.iter().map(|&i| self.words[i].clone()).collect();
        let keys: Vec<&Word> = match self.regime {
            Regime::A => Vec::new(),
            Regime::B => self.comb.iter().map(|&i| &self.words[i]).collect(),
            Regime::C => self.words.iter().filter(|w| !j.contains(*w)).collect(),
        };
        let variants = keys
            .into_iter()
            .zip(&self.digits)
            .map(|(w, &d)| (w.clone(), Alpha2Variant::ALL[d as usize]))
            .collect();
        OptimalSetSpec {
            n: self.n,
            ell: self.ell,
            j,
            variants,
        }
    }

    fn advance_digits(&mut self) -> bool {
        for d in self.digits.iter_mut().rev() {
            if *d < 2 {
                *d += 1;
                return true;
            }
            *d = 0;
        }
        false
    }

    fn advance_comb(&mut self) -> bool {
        let k = self.comb.len();
        let total = self.words.len();
        for i in (0..k).rev() {
            if self.comb[i] < total - k + i {
                self.comb[i] += 1;
                for t in i + 1..k {
                    self.comb[t] = self.comb[t - 1] + 1;
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for SpecIter {
    type Item = OptimalSetSpec;

    fn next(&mut self) -> Option<OptimalSetSpec> {
        if self.done {
            return None;
        }
        if self.started && !self.advance_digits() && !self.advance_comb() {
            self.done = true;
            return None;
        }
        self.started = true;
        Some(self.current())
    }
}
