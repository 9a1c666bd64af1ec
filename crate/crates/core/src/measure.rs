//! The R-triangle iterated function system and its self-similar measure.
//!
//! The standard system uses the three ratio-1/3 similarities
//! `S_1(x) = x/3`, `S_2(x) = x/3 + (2/3, 0)` and `S_3(x) = x/3 + (2/3)(1/2, √3/2)`,
//! each with probability 1/3. [`GeneralIfs`] admits arbitrary ratios in `(0, 1/2)`
//! and arbitrary rational probabilities, with the third fixed point either at the
//! apex of the equilateral triangle (S-family) or at `(0, 1)` (T-family).

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[cfg(test)]
use crate::algebra::int;
use crate::algebra::{rat, PointQ, QuadNum, Rat};
use crate::error::{Error, Result};

/// A finite word over the alphabet `{1, 2, 3}` addressing the cell `S_ω(△)`.
///
/// Words order lexicographically with `1 < 2 < 3` and prefixes first.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn new(symbols: Vec<u8>) -> Result<Self> {
        if let Some(&bad) = symbols.iter().find(|&&s| !(1..=3).contains(&s)) {
            return Err(Error::InvalidSymbol(char::from(b'0' + bad.min(9))));
        }
        Ok(Word(symbols))
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The word `ωi`.
    pub fn child(&self, i: u8) -> Word {
        assert!((1..=3).contains(&i), "symbol out of range");
        let mut s = self.0.clone();
        s.push(i);
        Word(s)
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut s = self.0.clone();
        s.extend_from_slice(&other.0);
        Word(s)
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }

    /// All `3^k` words of length `k` in lexicographic order.
    pub fn all_of_length(k: usize) -> impl Iterator<Item = Word> {
        let total = 3usize.pow(k as u32);
        (0..total).map(move |mut idx| {
            let mut s = vec![1u8; k];
            for slot in s.iter_mut().rev() {
                *slot = 1 + (idx % 3) as u8;
                idx /= 3;
            }
            Word(s)
        })
    }

    /// Position of the word among [`Word::all_of_length`] of its own length.
    pub fn rank(&self) -> usize {
        self.0.iter().fold(0, |acc, &s| acc * 3 + (s - 1) as usize)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "∅");
        }
        for &s in &self.0 {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "∅" {
            return Ok(Word::empty());
        }
        s.chars()
            .map(|c| match c {
                '1'..='3' => Ok(c as u8 - b'0'),
                other => Err(Error::InvalidSymbol(other)),
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

/// The similarity `x ↦ ratio·x + translation`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Similarity {
    pub ratio: Rat,
    pub translation: PointQ,
}

impl Similarity {
    pub fn identity() -> Self {
        Similarity {
            ratio: Rat::one(),
            translation: PointQ::origin(),
        }
    }

    pub fn apply(&self, p: &PointQ) -> PointQ {
        p.scale(&self.ratio).add(&self.translation)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Similarity) -> Similarity {
        Similarity {
            ratio: &self.ratio * &inner.ratio,
            translation: self.apply(&inner.translation),
        }
    }
}

/// Which triangle the general maps contract towards.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Family {
    /// Equilateral: fixed points `(0,0)`, `(1,0)`, `(1/2, √3/2)`.
    S,
    /// Right-angled: fixed points `(0,0)`, `(1,0)`, `(0,1)`.
    T,
}

impl Family {
    pub fn vertices(self) -> [PointQ; 3] {
        let apex = match self {
            Family::S => PointQ::new(rat(1, 2).into(), QuadNum::sqrt3_times(rat(1, 2))),
            Family::T => PointQ::new(QuadNum::zero(), QuadNum::one()),
        };
        [PointQ::origin(), PointQ::new(QuadNum::one(), QuadNum::zero()), apex]
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "S" | "s" => Ok(Family::S),
            "T" | "t" => Ok(Family::T),
            other => Err(Error::InvalidIfs(format!("unknown family {other:?}"))),
        }
    }
}

/// Three contractions `S_i(x) = r_i x + (1 - r_i) v_i` with probabilities `p_i`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GeneralIfs {
    ratios: [Rat; 3],
    probs: [Rat; 3],
    family: Family,
}

impl GeneralIfs {
    pub fn new(ratios: [Rat; 3], probs: [Rat; 3], family: Family) -> Result<Self> {
        let half = rat(1, 2);
        for r in &ratios {
            if !r.is_positive() || *r >= half {
                return Err(Error::InvalidIfs(format!("ratio {r} not in (0, 1/2)")));
            }
        }
        for p in &probs {
            if !p.is_positive() {
                return Err(Error::InvalidIfs(format!("probability {p} not positive")));
            }
        }
        let total: Rat = probs.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidIfs(format!("probabilities sum to {total}")));
        }
        Ok(GeneralIfs { ratios, probs, family })
    }

    /// Degenerate probability vectors (zeros allowed) for moment computations only.
    fn new_unchecked(ratios: [Rat; 3], probs: [Rat; 3], family: Family) -> Self {
        GeneralIfs { ratios, probs, family }
    }

    /// The R-triangle system: ratios 1/3, probabilities 1/3, equilateral vertices.
    pub fn standard() -> Self {
        let third = rat(1, 3);
        GeneralIfs {
            ratios: [third.clone(), third.clone(), third.clone()],
            probs: [third.clone(), third.clone(), third],
            family: Family::S,
        }
    }

    pub fn ratios(&self) -> &[Rat; 3] {
        &self.ratios
    }

    pub fn probs(&self) -> &[Rat; 3] {
        &self.probs
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn is_standard(&self) -> bool {
        *self == GeneralIfs::standard()
    }

    pub fn maps(&self) -> [Similarity; 3] {
        let v = self.family.vertices();
        std::array::from_fn(|i| Similarity {
            ratio: self.ratios[i].clone(),
            translation: v[i].scale(&(Rat::one() - &self.ratios[i])),
        })
    }
}

/// First and second moments of the invariant measure.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Moments {
    pub mean: PointQ,
    /// `E‖X - E X‖²`.
    pub variance: QuadNum,
    pub var_x1: QuadNum,
    pub var_x2: QuadNum,
}

/// Solves `E = Σ p_i S_i(E)` and the matching linear relation for the variance.
pub fn moments(ifs: &GeneralIfs) -> Moments {
    let maps = ifs.maps();
    let p = &ifs.probs;
    // E (1 - Σ p_i r_i) = Σ p_i t_i
    let contraction: Rat = Rat::one() - p.iter().zip(&ifs.ratios).map(|(p, r)| p * r).sum::<Rat>();
    let weighted_shift = maps
        .iter()
        .zip(p)
        .fold(PointQ::origin(), |acc, (m, p)| acc.add(&m.translation.scale(p)));
    let mean = weighted_shift.scale(&(Rat::one() / contraction));
    // Var (1 - Σ p_i r_i²) = Σ p_i ‖S_i(E) - E‖², coordinatewise.
    let second: Rat = Rat::one() - p.iter().zip(&ifs.ratios).map(|(p, r)| p * r * r).sum::<Rat>();
    let inv = Rat::one() / second;
    let mut var_x1 = QuadNum::zero();
    let mut var_x2 = QuadNum::zero();
    for (m, p) in maps.iter().zip(p) {
        let d = m.apply(&mean).sub(&mean);
        var_x1 += (&d.x * &d.x).scale(p);
        var_x2 += (&d.y * &d.y).scale(p);
    }
    let var_x1 = var_x1.scale(&inv);
    let var_x2 = var_x2.scale(&inv);
    Moments {
        mean,
        variance: &var_x1 + &var_x2,
        var_x1,
        var_x2,
    }
}

/// Moments of the point mass `p = (1, 0, 0)` style degenerate systems; used by tests and
/// the CLI to sanity-check limiting cases.
pub fn moments_degenerate(ratios: [Rat; 3], probs: [Rat; 3], family: Family) -> Result<Moments> {
    let total: Rat = probs.iter().sum();
    if probs.iter().any(|p| p.is_negative()) || !total.is_one() {
        return Err(Error::InvalidIfs("probabilities must be a probability vector".into()));
    }
    Ok(moments(&GeneralIfs::new_unchecked(ratios, probs, family)))
}

/// A cell `△_ω = S_ω(△)` together with its affine map, measure and centroid.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Cell {
    pub word: Word,
    pub map: Similarity,
    pub measure: Rat,
    pub vertices: [PointQ; 3],
    pub centroid: PointQ,
}

/// The invariant measure of a [`GeneralIfs`] with its moments precomputed.
#[derive(Clone, Debug)]
pub struct SelfSimilarMeasure {
    ifs: GeneralIfs,
    maps: [Similarity; 3],
    base: [PointQ; 3],
    moments: Moments,
}

impl SelfSimilarMeasure {
    pub fn new(ifs: GeneralIfs) -> Self {
        let maps = ifs.maps();
        let base = ifs.family.vertices();
        let moments = moments(&ifs);
        SelfSimilarMeasure {
            ifs,
            maps,
            base,
            moments,
        }
    }

    /// The R-measure, shared.
    pub fn standard() -> &'static SelfSimilarMeasure {
        static STANDARD: OnceLock<SelfSimilarMeasure> = OnceLock::new();
        STANDARD.get_or_init(|| SelfSimilarMeasure::new(GeneralIfs::standard()))
    }

    pub fn ifs(&self) -> &GeneralIfs {
        &self.ifs
    }

    pub fn moments(&self) -> &Moments {
        &self.moments
    }

    pub fn mean(&self) -> &PointQ {
        &self.moments.mean
    }

    pub fn variance(&self) -> &QuadNum {
        &self.moments.variance
    }

    pub fn map(&self, i: u8) -> &Similarity {
        &self.maps[(i - 1) as usize]
    }

    pub fn root(&self) -> Cell {
        Cell {
            word: Word::empty(),
            map: Similarity::identity(),
            measure: Rat::one(),
            vertices: self.base.clone(),
            centroid: self.moments.mean.clone(),
        }
    }

    fn make_cell(&self, word: Word, map: Similarity, measure: Rat) -> Cell {
        let vertices = std::array::from_fn(|i| map.apply(&self.base[i]));
        let centroid = map.apply(&self.moments.mean);
        Cell {
            word,
            map,
            measure,
            vertices,
            centroid,
        }
    }

    pub fn child(&self, cell: &Cell, i: u8) -> Cell {
        let idx = (i - 1) as usize;
        self.make_cell(
            cell.word.child(i),
            cell.map.compose(&self.maps[idx]),
            &cell.measure * &self.ifs.probs[idx],
        )
    }

    pub fn children(&self, cell: &Cell) -> [Cell; 3] {
        [self.child(cell, 1), self.child(cell, 2), self.child(cell, 3)]
    }

    pub fn cell(&self, word: &Word) -> Cell {
        let mut map = Similarity::identity();
        let mut measure = Rat::one();
        for &s in word.symbols() {
            let idx = (s - 1) as usize;
            map = map.compose(&self.maps[idx]);
            measure *= &self.ifs.probs[idx];
        }
        self.make_cell(word.clone(), map, measure)
    }

    /// All cells at depth `k`, in lexicographic word order.
    pub fn cells_at_depth(&self, k: usize) -> Vec<Cell> {
        let mut level = vec![self.root()];
        for _ in 0..k {
            level = level.iter().flat_map(|c| self.children(c)).collect();
        }
        level
    }

    /// `S_ω(p)` with `S_ω = S_{ω_1} ∘ … ∘ S_{ω_k}`.
    pub fn apply_word(&self, word: &Word, p: &PointQ) -> PointQ {
        word.symbols()
            .iter()
            .rev()
            .fold(p.clone(), |acc, &s| self.map(s).apply(&acc))
    }

    /// `E(X | X ∈ △_ω) = S_ω(E X)`.
    pub fn centroid(&self, word: &Word) -> PointQ {
        self.apply_word(word, &self.moments.mean)
    }

    /// Measure-weighted centroid of a union of pairwise disjoint cells.
    pub fn conditional_centroid(&self, words: &[Word]) -> Result<PointQ> {
        if words.is_empty() {
            return Err(Error::EmptyWordSet);
        }
        for (i, u) in words.iter().enumerate() {
            for (j, v) in words.iter().enumerate() {
                if i != j && u.is_prefix_of(v) {
                    return Err(Error::OverlappingCells(u.to_string(), v.to_string()));
                }
            }
        }
        let mut total = Rat::zero();
        let mut acc = PointQ::origin();
        for w in words {
            let c = self.cell(w);
            acc = acc.add(&c.centroid.scale(&c.measure));
            total += &c.measure;
        }
        Ok(acc.scale(&(Rat::one() / total)))
    }

    /// `∫_{△_ω} ‖x - p‖² dP = P(△_ω) (s_ω² V + ‖a(ω) - p‖²)`.
    pub fn cell_distortion(&self, word: &Word, p: &PointQ) -> QuadNum {
        self.cell_distortion_in(&self.cell(word), p)
    }

    pub fn cell_distortion_in(&self, cell: &Cell, p: &PointQ) -> QuadNum {
        let spread = self.moments.variance.scale(&(&cell.map.ratio * &cell.map.ratio));
        (spread + cell.centroid.dist_sq(p)).scale(&cell.measure)
    }

    /// Float copy of the maps for sampling and Lloyd iterations.
    pub fn float_ifs(&self) -> FloatIfs {
        let probs: [f64; 3] = std::array::from_fn(|i| crate::algebra::rat_to_f64(&self.ifs.probs[i]));
        FloatIfs {
            ratios: std::array::from_fn(|i| crate::algebra::rat_to_f64(&self.maps[i].ratio)),
            translations: std::array::from_fn(|i| self.maps[i].translation.to_f64()),
            cumulative: [probs[0], probs[0] + probs[1], 1.0],
            uniform: self.ifs.probs.iter().all(|p| *p == rat(1, 3)),
            mean: self.moments.mean.to_f64(),
        }
    }
}

/// Samples per RNG stream in [`chaos_sample`].
pub const SAMPLE_CHUNK: usize = 4096;

/// Floating-point view of an IFS used by the stochastic oracles.
#[derive(Clone, Debug)]
pub struct FloatIfs {
    pub ratios: [f64; 3],
    pub translations: [[f64; 2]; 3],
    cumulative: [f64; 3],
    uniform: bool,
    pub mean: [f64; 2],
}

impl FloatIfs {
    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        if self.uniform {
            rng.gen_range(0..3)
        } else {
            let u: f64 = rng.gen();
            self.cumulative.iter().position(|&c| u < c).unwrap_or(2)
        }
    }

    pub fn apply(&self, i: usize, p: [f64; 2]) -> [f64; 2] {
        let r = self.ratios[i];
        let t = self.translations[i];
        [r * p[0] + t[0], r * p[1] + t[1]]
    }

    /// Samples `[start, start + len)` of the stream for `seed`; chunk `c` uses ChaCha8
    /// stream number `c`, so any sub-range is reproducible on its own.
    pub fn sample_chunk(&self, seed: u64, chunk: u64, len: usize, depth: usize) -> Vec<[f64; 2]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk);
        (0..len)
            .map(|_| {
                let mut x = self.mean;
                for _ in 0..depth {
                    x = self.apply(self.draw(&mut rng), x);
                }
                x
            })
            .collect()
    }
}

/// Draws `count` points `S_ω(E X)` with `ω` a random word of length `depth`.
///
/// Sample `j` comes from ChaCha8 stream `j / SAMPLE_CHUNK`, so the output depends only on
/// `(seed, count, depth)` and not on how the work is scheduled.
pub fn chaos_sample(measure: &SelfSimilarMeasure, count: usize, depth: usize, seed: u64) -> Result<Vec<[f64; 2]>> {
    if count == 0 || depth == 0 {
        return Err(Error::InvalidArgument("count and depth must be positive".into()));
    }
    let f = measure.float_ifs();
    let chunks = count.div_ceil(SAMPLE_CHUNK);
    let parts: Vec<Vec<[f64; 2]>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = SAMPLE_CHUNK.min(count - c * SAMPLE_CHUNK);
            f.sample_chunk(seed, c as u64, len, depth)
        })
        .collect();
    Ok(parts.concat())
}

// Standard-mode conveniences.

/// `S_i(p)` for the standard maps. Panics unless `i ∈ {1, 2, 3}`.
pub fn apply_map(i: u8, p: &PointQ) -> PointQ {
    assert!((1..=3).contains(&i), "symbol out of range");
    SelfSimilarMeasure::standard().map(i).apply(p)
}

pub fn apply_word(word: &Word, p: &PointQ) -> PointQ {
    SelfSimilarMeasure::standard().apply_word(word, p)
}

/// `a(ω)` for the R-measure.
pub fn centroid(word: &Word) -> PointQ {
    SelfSimilarMeasure::standard().centroid(word)
}

/// `a(ω_1, …, ω_m)` for the R-measure.
pub fn conditional_centroid(words: &[Word]) -> Result<PointQ> {
    SelfSimilarMeasure::standard().conditional_centroid(words)
}

pub fn cell_distortion(word: &Word, p: &PointQ) -> QuadNum {
    SelfSimilarMeasure::standard().cell_distortion(word, p)
}

/// Parses a whitespace- or comma-separated list of words, e.g. `"12, 21"`.
pub fn words(s: &str) -> Result<Vec<Word>> {
    s.split([',', ' '])
        .filter(|t| !t.is_empty())
        .map(Word::from_str)
        .collect()
}

#[cfg(test)]
fn third_power(k: usize) -> Rat {
    Rat::new(1.into(), num_bigint::BigInt::from(3u32).pow(k as u32))
}
