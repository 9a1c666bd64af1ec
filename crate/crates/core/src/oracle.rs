//! Checks of quantization errors that do not go through the closed-form formula.
//!
//! * [`distortion_enclosure`] brackets `∫ min_a ‖x - a‖² dP` for an arbitrary point set
//!   by subdividing cells until each one is owned by a single point, where the integral
//!   is known in closed form. Everything is decided in ℚ(√3), so the bracket is certified.
//! * [`mc_distortion`] estimates the same integral from chaos-game samples.
//! * [`lloyd`] and [`kmeans_best_of`] search for good point sets on the atomic surrogate
//!   made of the level-`k` cell centroids.

use num_traits::{Signed, Zero};
use rand::seq::index::sample_weighted;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algebra::{rat_to_f64, PointQ, QuadNum, Rat};
use crate::error::{Error, Result};
use crate::measure::{Cell, SelfSimilarMeasure, Word, SAMPLE_CHUNK};
use crate::optimal::PointSet;

pub const MAX_ENCLOSURE_DEPTH: u32 = 30;
pub const MAX_SURROGATE_DEPTH: u32 = 12;
/// Default Lloyd surrogate depth (2187 atoms).
pub const DEFAULT_LLOYD_DEPTH: u32 = 7;

/// Certified bracket `[lo, hi]` around the distortion of a point set.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DistortionEnclosure {
    pub lo: QuadNum,
    pub hi: QuadNum,
    /// Every cell was resolved to a single owner, so `lo == hi` is the exact distortion.
    pub exact: bool,
    pub depth_used: u32,
    /// Cells still shared between several points when the search stopped.
    pub unresolved_cells: usize,
}

impl DistortionEnclosure {
    pub fn value(&self) -> Option<&QuadNum> {
        self.exact.then_some(&self.lo)
    }

    pub fn width(&self) -> QuadNum {
        &self.hi - &self.lo
    }

    pub fn contains(&self, v: &QuadNum) -> bool {
        self.lo <= *v && *v <= self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo.to_f64() + self.hi.to_f64())
    }
}

/// Outcome for one cell during subdivision.
enum CellOutcome {
    Owned(QuadNum),
    Shared {
        lo: QuadNum,
        hi: QuadNum,
        candidates: Vec<usize>,
    },
}

/// `g(v) = 2 v·(a - b) - (‖a‖² - ‖b‖²)` is `≤ 0` exactly when `v` is at least as close to
/// `b` as to `a`. Being linear, it is non-positive on the whole cell iff it is at every vertex.
fn dominates(b: usize, a: usize, points: &[PointQ], norms: &[QuadNum], vertices: &[PointQ; 3]) -> bool {
    let diff = points[a].sub(&points[b]);
    let offset = &norms[a] - &norms[b];
    vertices.iter().all(|v| {
        let g = v.dot(&diff).scale(&Rat::from_integer(2.into())) - &offset;
        g <= QuadNum::zero()
    })
}

fn cross(o: &PointQ, p: &PointQ, q: &PointQ) -> QuadNum {
    let u = p.sub(o);
    let v = q.sub(o);
    &u.x * &v.y - &u.y * &v.x
}

fn segment_dist_sq(p: &PointQ, u: &PointQ, v: &PointQ) -> QuadNum {
    let d = v.sub(u);
    let len = d.norm_sq();
    let t = &p.sub(u).dot(&d) / &len;
    if !t.is_negative() && t <= QuadNum::one() {
        p.dist_sq(&u.add(&d.scale_q(&t)))
    } else if t.is_negative() {
        p.dist_sq(u)
    } else {
        p.dist_sq(v)
    }
}

/// Exact squared distance from `p` to the closed triangle.
pub fn triangle_dist_sq(p: &PointQ, tri: &[PointQ; 3]) -> QuadNum {
    let signs: Vec<std::cmp::Ordering> = (0..3).map(|i| cross(&tri[i], &tri[(i + 1) % 3], p).signum()).collect();
    use std::cmp::Ordering::*;
    let inside = signs.iter().all(|&s| s != Less) || signs.iter().all(|&s| s != Greater);
    if inside {
        return QuadNum::zero();
    }
    (0..3)
        .map(|i| segment_dist_sq(p, &tri[i], &tri[(i + 1) % 3]))
        .min()
        .expect("three edges")
}

fn classify(
    measure: &SelfSimilarMeasure,
    cell: &Cell,
    candidates: &[usize],
    points: &[PointQ],
    norms: &[QuadNum],
) -> CellOutcome {
    let dists: Vec<QuadNum> = candidates.iter().map(|&i| cell.centroid.dist_sq(&points[i])).collect();
    let (best_pos, best) = dists
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.cmp(y.1))
        .expect("at least one candidate");
    let nearest = candidates[best_pos];
    // An exact tie at the centroid rules out single ownership, but the nearest point
    // can still eliminate others.
    let tied = dists.iter().filter(|d| *d == best).count() > 1;
    let mut remaining = vec![nearest];
    remaining.extend(
        candidates
            .iter()
            .copied()
            .filter(|&a| a != nearest && !dominates(nearest, a, points, norms, &cell.vertices)),
    );
    if remaining.len() == 1 && !tied {
        return CellOutcome::Owned(measure.cell_distortion_in(cell, &points[nearest]));
    }
    let lo = remaining
        .iter()
        .map(|&a| triangle_dist_sq(&points[a], &cell.vertices))
        .min()
        .expect("non-empty")
        .scale(&cell.measure);
    let hi = remaining
        .iter()
        .map(|&a| measure.cell_distortion_in(cell, &points[a]))
        .min()
        .expect("non-empty");
    remaining.sort_unstable();
    CellOutcome::Shared {
        lo,
        hi,
        candidates: remaining,
    }
}

/// Certified enclosure of the R-measure distortion of `points`.
pub fn distortion_enclosure(points: &PointSet, epsilon: &Rat, max_depth: u32) -> Result<DistortionEnclosure> {
    distortion_enclosure_in(SelfSimilarMeasure::standard(), points, epsilon, max_depth)
}

/// Certified enclosure for any exact self-similar measure.
///
/// Cells are refined breadth-first. A cell whose nearest point (at its centroid) is at
/// least as close as every other candidate on all three of its vertices contributes its
/// exact value; otherwise it contributes `[P(△)·min dist²(a, △), min ∫_△ ‖x - a‖² dP]`
/// and is split at the next level. Refinement stops once the total width of the shared
/// cells is at most `epsilon`, or at `max_depth`.
pub fn distortion_enclosure_in(
    measure: &SelfSimilarMeasure,
    points: &PointSet,
    epsilon: &Rat,
    max_depth: u32,
) -> Result<DistortionEnclosure> {
    if max_depth > MAX_ENCLOSURE_DEPTH {
        return Err(Error::InvalidArgument(format!(
            "max_depth {max_depth} exceeds {MAX_ENCLOSURE_DEPTH}"
        )));
    }
    if epsilon.is_negative() {
        return Err(Error::InvalidArgument("epsilon must be non-negative".into()));
    }
    let pts = points.points();
    let norms: Vec<QuadNum> = pts.iter().map(PointQ::norm_sq).collect();
    let eps = QuadNum::from_rat(epsilon.clone());
    let mut frontier: Vec<(Cell, Vec<usize>)> = vec![(measure.root(), (0..pts.len()).collect())];
    let mut settled = QuadNum::zero();
    let mut depth = 0;
    loop {
        let outcomes: Vec<CellOutcome> = frontier
            .par_iter()
            .map(|(cell, cands)| classify(measure, cell, cands, pts, &norms))
            .collect();
        let mut lo = QuadNum::zero();
        let mut hi = QuadNum::zero();
        let mut pending = Vec::new();
        for ((cell, _), outcome) in frontier.into_iter().zip(outcomes) {
            match outcome {
                CellOutcome::Owned(v) => settled += v,
                CellOutcome::Shared {
                    lo: l,
                    hi: h,
                    candidates,
                } => {
                    lo += l;
                    hi += h;
                    pending.push((cell, candidates));
                }
            }
        }
        if pending.is_empty() {
            return Ok(DistortionEnclosure {
                lo: settled.clone(),
                hi: settled,
                exact: true,
                depth_used: depth,
                unresolved_cells: 0,
            });
        }
        if hi.clone() - lo.clone() <= eps || depth >= max_depth {
            return Ok(DistortionEnclosure {
                lo: &settled + &lo,
                hi: &settled + &hi,
                exact: false,
                depth_used: depth,
                unresolved_cells: pending.len(),
            });
        }
        frontier = pending
            .into_iter()
            .flat_map(|(cell, cands)| {
                measure
                    .children(&cell)
                    .into_iter()
                    .map(move |child| (child, cands.clone()))
            })
            .collect();
        depth += 1;
    }
}

/// The exact R-measure distortion, or [`Error::NotExact`] if some cell stays shared at
/// `max_depth`.
pub fn exact_distortion(points: &PointSet, max_depth: u32) -> Result<QuadNum> {
    let e = distortion_enclosure(points, &Rat::zero(), max_depth)?;
    if e.exact {
        Ok(e.lo)
    } else {
        Err(Error::NotExact {
            width: e.width().to_f64(),
            depth: e.depth_used,
        })
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

fn min_dist_sq(x: [f64; 2], points: &[[f64; 2]]) -> f64 {
    points
        .iter()
        .map(|p| (x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2))
        .fold(f64::INFINITY, f64::min)
}

/// Averages `min_a ‖x - a‖²` over `samples` chaos-game points at word length `depth`.
pub fn mc_distortion(
    measure: &SelfSimilarMeasure,
    points: &[[f64; 2]],
    samples: usize,
    depth: usize,
    seed: u64,
) -> Result<McEstimate> {
    if samples < 1000 {
        return Err(Error::InvalidArgument("at least 1000 samples are required".into()));
    }
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be positive".into()));
    }
    let f = measure.float_ifs();
    let chunks = samples.div_ceil(SAMPLE_CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = SAMPLE_CHUNK.min(samples - c * SAMPLE_CHUNK);
            f.sample_chunk(seed, c as u64, len, depth)
                .into_iter()
                .map(|x| min_dist_sq(x, points))
                .fold((0.0, 0.0), |(s, s2), v| (s + v, s2 + v * v))
        })
        .collect();
    let (s, s2) = sums.into_iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let n = samples as f64;
    let mean = s / n;
    let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(McEstimate {
        estimate: mean,
        std_error: (var / n).sqrt(),
    })
}

/// Atomic stand-in for the measure: one atom per level-`k` cell, at the cell centroid,
/// carrying the cell's mass.
#[derive(Clone, Debug)]
pub struct Surrogate {
    pub depth: u32,
    pub atoms: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub triangles: Vec<[[f64; 2]; 3]>,
    /// Within-cell spread `V·(Σ p_i r_i²)^k`, exact when every cell has one owner.
    pub correction: f64,
}

impl Surrogate {
    pub fn new(measure: &SelfSimilarMeasure, depth: u32) -> Result<Self> {
        if depth > MAX_SURROGATE_DEPTH {
            return Err(Error::InvalidArgument(format!(
                "surrogate depth {depth} exceeds {MAX_SURROGATE_DEPTH}"
            )));
        }
        let f = measure.float_ifs();
        let probs: Vec<f64> = measure.ifs().probs().iter().map(rat_to_f64).collect();
        let base = measure.ifs().family().vertices().map(|v| v.to_f64());
        let mut atoms = vec![f.mean];
        let mut weights = vec![1.0];
        let mut triangles = vec![base];
        for _ in 0..depth {
            let mut na = Vec::with_capacity(atoms.len() * 3);
            let mut nw = Vec::with_capacity(atoms.len() * 3);
            let mut nt = Vec::with_capacity(atoms.len() * 3);
            // Children of ω are ω1, ω2, ω3: S_ω ∘ S_i, so the new map acts innermost.
            for (w, t) in weights.iter().zip(&triangles) {
                for (i, p) in probs.iter().enumerate() {
                    let tri = child_triangle(t, &base, i, &f);
                    na.push(centroid_of(&tri));
                    nw.push(w * p);
                    nt.push(tri);
                }
            }
            atoms = na;
            weights = nw;
            triangles = nt;
        }
        let contraction: Rat = measure
            .ifs()
            .probs()
            .iter()
            .zip(measure.ifs().ratios())
            .map(|(p, r)| p * r * r)
            .sum();
        let spread = measure.variance().scale(&num_traits::pow(contraction, depth as usize));
        Ok(Surrogate {
            depth,
            atoms,
            weights,
            triangles,
            correction: spread.to_f64(),
        })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Nearest point per atom (lowest index on ties) and the weighted distortion.
    pub fn assign(&self, points: &[[f64; 2]]) -> (Vec<usize>, f64) {
        let mut total = 0.0;
        let labels = self
            .atoms
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| {
                let (idx, d) = nearest(*x, points);
                total += w * d;
                idx
            })
            .collect();
        (labels, total)
    }

    pub fn distortion(&self, points: &[[f64; 2]]) -> f64 {
        self.assign(points).1
    }

    /// Whether each atom's cell lies entirely in the Voronoi region of its owner.
    pub fn single_owner(&self, points: &[[f64; 2]], labels: &[usize]) -> bool {
        self.triangles.iter().zip(labels).all(|(tri, &b)| {
            points.iter().enumerate().all(|(a, pa)| {
                if a == b {
                    return true;
                }
                let pb = points[b];
                let diff = [pa[0] - pb[0], pa[1] - pb[1]];
                let offset = (pa[0] * pa[0] + pa[1] * pa[1]) - (pb[0] * pb[0] + pb[1] * pb[1]);
                tri.iter()
                    .all(|v| 2.0 * (v[0] * diff[0] + v[1] * diff[1]) - offset <= 1e-12)
            })
        })
    }
}

/// The triangle of `ωi` given the triangle of `ω`: `S_ω(S_i(△))`. Since `S_ω` is a
/// similarity fixing orientation, it is the affine image of `S_i(△)` under the map sending
/// `△` to the parent triangle.
fn child_triangle(
    parent: &[[f64; 2]; 3],
    base: &[[f64; 2]; 3],
    i: usize,
    f: &crate::measure::FloatIfs,
) -> [[f64; 2]; 3] {
    let inner: [[f64; 2]; 3] = std::array::from_fn(|k| f.apply(i, base[k]));
    inner.map(|p| affine_from_base(parent, base, p))
}

/// Maps `p` by the affine map taking `base` to `target` (vertex order preserved).
fn affine_from_base(target: &[[f64; 2]; 3], base: &[[f64; 2]; 3], p: [f64; 2]) -> [f64; 2] {
    // Barycentric coordinates of p in the base triangle.
    let [a, b, c] = *base;
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
    let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
    let l0 = 1.0 - l1 - l2;
    [
        l0 * target[0][0] + l1 * target[1][0] + l2 * target[2][0],
        l0 * target[0][1] + l1 * target[1][1] + l2 * target[2][1],
    ]
}

fn centroid_of(t: &[[f64; 2]; 3]) -> [f64; 2] {
    [(t[0][0] + t[1][0] + t[2][0]) / 3.0, (t[0][1] + t[1][1] + t[2][1]) / 3.0]
}

fn nearest(x: [f64; 2], points: &[[f64; 2]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, p) in points.iter().enumerate() {
        let d = (x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Result of a Lloyd run on the surrogate.
#[derive(Clone, PartialEq, Debug)]
pub struct LloydState {
    pub points: Vec<[f64; 2]>,
    /// Surrogate distortion plus the within-cell correction.
    pub distortion: f64,
    pub surrogate_distortion: f64,
    pub correction: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The correction is exact only when this holds.
    pub single_owner: bool,
    /// Surrogate distortion after every assignment step.
    pub history: Vec<f64>,
}

/// Lloyd iterations for the measure on its level-`depth` surrogate.
pub fn lloyd(
    measure: &SelfSimilarMeasure,
    init: &[[f64; 2]],
    depth: u32,
    max_iters: usize,
    tol: f64,
) -> Result<LloydState> {
    if init.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let sur = Surrogate::new(measure, depth)?;
    Ok(lloyd_on(&sur, init, max_iters, tol))
}

/// Lloyd iterations on a prebuilt surrogate. Empty clusters are moved to the atom with
/// the largest current contribution.
pub fn lloyd_on(sur: &Surrogate, init: &[[f64; 2]], max_iters: usize, tol: f64) -> LloydState {
    let k = init.len();
    let mut points = init.to_vec();
    let (mut labels, mut d) = sur.assign(&points);
    let mut history = vec![d];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        iterations += 1;
        let mut sums = vec![[0.0f64; 2]; k];
        let mut mass = vec![0.0f64; k];
        for ((x, w), &l) in sur.atoms.iter().zip(&sur.weights).zip(&labels) {
            sums[l][0] += w * x[0];
            sums[l][1] += w * x[1];
            mass[l] += w;
        }
        let mut contrib: Vec<f64> = sur
            .atoms
            .iter()
            .zip(&sur.weights)
            .zip(&labels)
            .map(|((x, w), &l)| w * ((x[0] - points[l][0]).powi(2) + (x[1] - points[l][1]).powi(2)))
            .collect();
        for j in 0..k {
            if mass[j] > 0.0 {
                points[j] = [sums[j][0] / mass[j], sums[j][1] / mass[j]];
            } else {
                let (far, _) =
                    contrib.iter().enumerate().fold(
                        (0, f64::NEG_INFINITY),
                        |acc, (i, &c)| if c > acc.1 { (i, c) } else { acc },
                    );
                points[j] = sur.atoms[far];
                contrib[far] = f64::NEG_INFINITY;
            }
        }
        let (new_labels, new_d) = sur.assign(&points);
        history.push(new_d);
        let unchanged = new_labels == labels;
        let rel = if d > 0.0 { (d - new_d) / d } else { 0.0 };
        labels = new_labels;
        d = new_d;
        if unchanged || rel < tol {
            converged = true;
            break;
        }
    }
    let single_owner = sur.single_owner(&points, &labels);
    LloydState {
        distortion: d + sur.correction,
        surrogate_distortion: d,
        correction: sur.correction,
        points,
        iterations,
        converged,
        single_owner,
        history,
    }
}

/// Best of `restarts` Lloyd runs, each seeded with `n` distinct atoms drawn with
/// probability proportional to their mass. Restart `r` uses ChaCha8 stream `r`.
pub fn kmeans_best_of(
    measure: &SelfSimilarMeasure,
    n: usize,
    restarts: usize,
    depth: u32,
    seed: u64,
) -> Result<LloydState> {
    if n == 0 {
        return Err(Error::ZeroPoints);
    }
    if restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be positive".into()));
    }
    let sur = Surrogate::new(measure, depth)?;
    if n > sur.len() {
        return Err(Error::InvalidArgument(format!(
            "{n} points exceed the {} surrogate atoms",
            sur.len()
        )));
    }
    let runs: Vec<LloydState> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let init: Vec<[f64; 2]> = sample_weighted(&mut rng, sur.len(), |i| sur.weights[i], n)
                .expect("positive weights")
                .into_iter()
                .map(|i| sur.atoms[i])
                .collect();
            lloyd_on(&sur, &init, 1000, 0.0)
        })
        .collect();
    Ok(runs
        .into_iter()
        .reduce(|best, s| if s.distortion < best.distortion { s } else { best })
        .expect("at least one restart"))
}

/// Exact surrogate distortion of `points` against the atoms `a(ωτ)`, `|τ| = depth`,
/// with weights `P(△_{ωτ})`.
pub fn surrogate_distortion_exact(
    measure: &SelfSimilarMeasure,
    points: &[PointQ],
    depth: u32,
    within: &Word,
) -> Result<QuadNum> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let mut level = vec![measure.cell(within)];
    for _ in 0..depth {
        level = level.iter().flat_map(|c| measure.children(c)).collect();
    }
    Ok(level
        .iter()
        .map(|c| {
            let d = points.iter().map(|p| c.centroid.dist_sq(p)).min().expect("non-empty");
            d.scale(&c.measure)
        })
        .sum())
}
