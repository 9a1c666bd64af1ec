//! End-to-end acceptance checks. Run with
//! `cargo test -p rquant-core --test acceptance`; prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use rquant_core::algebra::{rat, rat_to_f64, PointQ, QuadNum, Rat};
use rquant_core::asymptotics::{accumulation_scan, f, level_range, DimensionRecord};
use rquant_core::measure::{cell_distortion, centroid, Word};
use rquant_core::optimal::{pow3, quantization_error};
use rquant_core::oracle::{distortion_enclosure, kmeans_best_of, mc_distortion};
use rquant_core::{
    canonical_spec, count_optimal_sets, enumerate_optimal_sets, optimal_set, PointSet, SelfSimilarMeasure,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn q(r: Rat) -> QuadNum {
    QuadNum::from_rat(r)
}

fn exact_values() -> Outcome {
    let known = [
        (1, rat(1, 6)),
        (2, rat(5, 54)),
        (3, rat(1, 54)),
        (4, rat(23, 1458)),
        (11, rat(73, 39366)),
        (19, rat(41, 39366)),
    ];
    for (n, v) in known {
        check(quantization_error(n) == v, || {
            format!("V_{n} = {} != {v}", quantization_error(n))
        })?;
    }
    for l in 0..=8u32 {
        let want = rat(1, 6) / Rat::from_integer(num_bigint::BigInt::from(9u32).pow(l));
        check(quantization_error(pow3(l)) == want, || format!("V at 3^{l}"))?;
    }
    for (n, c) in [(1u64, 1u32), (2, 3), (3, 1), (4, 9), (5, 27)] {
        check(count_optimal_sets(n) == BigUint::from(c), || {
            format!("count({n}) = {}", count_optimal_sets(n))
        })?;
        let listed = enumerate_optimal_sets(n, usize::MAX).count();
        check(listed == c as usize, || format!("enumerated {listed} sets for n = {n}"))?;
    }
    Ok("V_1..V_19 reference values, V_{3^l} for l <= 8, counts 1/3/1/9/27 (nine four-means sets)".into())
}

/// A random point `a + b√3` per coordinate, roughly covering the triangle and its
/// surroundings.
fn random_point(rng: &mut ChaCha8Rng) -> PointQ {
    let mut coord = |lo: i64, hi: i64| {
        let den = rng.gen_range(1..=64i64);
        let a = rat(rng.gen_range(lo * den..=hi * den), den);
        let b = rat(rng.gen_range(-8..=8), rng.gen_range(8..=64));
        QuadNum::new(a, b)
    };
    PointQ::new(coord(-1, 2), coord(-1, 1))
}

fn random_set(n: usize, rng: &mut ChaCha8Rng) -> PointSet {
    loop {
        let pts: Vec<PointQ> = (0..n).map(|_| random_point(rng)).collect();
        if let Ok(set) = PointSet::new(pts) {
            return set;
        }
    }
}

/// An optimal set with every coordinate moved by a small random rational.
fn perturbed_optimal(n: u64, rng: &mut ChaCha8Rng) -> PointSet {
    let specs: Vec<_> = enumerate_optimal_sets(n, usize::MAX).collect();
    let spec = &specs[rng.gen_range(0..specs.len())];
    let base = optimal_set(spec).unwrap();
    let pts = base
        .points()
        .iter()
        .map(|p| {
            let mut nudge = || q(rat(rng.gen_range(-20..=20), 1000));
            PointQ::new(&p.x + nudge(), &p.y + nudge())
        })
        .collect();
    PointSet::new(pts).unwrap_or(base)
}

fn oracle_equivalence() -> Outcome {
    let mut specs = 0;
    for n in 1..=9u64 {
        let vn = q(quantization_error(n));
        let all: Vec<_> = enumerate_optimal_sets(n, usize::MAX).collect();
        let bad: Vec<String> = all
            .par_iter()
            .filter_map(|spec| {
                let set = optimal_set(spec).ok()?;
                let e = distortion_enclosure(&set, &Rat::zero(), 20).ok()?;
                (!(e.exact && e.lo == vn)).then(|| format!("n = {n}, spec {spec:?}: {e:?}"))
            })
            .collect();
        check(bad.is_empty(), || bad.join("; "))?;
        specs += all.len();
    }
    let eps = rat(1, 1_000_000_000);
    let mut random_sets = 0;
    for n in 1..=6u64 {
        let vn = q(quantization_error(n));
        let failures: Vec<String> = (0..200u64)
            .into_par_iter()
            .filter_map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(1000 * n + i);
                let set = if i % 2 == 0 {
                    random_set(n as usize, &mut rng)
                } else {
                    perturbed_optimal(n, &mut rng)
                };
                let e = distortion_enclosure(&set, &eps, 16).expect("valid arguments");
                (e.lo < vn).then(|| format!("n = {n}, set {i}: lo = {} < V_n", e.lo.to_f64()))
            })
            .collect();
        check(failures.is_empty(), || failures.join("; "))?;
        random_sets += 200;
    }
    Ok(format!(
        "{specs} optimal specs resolved exactly; {random_sets} random/perturbed sets with lo >= V_n"
    ))
}

fn lloyd_recovery() -> Outcome {
    let m = SelfSimilarMeasure::standard();
    let mut worst: f64 = 0.0;
    for n in [2usize, 3, 4, 5, 7, 9] {
        let best = kmeans_best_of(m, n, 64, 7, 20_240_601).map_err(|e| e.to_string())?;
        let gap = (best.distortion - rat_to_f64(&quantization_error(n as u64))).abs();
        check(gap < 1e-6, || format!("n = {n}: gap {gap:e}"))?;
        worst = worst.max(gap);
        if n == 3 {
            let mut want: Vec<[f64; 2]> = optimal_set(&canonical_spec(3)).unwrap().to_f64();
            let mut got = best.points.clone();
            want.sort_by(|a, b| a.partial_cmp(b).unwrap());
            got.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (w, g) in want.iter().zip(&got) {
                check((w[0] - g[0]).abs() < 1e-6 && (w[1] - g[1]).abs() < 1e-6, || {
                    format!("three-means point {g:?} far from {w:?}")
                })?;
            }
        }
    }
    Ok(format!(
        "n in {{2,3,4,5,7,9}}: max gap {worst:.2e}; three-means recovered point-wise"
    ))
}

fn scaling_law() -> Outcome {
    let nine = rat(9, 1);
    let bad: Vec<u64> = (1..=10_000u64)
        .into_par_iter()
        .filter(|&n| quantization_error(3 * n) * &nine != quantization_error(n))
        .collect();
    check(bad.is_empty(), || {
        format!("fails at n = {:?}", &bad[..bad.len().min(5)])
    })?;
    Ok("V_{3n} = V_n / 9 for 1 <= n <= 10^4".into())
}

fn dimension() -> Outcome {
    let (lo, hi) = (rat(1, 54), rat(3, 2));
    let outside: Vec<u64> = (1..=100_000u64)
        .into_par_iter()
        .filter(|&n| {
            let s = quantization_error(n) * Rat::from_integer((n * n).into());
            s < lo || s > hi
        })
        .collect();
    check(outside.is_empty(), || {
        format!("n^2 V_n outside bounds at {:?}", &outside[..outside.len().min(5)])
    })?;
    let d14 = DimensionRecord::new(pow3(14)).map_err(|e| e.to_string())?.dim_est;
    check((d14 - 1.0).abs() < 0.06, || format!("dim_est(3^14) = {d14}"))?;
    let along: Vec<f64> = (1..=20)
        .map(|l| DimensionRecord::new(pow3(l)).unwrap().dim_est)
        .collect();
    check(along.windows(2).all(|w| w[0] < w[1]), || {
        format!("not monotone: {along:?}")
    })?;
    Ok(format!(
        "1/54 <= n^2 V_n <= 3/2 for n <= 10^5; dim_est(3^14) = {d14:.6}"
    ))
}

fn coefficient() -> Outcome {
    let xs = [rat(1, 1), rat(5, 4), rat(3, 2), rat(7, 4), rat(2, 1)];
    let mut worst: f64 = 0.0;
    for x in &xs {
        let fx = f(x).map_err(|e| e.to_string())?;
        let row = accumulation_scan(x, 12).map_err(|e| e.to_string())?.pop().unwrap();
        let err = (rat_to_f64(&row.scaled) - rat_to_f64(&fx)).abs();
        check(err < 1e-3, || {
            format!("x = {x}: scaled {} vs f(x) = {fx}", rat_to_f64(&row.scaled))
        })?;
        worst = worst.max(err);
    }
    let r = level_range(8).map_err(|e| e.to_string())?;
    let (min, max) = (rat_to_f64(&r.min), rat_to_f64(&r.max));
    check(min >= 1.0 / 6.0 - 1e-2 && max <= 10.0 / 27.0 + 1e-2, || {
        format!("level 8 range [{min}, {max}]")
    })?;
    Ok(format!(
        "scan error <= {worst:.2e} at l = 12; level 8 range [{min:.6}, {max:.6}] (max at n = {})",
        r.argmax
    ))
}

fn random_word(rng: &mut ChaCha8Rng) -> Word {
    let len = rng.gen_range(0..=6);
    Word::new((0..len).map(|_| rng.gen_range(1..=3u8)).collect()).unwrap()
}

fn measure_module() -> Outcome {
    let m = SelfSimilarMeasure::standard();
    let mean = PointQ::new(q(rat(1, 2)), QuadNum::sqrt3_times(rat(1, 6)));
    check(*m.mean() == mean, || format!("mean {}", m.mean()))?;
    check(*m.variance() == q(rat(1, 6)), || format!("variance {}", m.variance()))?;
    for k in 0..=6 {
        let total: Rat = m.cells_at_depth(k).iter().map(|c| c.measure.clone()).sum();
        check(total == rat(1, 1), || format!("depth {k} sums to {total}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..500 {
        let w = random_word(&mut rng);
        let p = random_point(&mut rng);
        let c = centroid(&w);
        let mass = m.cell(&w).measure;
        let lhs = cell_distortion(&w, &p) - cell_distortion(&w, &c);
        check(lhs == c.dist_sq(&p).scale(&mass), || {
            format!("parallel axis fails at {w}, {p}")
        })?;
        // Additivity over the children is an independent consistency check.
        let split: QuadNum = (1..=3).map(|i| cell_distortion(&w.child(i), &p)).sum();
        check(split == cell_distortion(&w, &p), || {
            format!("additivity fails at {w}, {p}")
        })?;
    }
    Ok("mean (1/2, √3/6), variance 1/6; masses sum to 1 for k <= 6; 500 parallel-axis pairs".into())
}

fn mc_sanity() -> Outcome {
    let m = SelfSimilarMeasure::standard();
    let mut report = Vec::new();
    for (n, seed) in [(1u64, 101u64), (2, 202), (3, 303)] {
        let set = optimal_set(&canonical_spec(n)).unwrap().to_f64();
        let est = mc_distortion(m, &set, 1_000_000, 30, seed).map_err(|e| e.to_string())?;
        let exact = rat_to_f64(&quantization_error(n));
        let z = (est.estimate - exact) / est.std_error;
        check(z.abs() <= 4.0, || {
            format!("n = {n}: estimate {} vs {exact}, z = {z:.2}", est.estimate)
        })?;
        report.push(format!("n={n} z={z:+.2}"));
    }
    Ok(report.join(", "))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 exact values", exact_values, Duration::from_secs(1)),
        ("2 oracle equivalence", oracle_equivalence, Duration::from_secs(60)),
        ("3 Lloyd recovery", lloyd_recovery, Duration::from_secs(120)),
        ("4 scaling law", scaling_law, Duration::from_secs(1)),
        ("5 dimension", dimension, Duration::from_secs(60)),
        ("6 coefficient", coefficient, Duration::from_secs(60)),
        ("7 measure module", measure_module, Duration::from_secs(5)),
        ("8 Monte Carlo", mc_sanity, Duration::from_secs(30)),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > budget => Err(format!("{detail}; took {elapsed:.2?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("[PASS] {name} ({elapsed:.2?}): {detail}"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {name} ({elapsed:.2?}): {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
