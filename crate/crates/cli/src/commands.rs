use std::io::Write;

use num_bigint::BigUint;
use rquant_core::algebra::{parse_rat, rat_ln, rat_to_f64, PointQ, QuadNum};
use rquant_core::asymptotics::{accumulation_scan, dimension_scan};
use rquant_core::optimal::ell;
use rquant_core::{
    canonical_spec, count_optimal_sets, distortion_enclosure, enumerate_optimal_sets, kmeans_best_of, optimal_set,
    quantization_error, Family, GeneralIfs, OptimalSetSpec, Rat, SelfSimilarMeasure,
};
use serde_json::{json, Value};

use crate::format::{float15, round15, spec_compact, spec_json, ExactRat, PointOut};
use crate::{AsymptoticsKind, ErrorTableArgs, Failure, LloydArgs, OptimalArgs, ReportFormat, TableFormat, VerifyArgs};

/// Largest family `optimal --all` will print.
pub const MAX_LISTED_SETS: u64 = 10_000;
pub const MAX_TABLE_N: u64 = 1_000_000;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn write_json(out: &mut impl Write, v: &Value) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut *out, v).map_err(|e| usage(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn selected_specs(a: &OptimalArgs) -> Result<Vec<OptimalSetSpec>, Failure> {
    let count = count_optimal_sets(a.n);
    if a.all {
        if count > BigUint::from(MAX_LISTED_SETS) {
            return Err(usage(format!(
                "n = {} has {count} optimal sets; --all is limited to {MAX_LISTED_SETS}",
                a.n
            )));
        }
        return Ok(enumerate_optimal_sets(a.n, usize::MAX).collect());
    }
    if let Some(k) = a.index {
        if BigUint::from(k) >= count {
            return Err(usage(format!(
                "index {k} out of range: n = {} has {count} optimal sets",
                a.n
            )));
        }
        let spec = enumerate_optimal_sets(a.n, usize::MAX)
            .nth(k as usize)
            .expect("index below the count");
        return Ok(vec![spec]);
    }
    Ok(vec![canonical_spec(a.n)])
}

pub fn optimal(a: &OptimalArgs, out: &mut impl Write) -> Result<(), Failure> {
    if a.n == 0 {
        return Err(usage("n must be at least 1"));
    }
    let specs = selected_specs(a)?;
    let vn = quantization_error(a.n);
    match a.format {
        TableFormat::Json => {
            let sets: Result<Vec<Value>, Failure> = specs
                .iter()
                .map(|spec| {
                    let set = optimal_set(spec)?;
                    let points: Vec<PointOut> = set.points().iter().map(PointOut::new).collect();
                    Ok(json!({ "spec": spec_json(spec), "points": points }))
                })
                .collect();
            let doc = json!({
                "n": a.n,
                "ell": ell(a.n),
                "count": count_optimal_sets(a.n).to_string(),
                "vn": ExactRat::new(&vn),
                "sets": sets?,
            });
            write_json(out, &doc)
        }
        TableFormat::Csv => {
            writeln!(out, "set,spec,point,x_exact,y_exact,x_float,y_float")?;
            for (i, spec) in specs.iter().enumerate() {
                let set = optimal_set(spec)?;
                for (k, p) in set.points().iter().enumerate() {
                    let [x, y] = p.to_f64();
                    writeln!(
                        out,
                        "{i},{},{k},{},{},{},{}",
                        spec_compact(spec),
                        p.x,
                        p.y,
                        float15(x),
                        float15(y)
                    )?;
                }
            }
            Ok(())
        }
    }
}

pub fn error_table(a: &ErrorTableArgs, out: &mut impl Write) -> Result<(), Failure> {
    if a.n_max == 0 || a.n_max > MAX_TABLE_N {
        return Err(usage(format!("n_max must lie in 1..={MAX_TABLE_N}")));
    }
    use rayon::prelude::*;
    let rows: Vec<(u64, Rat, f64, f64)> = (1..=a.n_max)
        .into_par_iter()
        .map(|n| {
            let vn = quantization_error(n);
            let vf = rat_to_f64(&vn);
            let dim = 2.0 * (n as f64).ln() / -rat_ln(&vn);
            (n, vn, vf, dim)
        })
        .collect();
    match a.format {
        TableFormat::Csv => {
            writeln!(out, "n,vn_num,vn_den,vn_float,n2vn_float,dim_est")?;
            for (n, vn, vf, dim) in &rows {
                let scaled = (*n as f64) * (*n as f64) * vf;
                writeln!(
                    out,
                    "{n},{},{},{},{},{}",
                    vn.numer(),
                    vn.denom(),
                    float15(*vf),
                    float15(scaled),
                    float15(*dim)
                )?;
            }
            Ok(())
        }
        TableFormat::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|(n, vn, vf, dim)| {
                    json!({
                        "n": n,
                        "vn_num": vn.numer().to_string(),
                        "vn_den": vn.denom().to_string(),
                        "vn_float": round15(*vf),
                        "n2vn_float": round15((*n as f64) * (*n as f64) * vf),
                        "dim_est": round15(*dim),
                    })
                })
                .collect();
            write_json(out, &Value::Array(rows))
        }
    }
}

fn point_line(p: &PointQ) -> String {
    let [x, y] = p.to_f64();
    format!("({}, {})  ~ ({}, {})", p.x, p.y, float15(x), float15(y))
}

pub fn verify(a: &VerifyArgs, out: &mut impl Write) -> Result<(), Failure> {
    if a.n == 0 {
        return Err(usage("n must be at least 1"));
    }
    let epsilon = parse_rat(&a.epsilon)?;
    let spec = canonical_spec(a.n);
    let set = optimal_set(&spec)?;
    let vn = QuadNum::from_rat(quantization_error(a.n));
    let enc = distortion_enclosure(&set, &epsilon, a.max_depth)?;
    writeln!(out, "n = {}  (ell = {})", a.n, spec.ell)?;
    writeln!(out, "canonical set ({} points):", set.len())?;
    for p in set.points() {
        writeln!(out, "  {}", point_line(p))?;
    }
    writeln!(out, "closed-form V_n = {} ~ {}", vn, float15(vn.to_f64()))?;
    if enc.exact {
        writeln!(
            out,
            "subdivision value = {} (exact, resolved at depth {})",
            enc.lo, enc.depth_used
        )?;
    } else {
        writeln!(
            out,
            "subdivision enclosure = [{}, {}] ~ [{}, {}] (depth {}, {} shared cells)",
            enc.lo,
            enc.hi,
            float15(enc.lo.to_f64()),
            float15(enc.hi.to_f64()),
            enc.depth_used,
            enc.unresolved_cells
        )?;
    }
    if enc.exact && enc.lo == vn {
        writeln!(out, "result: exact match")?;
        Ok(())
    } else if enc.contains(&vn) {
        writeln!(out, "result: enclosure contains V_n")?;
        Ok(())
    } else {
        writeln!(out, "result: MISMATCH")?;
        Err(Failure::Mismatch(format!(
            "V_{} = {} lies outside [{}, {}]",
            a.n, vn, enc.lo, enc.hi
        )))
    }
}

fn general_ifs(a: &LloydArgs) -> Result<GeneralIfs, Failure> {
    let get = |v: &Option<String>| -> Result<Rat, Failure> {
        match v {
            Some(s) => Ok(parse_rat(s)?),
            None => Ok(Rat::new(1.into(), 3.into())),
        }
    };
    let family: Family = match &a.family {
        Some(f) => f.parse()?,
        None => Family::S,
    };
    Ok(GeneralIfs::new(
        [get(&a.r1)?, get(&a.r2)?, get(&a.r3)?],
        [get(&a.p1)?, get(&a.p2)?, get(&a.p3)?],
        family,
    )?)
}

pub fn lloyd(a: &LloydArgs, out: &mut impl Write) -> Result<(), Failure> {
    let ifs = general_ifs(a)?;
    let owned;
    let measure = if ifs.is_standard() {
        SelfSimilarMeasure::standard()
    } else {
        owned = SelfSimilarMeasure::new(ifs);
        &owned
    };
    let best = kmeans_best_of(measure, a.n, a.restarts, a.depth, a.seed)?;
    let standard = measure.ifs().is_standard();
    let vn = standard.then(|| quantization_error(a.n as u64));
    let gap = vn.as_ref().map(|v| (best.distortion - rat_to_f64(v)).abs());
    match a.format {
        ReportFormat::Json => {
            let doc = json!({
                "n": a.n,
                "restarts": a.restarts,
                "depth": a.depth,
                "seed": a.seed,
                "standard": standard,
                "distortion": round15(best.distortion),
                "surrogate_distortion": round15(best.surrogate_distortion),
                "correction": round15(best.correction),
                "single_owner": best.single_owner,
                "converged": best.converged,
                "iterations": best.iterations,
                "vn": vn.as_ref().map(ExactRat::new),
                "gap": gap.map(round15),
                "points": best.points.iter().map(|p| [round15(p[0]), round15(p[1])]).collect::<Vec<_>>(),
            });
            write_json(out, &doc)
        }
        ReportFormat::Text => {
            writeln!(
                out,
                "n = {}, restarts = {}, surrogate depth = {}, seed = {}",
                a.n, a.restarts, a.depth, a.seed
            )?;
            writeln!(out, "best distortion = {}", float15(best.distortion))?;
            writeln!(
                out,
                "  surrogate = {}, within-cell correction = {}",
                float15(best.surrogate_distortion),
                float15(best.correction)
            )?;
            writeln!(
                out,
                "  converged = {}, iterations = {}, single owner per cell = {}",
                best.converged, best.iterations, best.single_owner
            )?;
            match (&vn, gap) {
                (Some(v), Some(g)) => {
                    writeln!(out, "closed-form V_n = {} ~ {}", v, float15(rat_to_f64(v)))?;
                    writeln!(out, "gap = {}", float15(g))?;
                }
                _ => writeln!(out, "general system: no closed-form V_n")?,
            }
            writeln!(out, "points:")?;
            for p in &best.points {
                writeln!(out, "  {} {}", float15(p[0]), float15(p[1]))?;
            }
            Ok(())
        }
    }
}

pub fn asymptotics(kind: &AsymptoticsKind, out: &mut impl Write) -> Result<(), Failure> {
    match kind {
        AsymptoticsKind::Dimension { n_max, format } => {
            if *n_max > MAX_TABLE_N {
                return Err(usage(format!("n_max must be at most {MAX_TABLE_N}")));
            }
            let recs = dimension_scan(*n_max)?;
            match format {
                TableFormat::Csv => {
                    writeln!(out, "n,vn,dim_est,scaled,scaled_float")?;
                    for r in &recs {
                        writeln!(
                            out,
                            "{},{},{},{},{}",
                            r.n,
                            r.vn,
                            float15(r.dim_est),
                            r.scaled,
                            float15(rat_to_f64(&r.scaled))
                        )?;
                    }
                    Ok(())
                }
                TableFormat::Json => {
                    let rows: Vec<Value> = recs
                        .iter()
                        .map(|r| {
                            json!({
                                "n": r.n,
                                "vn": ExactRat::new(&r.vn),
                                "dim_est": round15(r.dim_est),
                                "scaled": ExactRat::new(&r.scaled),
                            })
                        })
                        .collect();
                    write_json(out, &Value::Array(rows))
                }
            }
        }
        AsymptoticsKind::Coefficient { x, levels, format } => {
            let x = parse_rat(x)?;
            let rows = accumulation_scan(&x, *levels)?;
            match format {
                TableFormat::Csv => {
                    writeln!(out, "ell,n,scaled,scaled_float")?;
                    for r in &rows {
                        writeln!(out, "{},{},{},{}", r.ell, r.n, r.scaled, float15(rat_to_f64(&r.scaled)))?;
                    }
                    Ok(())
                }
                TableFormat::Json => {
                    let rows: Vec<Value> = rows
                        .iter()
                        .map(|r| json!({ "ell": r.ell, "n": r.n, "scaled": ExactRat::new(&r.scaled) }))
                        .collect();
                    write_json(out, &Value::Array(rows))
                }
            }
        }
    }
}
