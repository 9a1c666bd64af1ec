//! Output helpers shared by the subcommands.

use rquant_core::{OptimalSetSpec, PointQ, Rat};
use serde::Serialize;
use serde_json::{Map, Value};

/// `x` rounded to 15 significant digits.
pub fn round15(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.14e}").parse().expect("formatted float parses")
}

/// Shortest form of `x` rounded to 15 significant digits; scientific notation outside
/// `[1e-4, 1e15)`.
pub fn float15(x: f64) -> String {
    let r = round15(x);
    if r != 0.0 && r.is_finite() && !(1e-4..1e15).contains(&r.abs()) {
        format!("{r:e}")
    } else {
        r.to_string()
    }
}

#[derive(Serialize)]
pub struct ExactRat {
    pub num: String,
    pub den: String,
    pub float: f64,
}

impl ExactRat {
    pub fn new(r: &Rat) -> Self {
        ExactRat {
            num: r.numer().to_string(),
            den: r.denom().to_string(),
            float: round15(rquant_core::algebra::rat_to_f64(r)),
        }
    }
}

#[derive(Serialize)]
pub struct PointOut {
    pub exact: [String; 2],
    pub float: [f64; 2],
}

impl PointOut {
    pub fn new(p: &PointQ) -> Self {
        let [x, y] = p.to_f64();
        PointOut {
            exact: [p.x.to_string(), p.y.to_string()],
            float: [round15(x), round15(y)],
        }
    }
}

/// `{"ell": ℓ, "j": [...], "variants": {word: label}}`.
pub fn spec_json(spec: &OptimalSetSpec) -> Value {
    let mut variants = Map::new();
    for (w, v) in &spec.variants {
        variants.insert(w.to_string(), Value::String(v.label().to_string()));
    }
    serde_json::json!({
        "ell": spec.ell,
        "j": spec.j.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
        "variants": variants,
    })
}

/// A compact one-line form of a spec for CSV output.
pub fn spec_compact(spec: &OptimalSetSpec) -> String {
    let j: Vec<String> = spec.j.iter().map(|w| w.to_string()).collect();
    let v: Vec<String> = spec
        .variants
        .iter()
        .map(|(w, v)| format!("{w}:{}", v.label()))
        .collect();
    format!("J={};{}", j.join(" "), v.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_digits() {
        assert_eq!(float15(1.0 / 3.0), "0.333333333333333");
        assert_eq!(float15(3f64.sqrt() / 6.0), "0.288675134594813");
        assert_eq!(float15(0.5), "0.5");
        assert_eq!(float15(2.0 / 3.0), "0.666666666666667");
        assert_eq!(float15(1.0 / 6.0 / 729.0 / 6561.0), "3.48458596881282e-8");
        assert_eq!(float15(0.0), "0");
    }
}
