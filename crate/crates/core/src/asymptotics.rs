//! Growth of the quantization error: dimension estimates and the behaviour of `n²·V_n`.
//!
//! Since `V_n` is exact, every scaled quantity is a rational number and only `dim_est`
//! goes through floating point.

use num_traits::Zero;
use rayon::prelude::*;

use crate::algebra::{rat, rat_ln, rat_to_f64, Rat};
use crate::error::{Error, Result};
use crate::optimal::{pow3, quantization_error};

/// Lower bound of `n²·V_n` for every `n ≥ 1`.
pub fn scaled_lower_bound() -> Rat {
    rat(1, 54)
}

/// Upper bound of `n²·V_n` for every `n ≥ 1`.
pub fn scaled_upper_bound() -> Rat {
    rat(3, 2)
}

#[derive(Clone, PartialEq, Debug)]
pub struct DimensionRecord {
    pub n: u64,
    pub vn: Rat,
    /// `2 ln n / (−ln V_n)`.
    pub dim_est: f64,
    /// `n²·V_n`.
    pub scaled: Rat,
}

impl DimensionRecord {
    pub fn new(n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("dimension estimates need n ≥ 2".into()));
        }
        let vn = quantization_error(n);
        let dim_est = 2.0 * (n as f64).ln() / -rat_ln(&vn);
        let scaled = &vn * Rat::from_integer((n as u128 * n as u128).into());
        Ok(DimensionRecord { n, vn, dim_est, scaled })
    }

    /// The two-sided bound on `ln V_n / (−2 ln n)` implied by
    /// `1/54 ≤ n²·V_n ≤ 3/2`, checked with an absolute slack.
    pub fn within_sandwich(&self, slack: f64) -> bool {
        let two_ln_n = 2.0 * (self.n as f64).ln();
        let value = rat_ln(&self.vn) / -two_ln_n;
        let lower = rat_to_f64(&scaled_upper_bound()).ln() / -two_ln_n + 1.0;
        let upper = rat_to_f64(&scaled_lower_bound()).ln() / -two_ln_n + 1.0;
        lower - slack <= value && value <= upper + slack
    }
}

/// Records for `2 ≤ n ≤ n_max`, in order.
pub fn dimension_scan(n_max: u64) -> Result<Vec<DimensionRecord>> {
    if n_max < 2 {
        return Err(Error::InvalidArgument("n_max must be at least 2".into()));
    }
    (2..=n_max).into_par_iter().map(DimensionRecord::new).collect()
}

/// `f(x) = x²(13 − 4x)/54`, the limit of `n²·V_n` along `n = ⌊x·3^ℓ⌋`, for `1 ≤ x ≤ 2`.
pub fn f(x: &Rat) -> Result<Rat> {
    if *x < rat(1, 1) || *x > rat(2, 1) {
        return Err(Error::OutOfDomain(format!("f argument {x}")));
    }
    Ok(level_profile(x))
}

/// `x²(13 − 4x)/54` without the domain restriction. For `n = x·3^ℓ` with `1 ≤ x < 3`
/// this equals `n²·V_n` exactly.
pub fn level_profile(x: &Rat) -> Rat {
    x * x * (rat(13, 1) - x * rat(4, 1)) / rat(54, 1)
}

/// One row of an accumulation scan.
#[derive(Clone, PartialEq, Debug)]
pub struct ScanRow {
    pub ell: u32,
    pub n: u64,
    pub scaled: Rat,
}

/// `n_ℓ = ⌊x·3^ℓ⌋` and `n_ℓ²·V_{n_ℓ}` for `ℓ = 1..=levels`.
pub fn accumulation_scan(x: &Rat, levels: u32) -> Result<Vec<ScanRow>> {
    if *x < rat(1, 1) || *x > rat(2, 1) {
        return Err(Error::OutOfDomain(format!("x = {x}")));
    }
    if levels == 0 {
        return Err(Error::InvalidArgument("levels must be at least 1".into()));
    }
    if levels > 38 {
        return Err(Error::InvalidArgument("levels above 38 overflow n".into()));
    }
    Ok((1..=levels)
        .map(|ell| {
            let n_big = (x * Rat::from_integer(pow3(ell).into())).floor().to_integer();
            let n: u64 = n_big.try_into().expect("n fits in u64 for ℓ ≤ 38");
            let scaled = quantization_error(n) * Rat::from_integer((n as u128 * n as u128).into());
            ScanRow { ell, n, scaled }
        })
        .collect())
}

/// The accumulation interval `[f(1), f(2)]` of `n²·V_n` along the subsequences
/// `⌊x·3^ℓ⌋`, `x ∈ [1, 2]`.
pub fn coefficient_range() -> (Rat, Rat) {
    (rat(1, 6), rat(10, 27))
}

/// Observed extremes of `n²·V_n` over one full level `3^ℓ ≤ n < 3^{ℓ+1}`.
#[derive(Clone, PartialEq, Debug)]
pub struct LevelRange {
    pub ell: u32,
    pub min: Rat,
    pub argmin: u64,
    pub max: Rat,
    pub argmax: u64,
}

pub fn level_range(ell: u32) -> Result<LevelRange> {
    if ell > 16 {
        return Err(Error::InvalidArgument("level scans are limited to ℓ ≤ 16".into()));
    }
    let values: Vec<(u64, Rat)> = (pow3(ell)..pow3(ell + 1))
        .into_par_iter()
        .map(|n| {
            (
                n,
                quantization_error(n) * Rat::from_integer((n as u128 * n as u128).into()),
            )
        })
        .collect();
    let mut min = (0, Rat::zero());
    let mut max = (0, Rat::zero());
    for (i, (n, v)) in values.into_iter().enumerate() {
        if i == 0 || v < min.1 {
            min = (n, v.clone());
        }
        if i == 0 || v > max.1 {
            max = (n, v);
        }
    }
    Ok(LevelRange {
        ell,
        min: min.1,
        argmin: min.0,
        max: max.1,
        argmax: max.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dimension_examples() {
        let r = DimensionRecord::new(3).unwrap();
        assert!((r.dim_est - 2.0 * 3f64.ln() / 54f64.ln()).abs() < 1e-12);
        assert!((r.dim_est - 0.5508).abs() < 1e-4);
        let r = DimensionRecord::new(59049).unwrap();
        let want = 20.0 * 3f64.ln() / (6f64.ln() + 20.0 * 3f64.ln());
        assert!((r.dim_est - want).abs() < 1e-12);
        assert!((r.dim_est - 0.9246).abs() < 1e-4);
        assert!(DimensionRecord::new(1).is_err());
    }

    #[test]
    fn dimension_tends_to_one() {
        let r = DimensionRecord::new(pow3(14)).unwrap();
        assert!((r.dim_est - 1.0).abs() < 0.06);
        let along: Vec<f64> = (1..=20)
            .map(|l| DimensionRecord::new(pow3(l)).unwrap().dim_est)
            .collect();
        assert!(along.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn scan_bounds_hold() {
        let recs = dimension_scan(3000).unwrap();
        assert_eq!(recs.len(), 2999);
        assert_eq!(recs[0].n, 2);
        for r in &recs {
            assert!(r.scaled >= scaled_lower_bound() && r.scaled <= scaled_upper_bound());
            assert!(r.within_sandwich(1e-9), "n = {}", r.n);
        }
        assert!(dimension_scan(1).is_err());
    }

    #[test]
    fn f_values() {
        assert_eq!(f(&rat(1, 1)).unwrap(), rat(1, 6));
        assert_eq!(f(&rat(2, 1)).unwrap(), rat(10, 27));
        assert_eq!(f(&rat(3, 2)).unwrap(), rat(7, 24));
        assert_eq!(f(&rat(5, 4)).unwrap(), rat(25, 108));
        assert!(f(&rat(9, 10)).is_err());
        assert!(f(&rat(21, 10)).is_err());
    }

    #[test]
    fn f_strictly_increasing_on_grid() {
        let grid: Vec<Rat> = (0..100).map(|i| rat(1, 1) + rat(i, 99)).collect();
        let vals: Vec<Rat> = grid.iter().map(|x| f(x).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn profile_matches_formula_at_exact_multiples() {
        // At n = x·3^ℓ the scaled error equals the profile with no rounding.
        for ell in 1..6 {
            for n in pow3(ell)..pow3(ell + 1) {
                let x = Rat::new(n.into(), pow3(ell).into());
                let scaled = quantization_error(n) * Rat::from_integer((n * n).into());
                assert_eq!(scaled, level_profile(&x));
            }
        }
    }

    #[test]
    fn scan_examples() {
        for row in accumulation_scan(&rat(1, 1), 8).unwrap() {
            assert_eq!(row.scaled, rat(1, 6));
            assert_eq!(row.n, pow3(row.ell));
        }
        let last = accumulation_scan(&rat(2, 1), 10).unwrap().pop().unwrap();
        assert_eq!(last.n, 2 * pow3(10));
        assert!((rat_to_f64(&last.scaled) - 10.0 / 27.0).abs() < 1e-3);
        let last = accumulation_scan(&rat(3, 2), 12).unwrap().pop().unwrap();
        assert!((rat_to_f64(&last.scaled) - 7.0 / 24.0).abs() < 1e-4);
        assert!(accumulation_scan(&rat(3, 2), 0).is_err());
        assert!(accumulation_scan(&rat(3, 1), 3).is_err());
    }

    #[test]
    fn range_and_level_extremes() {
        assert_eq!(coefficient_range(), (rat(1, 6), rat(10, 27)));
        let r = level_range(8).unwrap();
        assert_eq!(r.min, rat(1, 6));
        assert_eq!(r.argmin, pow3(8));
        // Over a whole level x = n/3^ℓ runs through [1, 3); the profile peaks at x = 13/6.
        let peak = level_profile(&rat(13, 6));
        assert_eq!(peak, rat(2197, 5832));
        assert!(r.max <= peak);
        assert!((rat_to_f64(&r.max) - rat_to_f64(&peak)).abs() < 1e-6);
        assert!(rat_to_f64(&r.min) >= 1.0 / 6.0 - 1e-2 && rat_to_f64(&r.max) <= 10.0 / 27.0 + 1e-2);
    }

    proptest! {
        #[test]
        fn scaled_error_bounded(n in 1u64..2_000_000) {
            let scaled = quantization_error(n) * Rat::from_integer((n as u128 * n as u128).into());
            prop_assert!(scaled >= scaled_lower_bound());
            prop_assert!(scaled <= scaled_upper_bound());
        }

        #[test]
        fn scan_converges(num in 0i64..=1000, levels in 8u32..14) {
            let x = rat(1, 1) + rat(num, 1000);
            let rows = accumulation_scan(&x, levels).unwrap();
            let fx = rat_to_f64(&f(&x).unwrap());
            let err = (rat_to_f64(&rows.last().unwrap().scaled) - fx).abs();
            // Truncation moves n by less than 1, so the error is O(3^{-ℓ}).
            prop_assert!(err < 2.0 / pow3(levels) as f64, "err = {}", err);
        }
    }
}
