//! Exact arithmetic in ℚ and ℚ(√3).
//!
//! Every coordinate that shows up in the R-triangle constructions is of the form
//! `a + b√3` with rational `a`, `b`, so centroids, squared distances and
//! quantization errors can all be carried without rounding. Comparisons are
//! decided exactly from the signs of the rational parts.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;

/// Arbitrary-precision rational, always stored reduced with a positive denominator.
pub type Rat = BigRational;

/// Builds the rational `num / den`. Panics if `den` is zero.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Builds an integer-valued rational.
pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, `"p"` or a plain decimal such as `"-1.25"` into an exact rational.
pub fn parse_rat(s: &str) -> Result<Rat, Error> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if s.contains('/') || frac.is_empty() || !frac.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
        if digits.is_empty() || !digits.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let mag = BigInt::from_str(&digits).map_err(|_| bad())?;
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        let r = Rat::new(mag, den);
        return Ok(if negative { -r } else { r });
    }
    let r = Rat::from_str(s.trim_start_matches('+')).map_err(|_| bad())?;
    Ok(r)
}

/// Conversion of a rational to the nearest `f64`, robust for huge numerators and denominators.
pub fn rat_to_f64(r: &Rat) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // Shift both sides down to 64 significant bits.
    let n_bits = r.numer().bits() as i64;
    let d_bits = r.denom().bits() as i64;
    let shift_n = (n_bits - 64).max(0);
    let shift_d = (d_bits - 64).max(0);
    let n = (r.numer() >> shift_n as usize).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift_d as usize).to_f64().unwrap_or(1.0);
    n / d * 2f64.powi((shift_n - shift_d) as i32)
}

/// Natural logarithm of a positive rational, valid far outside the `f64` range.
pub fn rat_ln(r: &Rat) -> f64 {
    assert!(r.is_positive(), "logarithm of a non-positive rational");
    big_ln(r.numer()) - big_ln(r.denom())
}

fn big_ln(n: &BigInt) -> f64 {
    let bits = n.bits() as i64;
    let shift = (bits - 60).max(0);
    let top = (n >> shift as usize).to_f64().unwrap_or(1.0);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// An element `a + b√3` of the real quadratic field ℚ(√3).
///
/// The pair `(a, b)` is unique for each field element, so the derived
/// equality is the field equality.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct QuadNum {
    a: Rat,
    b: Rat,
}

impl QuadNum {
    pub fn new(a: Rat, b: Rat) -> Self {
        QuadNum { a, b }
    }

    pub fn zero() -> Self {
        QuadNum::default()
    }

    pub fn one() -> Self {
        QuadNum::from_rat(Rat::one())
    }

    pub fn from_rat(a: Rat) -> Self {
        QuadNum { a, b: Rat::zero() }
    }

    /// `b√3`.
    pub fn sqrt3_times(b: Rat) -> Self {
        QuadNum { a: Rat::zero(), b }
    }

    /// Rational part.
    pub fn rational(&self) -> &Rat {
        &self.a
    }

    /// Coefficient of √3.
    pub fn surd(&self) -> &Rat {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    /// The rational value, if the √3 part vanishes.
    pub fn as_rat(&self) -> Option<&Rat> {
        self.is_rational().then_some(&self.a)
    }

    /// `a - b√3`, the Galois conjugate.
    pub fn conjugate(&self) -> Self {
        QuadNum {
            a: self.a.clone(),
            b: -self.b.clone(),
        }
    }

    /// Field norm `a² - 3b²`.
    pub fn norm(&self) -> Rat {
        &self.a * &self.a - int(3) * &self.b * &self.b
    }

    pub fn scale(&self, k: &Rat) -> Self {
        QuadNum {
            a: &self.a * k,
            b: &self.b * k,
        }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = self.norm();
        Some(QuadNum {
            a: &self.a / &n,
            b: -(&self.b / &n),
        })
    }

    /// Sign under the real embedding √3 ≈ 1.732, decided exactly.
    pub fn signum(&self) -> Ordering {
        let sa = sign_of(&self.a);
        let sb = sign_of(&self.b);
        match (sa, sb) {
            (s, Ordering::Equal) | (Ordering::Equal, s) => s,
            (x, y) if x == y => x,
            // Opposite signs: compare a² with 3b².
            (sa, _) => {
                let a2 = &self.a * &self.a;
                let b2 = int(3) * &self.b * &self.b;
                match a2.cmp(&b2) {
                    Ordering::Greater => sa,
                    Ordering::Less => sa.reverse(),
                    Ordering::Equal => Ordering::Equal,
                }
            }
        }
    }

    pub fn is_negative(&self) -> bool {
        self.signum() == Ordering::Less
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    /// Nearest-ish `f64`; cancellation between the parts is avoided through the conjugate.
    pub fn to_f64(&self) -> f64 {
        let a = rat_to_f64(&self.a);
        let b = rat_to_f64(&self.b) * SQRT_3;
        if self.a.is_zero() || self.b.is_zero() || (a >= 0.0) == (b >= 0.0) {
            return a + b;
        }
        // a + b√3 = (a² - 3b²) / (a - b√3)
        let denom = a - b;
        rat_to_f64(&self.norm()) / denom
    }

    /// Floor of the real value.
    pub fn floor(&self) -> BigInt {
        // Write the number as (A + B√3) / D with integers A, B and D > 0.
        let d = self.a.denom().lcm(self.b.denom());
        let big_a = self.a.numer() * (&d / self.a.denom());
        let big_b = self.b.numer() * (&d / self.b.denom());
        if big_b.is_zero() {
            return big_a.div_floor(&d);
        }
        // t = floor(sqrt(3 B²)); the root is irrational, so it lies strictly in (t, t + 1).
        let t = (BigInt::from(3) * &big_b * &big_b).sqrt();
        if big_b.is_positive() {
            (big_a + t).div_floor(&d)
        } else {
            (big_a - t - BigInt::one()).div_floor(&d)
        }
    }

    /// Decimal string rounded half away from zero to `places` digits after the point.
    pub fn to_decimal_string(&self, places: usize) -> String {
        let negative = self.is_negative();
        let mag = self.abs();
        let scale = Rat::from_integer(BigInt::from(10u32).pow(places as u32));
        let scaled = mag.scale(&scale);
        let mut m = scaled.floor();
        let frac = &scaled - &QuadNum::from_rat(Rat::from_integer(m.clone()));
        if frac >= QuadNum::from_rat(rat(1, 2)) {
            m += 1;
        }
        let digits = m.to_string();
        let body = if places == 0 {
            digits
        } else {
            let padded = format!("{:0>width$}", digits, width = places + 1);
            let (int_part, frac_part) = padded.split_at(padded.len() - places);
            format!("{int_part}.{frac_part}")
        };
        if negative && body.bytes().any(|c| matches!(c, b'1'..=b'9')) {
            format!("-{body}")
        } else {
            body
        }
    }

    /// Value correctly rounded to `precision` decimal places, returned as a float.
    pub fn to_float(&self, precision: usize) -> f64 {
        assert!(precision >= 1, "precision must be at least one digit");
        self.to_decimal_string(precision)
            .parse()
            .expect("decimal string always parses")
    }
}

const SQRT_3: f64 = 1.732_050_807_568_877_2;

fn sign_of(r: &Rat) -> Ordering {
    match r.numer().sign() {
        Sign::Minus => Ordering::Less,
        Sign::NoSign => Ordering::Equal,
        Sign::Plus => Ordering::Greater,
    }
}

impl From<Rat> for QuadNum {
    fn from(a: Rat) -> Self {
        QuadNum::from_rat(a)
    }
}

impl From<i64> for QuadNum {
    fn from(n: i64) -> Self {
        QuadNum::from_rat(int(n))
    }
}

impl PartialOrd for QuadNum {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QuadNum {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum()
    }
}

/// Three-way comparison under the real embedding.
pub fn quad_cmp(u: &QuadNum, v: &QuadNum) -> Ordering {
    u.cmp(v)
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl<'a, 'b> $trait<&'b QuadNum> for &'a QuadNum {
            type Output = QuadNum;
            fn $method(self, rhs: &'b QuadNum) -> QuadNum {
                let f: fn(&QuadNum, &QuadNum) -> QuadNum = $body;
                f(self, rhs)
            }
        }
        impl $trait<QuadNum> for QuadNum {
            type Output = QuadNum;
            fn $method(self, rhs: QuadNum) -> QuadNum {
                (&self).$method(&rhs)
            }
        }
        impl<'b> $trait<&'b QuadNum> for QuadNum {
            type Output = QuadNum;
            fn $method(self, rhs: &'b QuadNum) -> QuadNum {
                (&self).$method(rhs)
            }
        }
        impl<'a> $trait<QuadNum> for &'a QuadNum {
            type Output = QuadNum;
            fn $method(self, rhs: QuadNum) -> QuadNum {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, |u, v| QuadNum {
    a: &u.a + &v.a,
    b: &u.b + &v.b,
});
forward_binop!(Sub, sub, |u, v| QuadNum {
    a: &u.a - &v.a,
    b: &u.b - &v.b,
});
forward_binop!(Mul, mul, |u, v| QuadNum {
    a: &u.a * &v.a + int(3) * &u.b * &v.b,
    b: &u.a * &v.b + &u.b * &v.a,
});
forward_binop!(Div, div, |u, v| u * v.recip().expect("division by zero in ℚ(√3)"));

impl Neg for QuadNum {
    type Output = QuadNum;
    fn neg(self) -> QuadNum {
        QuadNum { a: -self.a, b: -self.b }
    }
}

impl Neg for &QuadNum {
    type Output = QuadNum;
    fn neg(self) -> QuadNum {
        -self.clone()
    }
}

impl AddAssign<&QuadNum> for QuadNum {
    fn add_assign(&mut self, rhs: &QuadNum) {
        self.a += &rhs.a;
        self.b += &rhs.b;
    }
}

impl AddAssign for QuadNum {
    fn add_assign(&mut self, rhs: QuadNum) {
        *self += &rhs;
    }
}

impl SubAssign<&QuadNum> for QuadNum {
    fn sub_assign(&mut self, rhs: &QuadNum) {
        self.a -= &rhs.a;
        self.b -= &rhs.b;
    }
}

impl std::iter::Sum for QuadNum {
    fn sum<I: Iterator<Item = QuadNum>>(iter: I) -> Self {
        iter.fold(QuadNum::zero(), |acc, x| acc + x)
    }
}

impl fmt::Display for QuadNum {
    /// `p/q`, `r/s√3` or `p/q + r/s√3`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a.is_zero(), self.b.is_zero()) {
            (_, true) => write!(f, "{}", self.a),
            (true, false) => write!(f, "{}√3", self.b),
            (false, false) if self.b.is_negative() => write!(f, "{} - {}√3", self.a, -&self.b),
            (false, false) => write!(f, "{} + {}√3", self.a, self.b),
        }
    }
}

impl FromStr for QuadNum {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        let Some(body) = s.strip_suffix("√3") else {
            return Ok(QuadNum::from_rat(parse_rat(s)?));
        };
        let body = body.trim_end();
        // The separator is the last binary '+'/'-' that is not a leading sign.
        let split = body
            .char_indices()
            .filter(|&(i, c)| i > 0 && (c == '+' || c == '-'))
            .filter(|&(i, _)| !body[..i].trim_end().ends_with('/'))
            .map(|(i, _)| i)
            .next_back();
        match split {
            Some(i) => {
                let a = parse_rat(&body[..i])?;
                let sign = &body[i..i + 1];
                let b = parse_rat(body[i + 1..].trim())?;
                Ok(QuadNum::new(a, if sign == "-" { -b } else { b }))
            }
            None => Ok(QuadNum::sqrt3_times(parse_rat(body)?)),
        }
    }
}

/// A point of the plane with coordinates in ℚ(√3).
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default, PartialOrd, Ord)]
pub struct PointQ {
    pub x: QuadNum,
    pub y: QuadNum,
}

impl PointQ {
    pub fn new(x: QuadNum, y: QuadNum) -> Self {
        PointQ { x, y }
    }

    pub fn origin() -> Self {
        PointQ::default()
    }

    pub fn add(&self, other: &PointQ) -> PointQ {
        PointQ::new(&self.x + &other.x, &self.y + &other.y)
    }

    pub fn sub(&self, other: &PointQ) -> PointQ {
        PointQ::new(&self.x - &other.x, &self.y - &other.y)
    }

    pub fn scale(&self, k: &Rat) -> PointQ {
        PointQ::new(self.x.scale(k), self.y.scale(k))
    }

    pub fn scale_q(&self, k: &QuadNum) -> PointQ {
        PointQ::new(&self.x * k, &self.y * k)
    }

    pub fn dot(&self, other: &PointQ) -> QuadNum {
        &self.x * &other.x + &self.y * &other.y
    }

    pub fn norm_sq(&self) -> QuadNum {
        self.dot(self)
    }

    pub fn dist_sq(&self, other: &PointQ) -> QuadNum {
        self.sub(other).norm_sq()
    }

    pub fn to_f64(&self) -> [f64; 2] {
        [self.x.to_f64(), self.y.to_f64()]
    }
}

impl fmt::Display for PointQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(a: (i64, i64), b: (i64, i64)) -> QuadNum {
        QuadNum::new(rat(a.0, a.1), rat(b.0, b.1))
    }

    #[test]
    fn multiplication_expands() {
        let u = q((1, 1), (1, 1));
        assert_eq!(&u * &u, q((4, 1), (2, 1)));
        let s = QuadNum::sqrt3_times(rat(1, 6));
        assert_eq!(&s * &s, QuadNum::from_rat(rat(1, 12)));
    }

    #[test]
    fn additive_inverse() {
        let u = q((-7, 3), (5, 11));
        assert!((&u + &(-&u)).is_zero());
    }

    #[test]
    fn comparisons() {
        assert_eq!(
            quad_cmp(&QuadNum::sqrt3_times(int(1)), &QuadNum::from_rat(rat(7, 4))),
            Ordering::Less
        );
        let u = q((2, 1), (-1, 1));
        assert_eq!(quad_cmp(&u, &u), Ordering::Equal);
        assert_eq!(quad_cmp(&u, &QuadNum::zero()), Ordering::Greater);
        assert_eq!(q((-2, 1), (1, 1)).signum(), Ordering::Less);
    }

    #[test]
    fn division_and_inverse() {
        let u = q((2, 1), (-1, 1));
        let inv = u.recip().unwrap();
        assert_eq!(&u * &inv, QuadNum::one());
        // 1 / (2 - √3) = 2 + √3
        assert_eq!(inv, q((2, 1), (1, 1)));
        assert!(QuadNum::zero().recip().is_none());
    }

    #[test]
    fn rounding_to_decimal_places() {
        assert_eq!(QuadNum::from_rat(rat(5, 54)).to_float(7), 0.0925926);
        assert_eq!(QuadNum::from_rat(rat(1, 54)).to_float(7), 0.0185185);
        assert_eq!(QuadNum::zero().to_float(7), 0.0);
        assert_eq!(QuadNum::sqrt3_times(int(1)).to_decimal_string(10), "1.7320508076");
        assert_eq!(q((-1, 1), (0, 1)).to_decimal_string(2), "-1.00");
        assert_eq!(q((2, 1), (-1, 1)).to_decimal_string(5), "0.26795");
        assert_eq!(QuadNum::sqrt3_times(int(-1)).to_decimal_string(3), "-1.732");
        assert_eq!(QuadNum::from_rat(rat(-1, 1000)).to_decimal_string(2), "0.00");
    }

    #[test]
    fn floor_of_surds() {
        assert_eq!(QuadNum::sqrt3_times(int(1)).floor(), BigInt::from(1));
        assert_eq!(QuadNum::sqrt3_times(int(-1)).floor(), BigInt::from(-2));
        assert_eq!(q((7, 2), (0, 1)).floor(), BigInt::from(3));
        assert_eq!(q((-7, 2), (0, 1)).floor(), BigInt::from(-4));
        assert_eq!(q((2, 1), (-1, 1)).floor(), BigInt::from(0));
    }

    #[test]
    fn display_and_parse() {
        for (u, s) in [
            (q((5, 54), (0, 1)), "5/54"),
            (q((0, 1), (7, 18)), "7/18√3"),
            (q((1, 2), (-1, 6)), "1/2 - 1/6√3"),
            (q((-1, 2), (1, 6)), "-1/2 + 1/6√3"),
            (q((0, 1), (-1, 3)), "-1/3√3"),
        ] {
            assert_eq!(u.to_string(), s);
            assert_eq!(s.parse::<QuadNum>().unwrap(), u);
        }
        assert!("1/0".parse::<QuadNum>().is_err());
        assert!("abc√3".parse::<QuadNum>().is_err());
    }

    #[test]
    fn parse_rationals() {
        assert_eq!(parse_rat("1.25").unwrap(), rat(5, 4));
        assert_eq!(parse_rat("-0.5").unwrap(), rat(-1, 2));
        assert_eq!(parse_rat(" 3/6 ").unwrap(), rat(1, 2));
        assert_eq!(parse_rat("+2").unwrap(), int(2));
        assert!(parse_rat("").is_err());
        assert!(parse_rat("1.").is_err());
        assert!(parse_rat("1/2.5").is_err());
    }

    #[test]
    fn huge_rationals_convert() {
        let big = Rat::new(BigInt::from(1), BigInt::from(27u32).pow(400));
        let v = rat_to_f64(&big);
        assert!(v == 0.0 || v.is_finite());
        let l = rat_ln(&big);
        assert!((l + 400.0 * 27f64.ln()).abs() < 1e-9);
    }

    fn small_rat() -> impl Strategy<Value = Rat> {
        (-60i64..60, 1i64..40).prop_map(|(n, d)| rat(n, d))
    }

    fn quad() -> impl Strategy<Value = QuadNum> {
        (small_rat(), small_rat()).prop_map(|(a, b)| QuadNum::new(a, b))
    }

    proptest! {
        #[test]
        fn field_axioms(u in quad(), v in quad(), w in quad()) {
            prop_assert_eq!(&u + &v, &v + &u);
            prop_assert_eq!(&u * &v, &v * &u);
            prop_assert_eq!(&(&u + &v) + &w, &u + &(&v + &w));
            prop_assert_eq!(&(&u * &v) * &w, &u * &(&v * &w));
            prop_assert_eq!(&u * &(&v + &w), &(&u * &v) + &(&u * &w));
            if !v.is_zero() {
                prop_assert_eq!(&(&u / &v) * &v, u.clone());
            }
        }

        #[test]
        fn ordering_matches_floats(u in quad(), v in quad()) {
            let gap = u.to_f64() - v.to_f64();
            if gap.abs() > 1e-12 {
                let expected = if gap > 0.0 { Ordering::Greater } else { Ordering::Less };
                prop_assert_eq!(quad_cmp(&u, &v), expected);
            }
        }

        #[test]
        fn ordering_is_total(u in quad(), v in quad(), w in quad()) {
            prop_assert_eq!(quad_cmp(&u, &v), quad_cmp(&v, &u).reverse());
            if u <= v && v <= w {
                prop_assert!(u <= w);
            }
            prop_assert_eq!(quad_cmp(&u, &v), quad_cmp(&(&u + &w), &(&v + &w)));
        }

        #[test]
        fn display_round_trips(u in quad()) {
            prop_assert_eq!(u.to_string().parse::<QuadNum>().unwrap(), u);
        }

        #[test]
        fn decimal_rounding_is_within_half_ulp(u in quad()) {
            let s = u.to_decimal_string(9);
            let parsed = QuadNum::from_rat(parse_rat(&s).unwrap());
            let err = (&parsed - &u).abs();
            prop_assert!(err <= QuadNum::from_rat(rat(1, 2_000_000_000)));
        }
    }
}
