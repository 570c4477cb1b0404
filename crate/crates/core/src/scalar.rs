//! Dual-mode arithmetic.
//!
//! Every numerical routine in the crate is generic over [`Scalar`]. Two
//! implementations are provided: `f64` for speed, and [`Exact`], an element
//! of the field Q(√2) with arbitrary-precision rational coordinates. The
//! orthonormal Walsh transform introduces powers of 2^{-1/2}; Q(√2) is the
//! smallest field closed under those, so exact mode never loses precision.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Arithmetic used by all operators.
pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + for<'a> MulAssign<&'a Self>
{
    /// True when arithmetic is exact.
    const EXACT: bool;

    fn from_rational(r: &Rational) -> Self;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rational(&Rational::new(num.into(), den.into()))
    }

    fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    fn mul_ref(&self, rhs: &Self) -> Self;

    /// `self * 2^(half_exp / 2)`.
    fn scale_sqrt2(&self, half_exp: i32) -> Self;

    fn to_f64(&self) -> f64;

    /// The rational value, if the number is rational. Always `None` for floats.
    fn to_rational(&self) -> Option<Rational>;

    fn is_negative(&self) -> bool {
        *self < Self::zero()
    }

    fn abs(&self) -> Self {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Equality up to `tol` in absolute value. With `tol == 0` exact
    /// scalars compare structurally.
    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if tol == 0.0 {
            return self == other;
        }
        (self.clone() - other.clone()).abs().to_f64() <= tol
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }

    fn mul_ref(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn scale_sqrt2(&self, half_exp: i32) -> Self {
        let mut v = self * 2f64.powi(half_exp.div_euclid(2));
        if half_exp.rem_euclid(2) == 1 {
            v *= std::f64::consts::SQRT_2;
        }
        v
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_rational(&self) -> Option<Rational> {
        None
    }

    fn is_negative(&self) -> bool {
        *self < 0.0
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }
}

pub(crate) fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Ratio::to_f64 only fails when both parts overflow f64.
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// An exact number `rational + irrational·√2`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Exact {
    rational: Rational,
    irrational: Rational,
}

impl Exact {
    pub fn new(rational: Rational, irrational: Rational) -> Self {
        Exact {
            rational,
            irrational,
        }
    }

    pub fn rational_part(&self) -> &Rational {
        &self.rational
    }

    pub fn sqrt2_part(&self) -> &Rational {
        &self.irrational
    }

    pub fn is_rational(&self) -> bool {
        self.irrational.is_zero()
    }

    fn signum(&self) -> Ordering {
        let a = self.rational.cmp(&Rational::zero());
        let b = self.irrational.cmp(&Rational::zero());
        match (a, b) {
            (Ordering::Equal, s) | (s, Ordering::Equal) => s,
            (x, y) if x == y => x,
            _ => {
                // opposite signs: the larger magnitude wins; compare a^2 with 2 b^2
                let a2 = &self.rational * &self.rational;
                let b2 = &self.irrational * &self.irrational * Rational::from_integer(2.into());
                if a2 > b2 {
                    a
                } else {
                    b
                }
            }
        }
    }

    fn mul_sqrt2(&self) -> Self {
        Exact {
            rational: &self.irrational * Rational::from_integer(2.into()),
            irrational: self.rational.clone(),
        }
    }
}

fn mul_parts(x: &Rational, y: &Rational) -> Rational {
    if x.is_zero() || y.is_zero() {
        Rational::zero()
    } else {
        x * y
    }
}

impl From<Rational> for Exact {
    fn from(r: Rational) -> Self {
        Exact::new(r, Rational::zero())
    }
}

impl From<i64> for Exact {
    fn from(n: i64) -> Self {
        Exact::from(Rational::from_integer(n.into()))
    }
}

impl Zero for Exact {
    fn zero() -> Self {
        Exact::default()
    }

    fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.irrational.is_zero()
    }
}

impl One for Exact {
    fn one() -> Self {
        Exact::from(Rational::one())
    }
}

impl Add for Exact {
    type Output = Exact;
    fn add(mut self, rhs: Exact) -> Exact {
        self += &rhs;
        self
    }
}

impl Sub for Exact {
    type Output = Exact;
    fn sub(mut self, rhs: Exact) -> Exact {
        self -= &rhs;
        self
    }
}

impl<'a> AddAssign<&'a Exact> for Exact {
    fn add_assign(&mut self, rhs: &'a Exact) {
        if !rhs.rational.is_zero() {
            self.rational += &rhs.rational;
        }
        if !rhs.irrational.is_zero() {
            self.irrational += &rhs.irrational;
        }
    }
}

impl<'a> SubAssign<&'a Exact> for Exact {
    fn sub_assign(&mut self, rhs: &'a Exact) {
        if !rhs.rational.is_zero() {
            self.rational -= &rhs.rational;
        }
        if !rhs.irrational.is_zero() {
            self.irrational -= &rhs.irrational;
        }
    }
}

impl<'a> Mul<&'a Exact> for &'a Exact {
    type Output = Exact;
    fn mul(self, rhs: &'a Exact) -> Exact {
        let two = Rational::from_integer(2.into());
        let aa = mul_parts(&self.rational, &rhs.rational);
        let bb = mul_parts(&self.irrational, &rhs.irrational);
        let ab = mul_parts(&self.rational, &rhs.irrational);
        let ba = mul_parts(&self.irrational, &rhs.rational);
        let rational = if bb.is_zero() { aa } else { aa + bb * two };
        Exact {
            rational,
            irrational: ab + ba,
        }
    }
}

impl Mul for Exact {
    type Output = Exact;
    fn mul(self, rhs: Exact) -> Exact {
        &self * &rhs
    }
}

impl<'a> MulAssign<&'a Exact> for Exact {
    fn mul_assign(&mut self, rhs: &'a Exact) {
        *self = &*self * rhs;
    }
}

impl Div for Exact {
    type Output = Exact;
    fn div(self, rhs: Exact) -> Exact {
        assert!(!rhs.is_zero(), "division by zero");
        // multiply by the conjugate a - b√2 over the norm a² - 2b²
        let norm = &rhs.rational * &rhs.rational
            - &rhs.irrational * &rhs.irrational * Rational::from_integer(2.into());
        let conj = Exact::new(rhs.rational.clone(), -rhs.irrational.clone());
        let num = &self * &conj;
        Exact::new(num.rational / &norm, num.irrational / &norm)
    }
}

impl Neg for Exact {
    type Output = Exact;
    fn neg(self) -> Exact {
        Exact::new(-self.rational, -self.irrational)
    }
}

impl PartialOrd for Exact {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Exact {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.clone() - other.clone()).signum()
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.rational.is_zero(), self.irrational.is_zero()) {
            (_, true) => write!(f, "{}", self.rational),
            (true, false) => write!(f, "{}*sqrt2", self.irrational),
            (false, false) => {
                let sign = if self.irrational.is_negative() {
                    '-'
                } else {
                    '+'
                };
                write!(
                    f,
                    "{}{}{}*sqrt2",
                    self.rational,
                    sign,
                    self.irrational.abs()
                )
            }
        }
    }
}

impl fmt::Debug for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Scalar for Exact {
    const EXACT: bool = true;

    fn from_rational(r: &Rational) -> Self {
        Exact::from(r.clone())
    }

    fn mul_ref(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn scale_sqrt2(&self, half_exp: i32) -> Self {
        let whole = half_exp.div_euclid(2);
        let pow = if whole >= 0 {
            Rational::from_integer(BigInt::one() << whole as usize)
        } else {
            Rational::new(BigInt::one(), BigInt::one() << (-whole) as usize)
        };
        let scaled = Exact::new(
            mul_parts(&self.rational, &pow),
            mul_parts(&self.irrational, &pow),
        );
        if half_exp.rem_euclid(2) == 1 {
            scaled.mul_sqrt2()
        } else {
            scaled
        }
    }

    fn to_f64(&self) -> f64 {
        rational_to_f64(&self.rational)
            + rational_to_f64(&self.irrational) * std::f64::consts::SQRT_2
    }

    fn to_rational(&self) -> Option<Rational> {
        self.is_rational().then(|| self.rational.clone())
    }

    fn is_negative(&self) -> bool {
        self.signum() == Ordering::Less
    }
}

/// Parses `p/q`, an integer, or a decimal such as `0.125` or `1e-3` into an
/// exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::Parse(format!("not a rational number: {text:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(BigInt::from_str(&digits).map_err(|_| bad())?);
    let shift = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    if shift >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, shift as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-shift) as usize));
    }
    Ok(if negative { -value } else { value })
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(n: i64, d: i64) -> Exact {
        Exact::from_ratio(n, d)
    }

    #[test]
    fn sqrt2_scaling_round_trips() {
        let x = ex(3, 7);
        let down = x.scale_sqrt2(-3);
        assert!(!down.is_rational());
        assert_eq!(down.scale_sqrt2(3), x);
        assert_eq!(x.scale_sqrt2(2), ex(6, 7));
        assert_eq!(x.scale_sqrt2(-1).mul_ref(&x.scale_sqrt2(-1)), ex(9, 98));
    }

    #[test]
    fn sign_of_mixed_elements() {
        // 3 - 2√2 ≈ 0.17 > 0, 1 - √2 < 0
        assert!(!Exact::new(ratio(3, 1), ratio(-2, 1)).is_negative());
        assert!(Exact::new(ratio(1, 1), ratio(-1, 1)).is_negative());
        assert!(Exact::new(ratio(-3, 1), ratio(3, 1)) > Exact::zero());
        assert!(ex(1, 3) < ex(1, 2));
    }

    #[test]
    fn division_by_irrational() {
        let s = Exact::new(ratio(0, 1), ratio(1, 1));
        let r = Exact::one() / s.clone();
        assert_eq!(r.mul_ref(&s), Exact::one());
        assert_eq!(r, Exact::new(ratio(0, 1), ratio(1, 2)));
    }

    #[test]
    fn display_forms() {
        assert_eq!(ex(7, 20).to_string(), "7/20");
        assert_eq!(ex(4, 2).to_string(), "2");
        assert_eq!(
            Exact::new(ratio(1, 2), ratio(-3, 4)).to_string(),
            "1/2-3/4*sqrt2"
        );
    }

    #[test]
    fn float_scaling() {
        assert!((1.0f64.scale_sqrt2(-1) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(3.0f64.scale_sqrt2(-4), 0.75);
    }

    #[test]
    fn parses_rationals() {
        assert_eq!(parse_rational("7/20").unwrap(), ratio(7, 20));
        assert_eq!(parse_rational(" 0.125 ").unwrap(), ratio(1, 8));
        assert_eq!(parse_rational("-3").unwrap(), ratio(-3, 1));
        assert_eq!(parse_rational("1e-3").unwrap(), ratio(1, 1000));
        assert_eq!(parse_rational("2.5E1").unwrap(), ratio(25, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational(".").is_err());
    }
}
