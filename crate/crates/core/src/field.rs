//! Exact arithmetic in ℚ together with the p-adic valuation.
//!
//! Magnitudes are never turned into real numbers. An absolute value
//! `|x|_p = p^e` is carried around as its exponent `e`, stored doubled so
//! that square roots of magnitudes (half-integer exponents) stay exact.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Largest prime accepted by [`Prime::new`].
pub const MAX_PRIME: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("prime {0} exceeds the supported bound {MAX_PRIME}")]
    PrimeTooLarge(u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot parse rational from {0:?}")]
    Parse(String),
}

/// A rational prime `p`, checked by trial division at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prime(u64);

impl Prime {
    pub fn new(p: u64) -> Result<Self, FieldError> {
        if p > MAX_PRIME {
            return Err(FieldError::PrimeTooLarge(p));
        }
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(Prime(p))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn as_bigint(self) -> BigInt {
        BigInt::from(self.0)
    }

    /// `p^k` as a rational; `k` may be negative.
    pub fn pow(self, k: i64) -> Rational {
        let base = BigInt::from(self.0);
        let magnitude = num_traits::pow(base, k.unsigned_abs() as usize);
        if k >= 0 {
            Rational::from(magnitude)
        } else {
            Rational(BigRational::new(BigInt::one(), magnitude))
        }
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Serialize for Prime {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(self.0)
    }
}

impl<'de> Deserialize<'de> for Prime {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let p = u64::deserialize(d)?;
        Prime::new(p).map_err(serde::de::Error::custom)
    }
}

/// `v_p(n)` for a nonzero integer.
fn int_valuation(n: &BigInt, p: &BigInt) -> i64 {
    debug_assert!(!n.is_zero());
    let mut v = 0;
    let mut m = n.clone();
    loop {
        let (q, r) = m.div_rem(p);
        if !r.is_zero() {
            return v;
        }
        m = q;
        v += 1;
    }
}

/// An element of ℚ, always in lowest terms with a positive denominator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Result<Self, FieldError> {
        let denom = denom.into();
        if denom.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        Ok(Rational(BigRational::new(numer.into(), denom)))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn checked_div(&self, rhs: &Rational) -> Result<Rational, FieldError> {
        if rhs.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        Ok(Rational(&self.0 / &rhs.0))
    }

    pub fn recip(&self) -> Result<Rational, FieldError> {
        Rational::one().checked_div(self)
    }

    pub fn square(&self) -> Rational {
        Rational(&self.0 * &self.0)
    }

    /// `v_p(x)`, or `None` standing for `+∞` when `x = 0`.
    pub fn valuation(&self, p: Prime) -> Option<i64> {
        if self.is_zero() {
            return None;
        }
        let pb = p.as_bigint();
        Some(int_valuation(self.numer(), &pb) - int_valuation(self.denom(), &pb))
    }

    /// Exponent of `|x|_p = p^(-v_p(x))`.
    pub fn abs_exp(&self, p: Prime) -> Exponent {
        match self.valuation(p) {
            None => Exponent::NegInfinity,
            Some(v) => Exponent::from_int(-v),
        }
    }

    /// Ordinary (Archimedean) comparison of two rationals.
    pub fn real_cmp(&self, other: &Rational) -> Ordering {
        self.0.cmp(&other.0)
    }

    /// Checks the canonical-form invariant directly on the stored parts.
    pub fn is_canonical(&self) -> bool {
        self.denom().is_positive() && self.numer().gcd(self.denom()).is_one()
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Rational(BigRational::from_integer(n))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom().is_one() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl FromStr for Rational {
    type Err = FieldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FieldError::Parse(s.to_string());
        let t = s.trim();
        let (n, d) = match t.split_once('/') {
            Some((n, d)) => (n, d),
            None => (t, "1"),
        };
        let numer: BigInt = n.trim().parse().map_err(|_| bad())?;
        let denom: BigInt = d.trim().parse().map_err(|_| bad())?;
        if denom.sign() == Sign::Minus {
            return Err(bad());
        }
        Rational::new(numer, denom)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational($trait::$method(&self.0, &rhs.0))
            }
        }
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational($trait::$method(self.0, rhs.0))
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational($trait::$method(self.0, &rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl std::iter::Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

/// Exponent `e` of a magnitude `p^e`, with `e ∈ ½ℤ ∪ {−∞}`.
///
/// `NegInfinity` is the magnitude of zero. The derived order puts it below
/// every finite exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "lowercase")]
pub enum Exponent {
    #[serde(rename = "neginf")]
    NegInfinity,
    Finite {
        /// `2e`
        twice: i64,
    },
}

impl Exponent {
    pub const ONE: Exponent = Exponent::Finite { twice: 0 };

    pub fn from_int(e: i64) -> Self {
        Exponent::Finite { twice: 2 * e }
    }

    pub fn from_twice(twice: i64) -> Self {
        Exponent::Finite { twice }
    }

    pub fn twice(self) -> Option<i64> {
        match self {
            Exponent::NegInfinity => None,
            Exponent::Finite { twice } => Some(twice),
        }
    }

    pub fn is_zero_magnitude(self) -> bool {
        self == Exponent::NegInfinity
    }

    /// Exponent of a product of magnitudes.
    #[allow(clippy::should_implement_trait)]
    pub fn add(self, other: Exponent) -> Exponent {
        match (self, other) {
            (Exponent::Finite { twice: a }, Exponent::Finite { twice: b }) => {
                Exponent::Finite { twice: a + b }
            }
            _ => Exponent::NegInfinity,
        }
    }

    /// Exponent of a quotient by the nonzero magnitude `other`.
    ///
    /// Panics if `other` is the magnitude of zero.
    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, other: Exponent) -> Exponent {
        let b = other.twice().expect("division by the zero magnitude");
        match self {
            Exponent::NegInfinity => Exponent::NegInfinity,
            Exponent::Finite { twice: a } => Exponent::Finite { twice: a - b },
        }
    }

    /// Exponent of the square root of a magnitude.
    ///
    /// Only integer exponents can be halved; every magnitude fed through
    /// here comes from `abs_exp` of a rational, so this panics otherwise.
    pub fn half(self) -> Exponent {
        match self {
            Exponent::NegInfinity => Exponent::NegInfinity,
            Exponent::Finite { twice } => {
                assert!(twice % 2 == 0, "cannot halve the half-integer exponent {twice}/4");
                Exponent::Finite { twice: twice / 2 }
            }
        }
    }

    pub fn max(self, other: Exponent) -> Exponent {
        std::cmp::max(self, other)
    }

    pub fn le(self, other: Exponent) -> bool {
        self <= other
    }

    /// The magnitude `p^e` as an exact rational, for integer `e`.
    pub fn to_rational(self, p: Prime) -> Option<Rational> {
        match self {
            Exponent::NegInfinity => Some(Rational::zero()),
            Exponent::Finite { twice } if twice % 2 == 0 => Some(p.pow(twice / 2)),
            Exponent::Finite { .. } => None,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Exponent::NegInfinity => f.write_str("-inf"),
            Exponent::Finite { twice } if twice % 2 == 0 => write!(f, "{}", twice / 2),
            Exponent::Finite { twice } => write!(f, "{twice}/2"),
        }
    }
}

/// `v_p(x)`; `None` means `+∞`.
pub fn valuation(x: &Rational, p: Prime) -> Option<i64> {
    x.valuation(p)
}

pub fn abs_exp(x: &Rational, p: Prime) -> Exponent {
    x.abs_exp(p)
}

/// Small helper for tests and samplers that need machine integers back.
pub fn to_i64(x: &Rational) -> Option<i64> {
    if x.denom().is_one() {
        x.numer().to_i64()
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn p(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(valuation(&q("0"), p(5)), None);
        assert_eq!(valuation(&q("1"), p(7)), Some(0));
        assert_eq!(valuation(&q("-48/125"), p(5)), Some(-3));
    }

    #[test]
    fn abs_exp_examples() {
        assert_eq!(abs_exp(&q("0"), p(3)), Exponent::NegInfinity);
        assert_eq!(abs_exp(&q("1/2"), p(2)), Exponent::from_int(1));
        assert_eq!(abs_exp(&q("9"), p(3)), Exponent::from_int(-2));
    }

    #[test]
    fn abs_of_two() {
        assert_eq!(abs_exp(&q("2"), p(2)), Exponent::from_int(-1));
        for odd in [3, 5, 7, 97] {
            assert_eq!(abs_exp(&q("2"), p(odd)), Exponent::ONE);
        }
    }

    #[test]
    fn exponent_algebra() {
        let e = Exponent::from_int;
        assert_eq!(e(1).add(e(-2)), e(-1));
        assert_eq!(e(3).half(), Exponent::from_twice(3));
        assert_eq!(Exponent::NegInfinity.add(e(5)), Exponent::NegInfinity);
        assert!(Exponent::NegInfinity < Exponent::from_twice(-1_000_000));
        assert!(Exponent::from_twice(1) < e(1));
        assert_eq!(e(2).max(Exponent::from_twice(5)), Exponent::from_twice(5));
        assert_eq!(e(0).sub(Exponent::from_twice(-1)), Exponent::from_twice(1));
    }

    #[test]
    #[should_panic]
    fn halving_a_half_integer_panics() {
        Exponent::from_twice(3).half();
    }

    #[test]
    fn arithmetic_examples() {
        assert_eq!(q("9/25") + q("16/25"), q("1"));
        assert_eq!(q("3/5") * q("4/5"), q("12/25"));
        assert_eq!(q("7/3") - q("7/3"), Rational::zero());
        assert_eq!(q("1").checked_div(&q("0")), Err(FieldError::DivisionByZero));
        assert_eq!(q("3/4").checked_div(&q("-9/8")).unwrap(), q("-2/3"));
    }

    #[test]
    fn prime_construction() {
        assert!(Prime::new(97).is_ok());
        assert_eq!(Prime::new(1), Err(FieldError::NotPrime(1)));
        assert_eq!(Prime::new(91), Err(FieldError::NotPrime(91)));
        assert_eq!(Prime::new(1_000_003), Err(FieldError::PrimeTooLarge(1_000_003)));
        assert!(Prime::new(999_983).is_ok());
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(q("6/4"), q("3/2"));
        assert_eq!(q("-6/4").to_string(), "-3/2");
        assert_eq!(q("10/5").to_string(), "2");
        assert!("1/0".parse::<Rational>().is_err());
        assert!("1/-2".parse::<Rational>().is_err());
        assert!("x".parse::<Rational>().is_err());
    }

    #[test]
    fn exponent_json() {
        let s = serde_json::to_string(&Exponent::NegInfinity).unwrap();
        assert_eq!(s, r#"{"tag":"neginf"}"#);
        let s = serde_json::to_string(&Exponent::from_twice(6)).unwrap();
        assert_eq!(s, r#"{"tag":"finite","twice":6}"#);
        let back: Exponent = serde_json::from_str(&s).unwrap();
        assert_eq!(back, Exponent::from_int(3));
    }

    #[test]
    fn magnitude_as_rational() {
        assert_eq!(Exponent::from_int(3).to_rational(p(5)), Some(q("125")));
        assert_eq!(Exponent::from_int(-2).to_rational(p(3)), Some(q("1/9")));
        assert_eq!(Exponent::from_twice(1).to_rational(p(3)), None);
    }
}
