//! Exact rational arithmetic.
//!
//! Every time, slack, ratio, and metric in this crate is a [`Rat`]. Values are
//! kept in lowest terms with a positive denominator, so equality and ordering
//! are exact and tie detection never depends on rounding.
//!
//! Internally a value is either an `i64/i64` fraction or a heap-allocated
//! [`BigRational`]. The small representation covers the verification sweeps
//! (millions of tiny instances) without allocating; arithmetic that would
//! overflow promotes to the big representation, and big results that fit are
//! narrowed back so the representation stays canonical.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, ToBigInt};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

#[derive(Clone, Debug)]
enum Repr {
    Small { num: i64, den: i64 },
    Big(Box<BigRational>),
}

/// An exact rational number, always in lowest terms with denominator > 0.
#[derive(Clone, Debug)]
pub struct Rat(Repr);

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ParseRatError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid rational literal {0:?}")]
    Invalid(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

impl Rat {
    pub fn zero() -> Self {
        Rat(Repr::Small { num: 0, den: 1 })
    }

    pub fn one() -> Self {
        Rat(Repr::Small { num: 1, den: 1 })
    }

    pub fn from_int(n: i64) -> Self {
        Rat(Repr::Small { num: n, den: 1 })
    }

    /// `n/d` reduced to lowest terms. Panics if `d == 0`.
    pub fn new(n: i64, d: i64) -> Self {
        assert!(d != 0, "zero denominator");
        Self::from_i128_frac(n as i128, d as i128)
    }

    fn from_i128_frac(mut num: i128, mut den: i128) -> Self {
        debug_assert!(den != 0);
        if den < 0 {
            num = -num;
            den = -den;
        }
        if num == 0 {
            return Rat::zero();
        }
        let g = num.abs().gcd(&den);
        num /= g;
        den /= g;
        match (i64::try_from(num), i64::try_from(den)) {
            (Ok(n), Ok(d)) => Rat(Repr::Small { num: n, den: d }),
            _ => Rat(Repr::Big(Box::new(BigRational::new(
                BigInt::from(num),
                BigInt::from(den),
            )))),
        }
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Self::from_big(BigRational::from_integer(n))
    }

    fn from_big(b: BigRational) -> Self {
        // BigRational::new already reduces; narrow if it fits.
        if let (Some(n), Some(d)) = (b.numer().to_i64(), b.denom().to_i64()) {
            Rat(Repr::Small { num: n, den: d })
        } else {
            Rat(Repr::Big(Box::new(b)))
        }
    }

    fn small(&self) -> Option<(i64, i64)> {
        match &self.0 {
            Repr::Small { num, den } => Some((*num, *den)),
            Repr::Big(_) => None,
        }
    }

    fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small { num, den } => {
                BigRational::new_raw(BigInt::from(*num), BigInt::from(*den))
            }
            Repr::Big(b) => (**b).clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small { num: 0, .. })
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small { num, .. } => *num < 0,
            Repr::Big(b) => b.is_negative(),
        }
    }

    pub fn is_positive(&self) -> bool {
        match &self.0 {
            Repr::Small { num, .. } => *num > 0,
            Repr::Big(b) => b.is_positive(),
        }
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small { den, .. } => *den == 1,
            Repr::Big(b) => b.is_integer(),
        }
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small { num, .. } => BigInt::from(*num),
            Repr::Big(b) => b.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small { den, .. } => BigInt::from(*den),
            Repr::Big(b) => b.denom().clone(),
        }
    }

    /// Largest integer <= self.
    pub fn floor(&self) -> BigInt {
        match &self.0 {
            Repr::Small { num, den } => BigInt::from(num.div_euclid(*den)),
            Repr::Big(b) => b.floor().to_integer(),
        }
    }

    /// Smallest integer >= self.
    pub fn ceil(&self) -> BigInt {
        match &self.0 {
            Repr::Small { num, den } => {
                BigInt::from(num.div_euclid(*den) + i64::from(num.rem_euclid(*den) != 0))
            }
            Repr::Big(b) => b.ceil().to_integer(),
        }
    }

    pub fn to_i64(&self) -> Option<i64> {
        match &self.0 {
            Repr::Small { num, den: 1 } => Some(*num),
            _ => None,
        }
    }

    pub fn to_u64(&self) -> Option<u64> {
        if self.is_integer() && !self.is_negative() {
            self.numer().to_u64()
        } else {
            None
        }
    }

    pub fn recip(&self) -> Rat {
        assert!(!self.is_zero(), "reciprocal of zero");
        match &self.0 {
            Repr::Small { num, den } => Self::from_i128_frac(*den as i128, *num as i128),
            Repr::Big(b) => Self::from_big(b.recip()),
        }
    }

    pub fn abs(&self) -> Rat {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn min(self, other: Rat) -> Rat {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Rat) -> Rat {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Exact power with integer exponent (negative allowed for nonzero base).
    pub fn pow(&self, exp: i32) -> Rat {
        let mut acc = Rat::one();
        let base = if exp < 0 { self.recip() } else { self.clone() };
        for _ in 0..exp.unsigned_abs() {
            acc = &acc * &base;
        }
        acc
    }
}

impl PartialEq for Rat {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Rat {}

impl PartialOrd for Rat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.small(), other.small()) {
            (Some((n1, d1)), Some((n2, d2))) => {
                // i64 * i64 always fits in i128.
                (n1 as i128 * d2 as i128).cmp(&(n2 as i128 * d1 as i128))
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, |$n1:ident, $d1:ident, $n2:ident, $d2:ident| $small:expr, $big:expr) => {
        impl std::ops::$trait<&Rat> for &Rat {
            type Output = Rat;
            fn $method(self, rhs: &Rat) -> Rat {
                match (self.small(), rhs.small()) {
                    (Some(($n1, $d1)), Some(($n2, $d2))) => {
                        let ($n1, $d1) = ($n1 as i128, $d1 as i128);
                        let ($n2, $d2) = ($n2 as i128, $d2 as i128);
                        $small
                    }
                    _ => {
                        let f: fn(BigRational, BigRational) -> BigRational = $big;
                        Rat::from_big(f(self.to_big(), rhs.to_big()))
                    }
                }
            }
        }
        impl std::ops::$trait<Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                std::ops::$trait::$method(&self, &rhs)
            }
        }
        impl std::ops::$trait<&Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: &Rat) -> Rat {
                std::ops::$trait::$method(&self, rhs)
            }
        }
        impl std::ops::$trait<Rat> for &Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                std::ops::$trait::$method(self, &rhs)
            }
        }
    };
}

binop!(Add, add, |n1, d1, n2, d2| Rat::from_i128_frac(n1 * d2 + n2 * d1, d1 * d2), |a, b| a + b);
binop!(Sub, sub, |n1, d1, n2, d2| Rat::from_i128_frac(n1 * d2 - n2 * d1, d1 * d2), |a, b| a - b);
binop!(Mul, mul, |n1, d1, n2, d2| Rat::from_i128_frac(n1 * n2, d1 * d2), |a, b| a * b);
binop!(Div, div, |n1, d1, n2, d2| {
    assert!(n2 != 0, "division by zero");
    Rat::from_i128_frac(n1 * d2, d1 * n2)
}, |a, b| {
    assert!(!b.is_zero(), "division by zero");
    a / b
});

impl std::ops::Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        match self.small() {
            Some((n, d)) => Rat::from_i128_frac(-(n as i128), d as i128),
            None => Rat::from_big(-self.to_big()),
        }
    }
}
impl std::ops::Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        -&self
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small { num, den: 1 } => write!(f, "{num}"),
            Repr::Small { num, den } => write!(f, "{num}/{den}"),
            Repr::Big(b) if b.is_integer() => write!(f, "{}", b.numer()),
            Repr::Big(b) => write!(f, "{}/{}", b.numer(), b.denom()),
        }
    }
}

impl FromStr for Rat {
    type Err = ParseRatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(ParseRatError::Empty);
        }
        let parse_int = |part: &str| -> Result<BigInt, ParseRatError> {
            BigInt::from_str(part).map_err(|_| ParseRatError::Invalid(s.to_string()))
        };
        match s.split_once('/') {
            None => Ok(Rat::from_big(BigRational::from_integer(parse_int(s)?))),
            Some((num, den)) => {
                let num = parse_int(num)?;
                let den = parse_int(den)?;
                if den.is_zero() {
                    return Err(ParseRatError::ZeroDenominator(s.to_string()));
                }
                Ok(Rat::from_big(BigRational::new(num, den)))
            }
        }
    }
}

impl From<i64> for Rat {
    fn from(n: i64) -> Self {
        Rat::from_int(n)
    }
}

impl From<&BigInt> for Rat {
    fn from(n: &BigInt) -> Self {
        n.to_i64()
            .map(Rat::from_int)
            .unwrap_or_else(|| Rat::from_bigint(n.to_bigint().unwrap()))
    }
}

impl serde::Serialize for Rat {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Rat {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Rat;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a rational as a string, e.g. \"7\" or \"20/19\"")
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Rat, E> {
                v.parse().map_err(E::custom)
            }
        }
        deserializer.deserialize_str(V)
    }
}

/// Shorthand used heavily in tests: `rat(20, 19)`.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalization() {
        assert_eq!(rat(2, 4), rat(1, 2));
        assert_eq!(rat(-2, -4), rat(1, 2));
        assert_eq!(rat(2, -4), rat(-1, 2));
        assert_eq!(rat(0, -7), Rat::zero());
        assert_eq!(rat(6, 3).to_string(), "2");
        assert_eq!(rat(-20, 19).to_string(), "-20/19");
    }

    #[test]
    fn parse_round_trip() {
        for s in ["0", "7", "-3", "20/19", "-20/19", "1000000000000000000000000000001/7"] {
            let r: Rat = s.parse().unwrap();
            assert_eq!(r.to_string(), s);
        }
        assert_eq!("4/2".parse::<Rat>().unwrap().to_string(), "2");
        assert!("1/0".parse::<Rat>().is_err());
        assert!("".parse::<Rat>().is_err());
        assert!("1.5".parse::<Rat>().is_err());
    }

    #[test]
    fn overflow_promotes_and_narrows() {
        let big = Rat::from_int(i64::MAX);
        let sq = &big * &big;
        assert_eq!(sq.to_string(), "85070591730234615847396907784232501249");
        // Dividing back narrows to the small representation again.
        let back = &sq / &big;
        assert_eq!(back, big);
        assert!(back.small().is_some());
    }

    #[test]
    fn floor_ceil() {
        assert_eq!(rat(7, 2).floor(), BigInt::from(3));
        assert_eq!(rat(7, 2).ceil(), BigInt::from(4));
        assert_eq!(rat(-7, 2).floor(), BigInt::from(-4));
        assert_eq!(rat(-7, 2).ceil(), BigInt::from(-3));
        assert_eq!(rat(6, 2).ceil(), BigInt::from(3));
    }

    #[test]
    fn pow_and_recip() {
        assert_eq!(rat(2, 3).pow(3), rat(8, 27));
        assert_eq!(rat(2, 3).pow(-2), rat(9, 4));
        assert_eq!(rat(5, 7).recip(), rat(7, 5));
    }

    fn arb_rat() -> impl Strategy<Value = Rat> {
        (any::<i64>(), 1..=i64::MAX).prop_map(|(n, d)| Rat::new(n % 1_000_000_007, d))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn add_sub_exact(x in arb_rat(), y in arb_rat()) {
            prop_assert_eq!(&(&x + &y) - &y, x);
        }

        #[test]
        fn mul_div_exact(x in arb_rat(), y in arb_rat()) {
            prop_assume!(!y.is_zero());
            prop_assert_eq!(&(&x * &y) / &y, x);
        }

        #[test]
        fn display_parse_identity(x in arb_rat()) {
            let s = x.to_string();
            prop_assert_eq!(s.parse::<Rat>().unwrap(), x);
        }

        #[test]
        fn ordering_consistent_with_sub(x in arb_rat(), y in arb_rat()) {
            let diff = &x - &y;
            prop_assert_eq!(x.cmp(&y), diff.cmp(&Rat::zero()));
        }
    }
}
