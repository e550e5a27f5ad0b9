//! Exact rational numbers.
//!
//! Every flow, delay, mass and bound in this crate is a [`Rational`]. Values
//! whose numerator fits an `i64` and denominator fits a `u64` are stored
//! inline and combined through 128-bit intermediates; anything larger spills
//! to `num-bigint`. The representation is canonical (a value that fits the
//! inline form is never boxed), so structural equality is value equality.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use core::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;

#[derive(Clone, PartialEq, Eq, Hash)]
enum Repr {
    /// Normalized, `den > 0`, `num != i64::MIN`.
    Small(i64, u64),
    /// Normalized and out of range for `Small`.
    Big(Box<(BigInt, BigUint)>),
}

/// An exact fraction in lowest terms with a positive denominator.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Rational(Repr);

/// Shared zero, handy for lookups that return references.
pub static ZERO: Rational = Rational(Repr::Small(0, 1));
/// Shared one.
pub static ONE: Rational = Rational(Repr::Small(1, 1));

fn gcd_u128(a: u128, b: u128) -> u128 {
    a.gcd(&b)
}

impl Rational {
    pub const fn zero() -> Self {
        Rational(Repr::Small(0, 1))
    }

    pub const fn one() -> Self {
        Rational(Repr::Small(1, 1))
    }

    /// Builds `num/den` in normal form.
    pub fn new(num: i64, den: i64) -> Result<Self, Error> {
        if den == 0 {
            return Err(Error::ZeroDenominator);
        }
        let (mut n, mut d) = (num as i128, den as i128);
        if d < 0 {
            n = -n;
            d = -d;
        }
        Ok(Self::from_i128_parts(n, d as u128))
    }

    /// Builds `num/den` from arbitrary-precision parts.
    pub fn from_big(num: BigInt, den: BigInt) -> Result<Self, Error> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        let (num, den) = if den.is_negative() { (-num, -den) } else { (num, den) };
        let den = den.magnitude().clone();
        Ok(Self::normalize_big(num, den))
    }

    pub fn from_integer(n: i64) -> Self {
        Self::from_i128_parts(n as i128, 1)
    }

    /// `1/k` for a positive integer `k`.
    pub fn reciprocal_of(k: u64) -> Self {
        assert!(k > 0, "reciprocal of zero");
        Self::from_i128_parts(1, k as u128)
    }

    /// `2^(-k)`.
    pub fn pow2_neg(k: u64) -> Self {
        if k < 64 {
            Rational(Repr::Small(1, 1u64 << k))
        } else {
            Rational(Repr::Big(Box::new((BigInt::one(), BigUint::one() << k))))
        }
    }

    fn from_i128_parts(num: i128, den: u128) -> Self {
        debug_assert!(den != 0);
        if num == 0 {
            return Self::zero();
        }
        let g = gcd_u128(num.unsigned_abs(), den);
        let (n, d) = (num / g as i128, den / g);
        Self::pack_reduced(n, d)
    }

    fn pack_reduced(n: i128, d: u128) -> Self {
        if n > i64::MIN as i128 && n <= i64::MAX as i128 && d <= u64::MAX as u128 {
            Rational(Repr::Small(n as i64, d as u64))
        } else {
            Rational(Repr::Big(Box::new((BigInt::from(n), BigUint::from(d)))))
        }
    }

    fn normalize_big(num: BigInt, den: BigUint) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        let g = num.magnitude().gcd(&den);
        let (n, d) =
            if g.is_one() { (num, den) } else { (BigInt::from_biguint(num.sign(), num.magnitude() / &g), den / &g) };
        match (n.to_i64(), d.to_u64()) {
            (Some(a), Some(b)) if a != i64::MIN => Rational(Repr::Small(a, b)),
            _ => Rational(Repr::Big(Box::new((n, d)))),
        }
    }

    fn big_parts(&self) -> (BigInt, BigUint) {
        match &self.0 {
            Repr::Small(n, d) => (BigInt::from(*n), BigUint::from(*d)),
            Repr::Big(b) => (b.0.clone(), b.1.clone()),
        }
    }

    pub fn numer(&self) -> BigInt {
        self.big_parts().0
    }

    pub fn denom(&self) -> BigUint {
        self.big_parts().1
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small(0, _))
    }

    pub fn is_one(&self) -> bool {
        matches!(self.0, Repr::Small(1, 1))
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small(n, _) => *n < 0,
            Repr::Big(b) => b.0.is_negative(),
        }
    }

    pub fn is_positive(&self) -> bool {
        !self.is_zero() && !self.is_negative()
    }

    /// True when the value is `1/k` for a positive integer `k`.
    pub fn unit_fraction_denominator(&self) -> Option<u64> {
        match &self.0 {
            Repr::Small(1, d) => Some(*d),
            _ => None,
        }
    }

    /// True when `0 <= self <= 1`.
    pub fn in_unit_interval(&self) -> bool {
        !self.is_negative() && *self <= ONE
    }

    pub fn checked_div(&self, rhs: &Rational) -> Result<Rational, Error> {
        if rhs.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(self.mul_ref(&rhs.recip_unchecked()))
    }

    fn recip_unchecked(&self) -> Rational {
        match &self.0 {
            Repr::Small(n, d) => {
                let (n, d) = (*n as i128, *d as i128);
                let (n, d) = if n < 0 { (-d, (-n) as u128) } else { (d, n as u128) };
                Self::pack_reduced(n, d)
            }
            Repr::Big(b) => {
                let (n, d) = (&b.0, &b.1);
                let num = BigInt::from_biguint(n.sign(), d.clone());
                Self::normalize_big(num, n.magnitude().clone())
            }
        }
    }

    fn add_ref(&self, rhs: &Rational) -> Rational {
        if let (Repr::Small(a, b), Repr::Small(c, d)) = (&self.0, &rhs.0) {
            let (b, d) = (*b as u128, *d as u128);
            let g = gcd_u128(b, d);
            let (bg, dg) = (b / g, d / g);
            let lhs = (*a as i128).checked_mul(dg as i128);
            let rhs_n = (*c as i128).checked_mul(bg as i128);
            if let (Some(x), Some(y)) = (lhs, rhs_n) {
                if let (Some(num), Some(den)) = (x.checked_add(y), b.checked_mul(dg)) {
                    return Self::from_i128_parts(num, den);
                }
            }
        }
        let (a, b) = self.big_parts();
        let (c, d) = rhs.big_parts();
        let num = a * BigInt::from(d.clone()) + c * BigInt::from(b.clone());
        Self::normalize_big(num, b * d)
    }

    fn mul_ref(&self, rhs: &Rational) -> Rational {
        if let (Repr::Small(a, b), Repr::Small(c, d)) = (&self.0, &rhs.0) {
            let num = *a as i128 * *c as i128;
            let den = *b as u128 * *d as u128;
            return Self::from_i128_parts(num, den);
        }
        let (a, b) = self.big_parts();
        let (c, d) = rhs.big_parts();
        Self::normalize_big(a * c, b * d)
    }

    /// `self / (1 - self)`, the counter step applied to fan nodes.
    pub fn countdown_step(&self) -> Result<Rational, Error> {
        self.checked_div(&(&ONE - self))
    }

    pub fn max_ref<'a>(&'a self, other: &'a Rational) -> &'a Rational {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Sums an iterator of references.
    pub fn sum<'a, I: IntoIterator<Item = &'a Rational>>(items: I) -> Rational {
        let mut acc = Rational::zero();
        for x in items {
            acc += x;
        }
        acc
    }
}

impl Default for Rational {
    fn default() -> Self {
        Rational::zero()
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        if let (Repr::Small(a, b), Repr::Small(c, d)) = (&self.0, &other.0) {
            return (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128));
        }
        let (a, b) = self.big_parts();
        let (c, d) = other.big_parts();
        (a * BigInt::from(d)).cmp(&(c * BigInt::from(b)))
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        match &self.0 {
            Repr::Small(n, d) => Rational(Repr::Small(-*n, *d)),
            Repr::Big(b) => Rational::normalize_big(-b.0.clone(), b.1.clone()),
        }
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        -&self
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                $body(self, rhs)
            }
        }
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                $body(&self, &rhs)
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                $body(&self, rhs)
            }
        }
        impl $trait<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                $body(self, &rhs)
            }
        }
    };
}

forward_binop!(Add, add, |a: &Rational, b: &Rational| a.add_ref(b));
forward_binop!(Sub, sub, |a: &Rational, b: &Rational| a.add_ref(&-b));
forward_binop!(Mul, mul, |a: &Rational, b: &Rational| a.mul_ref(b));
// Panics on a zero divisor; use `checked_div` where the divisor is untrusted.
forward_binop!(Div, div, |a: &Rational, b: &Rational| a.checked_div(b).expect("division by zero"));

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        *self = self.add_ref(rhs);
    }
}

impl AddAssign<Rational> for Rational {
    fn add_assign(&mut self, rhs: Rational) {
        *self = self.add_ref(&rhs);
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        *self = self.add_ref(&-rhs);
    }
}

impl SubAssign<Rational> for Rational {
    fn sub_assign(&mut self, rhs: Rational) {
        *self = self.add_ref(&-rhs);
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(n, d) => write!(f, "{}/{}", n, d),
            Repr::Big(b) => write!(f, "{}/{}", b.0, b.1),
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Accepts `"num/den"` or a bare integer.
    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::Parse { what: "rational", input: s.to_string() };
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        let n: BigInt = n.parse().map_err(|_| bad())?;
        let d: BigInt = d.parse().map_err(|_| bad())?;
        Rational::from_big(n, d)
    }
}

impl serde::Serialize for Rational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Rational {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
