//! Exact PSL2(Z) arithmetic.
//!
//! A [`GroupElement`] is an integer matrix of determinant one, stored in a
//! canonical sign so that `g` and `-g` compare equal and hash identically.

use std::fmt;
use std::ops::Mul;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{ModsymError, Result};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct GroupElement {
    a: BigInt,
    b: BigInt,
    c: BigInt,
    d: BigInt,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TraceClass {
    Identity,
    Parabolic,
    Elliptic,
    Hyperbolic,
}

impl GroupElement {
    /// Builds an element from its entries, rejecting determinants other than 1.
    pub fn new(a: BigInt, b: BigInt, c: BigInt, d: BigInt) -> Result<Self> {
        if &a * &d - &b * &c != BigInt::one() {
            return Err(ModsymError::Invalid(format!(
                "determinant of ({a} {b}; {c} {d}) is not 1"
            )));
        }
        Ok(Self::from_parts(a, b, c, d))
    }

    pub fn from_i64(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        Self::new(a.into(), b.into(), c.into(), d.into())
    }

    /// Entries must already satisfy ad - bc = 1.
    pub(crate) fn from_parts(a: BigInt, b: BigInt, c: BigInt, d: BigInt) -> Self {
        debug_assert!(&a * &d - &b * &c == BigInt::one());
        let flip = c.is_negative() || (c.is_zero() && a.is_negative());
        if flip {
            Self {
                a: -a,
                b: -b,
                c: -c,
                d: -d,
            }
        } else {
            Self { a, b, c, d }
        }
    }

    pub fn identity() -> Self {
        Self::from_parts(BigInt::one(), BigInt::zero(), BigInt::zero(), BigInt::one())
    }

    /// The involution (0 -1; 1 0).
    pub fn s() -> Self {
        Self::from_parts(BigInt::zero(), -BigInt::one(), BigInt::one(), BigInt::zero())
    }

    /// The translation (1 1; 0 1).
    pub fn t() -> Self {
        Self::from_parts(BigInt::one(), BigInt::one(), BigInt::zero(), BigInt::one())
    }

    pub fn t_pow(k: impl Into<BigInt>) -> Self {
        Self::from_parts(BigInt::one(), k.into(), BigInt::zero(), BigInt::one())
    }

    pub fn a(&self) -> &BigInt {
        &self.a
    }
    pub fn b(&self) -> &BigInt {
        &self.b
    }
    pub fn c(&self) -> &BigInt {
        &self.c
    }
    pub fn d(&self) -> &BigInt {
        &self.d
    }

    pub fn entries(&self) -> [&BigInt; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    pub fn entries_f64(&self) -> [f64; 4] {
        let f = |x: &BigInt| x.to_f64().unwrap_or(f64::NAN);
        [f(&self.a), f(&self.b), f(&self.c), f(&self.d)]
    }

    pub fn is_identity(&self) -> bool {
        self.c.is_zero() && self.b.is_zero()
    }

    pub fn inverse(&self) -> Self {
        Self::from_parts(
            self.d.clone(),
            -self.b.clone(),
            -self.c.clone(),
            self.a.clone(),
        )
    }

    /// Integer power; negative exponents use the inverse.
    pub fn pow(&self, exp: i64) -> Self {
        let mut base = if exp < 0 { self.inverse() } else { self.clone() };
        let mut e = exp.unsigned_abs();
        let mut acc = Self::identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// max(|a|, |b|, |c|, |d|)
    pub fn norm(&self) -> BigInt {
        self.entries()
            .into_iter()
            .map(|x| x.abs())
            .max()
            .expect("four entries")
    }

    /// Natural logarithm of the norm, valid far beyond the f64 range of the norm itself.
    pub fn log_norm(&self) -> f64 {
        ln_bigint(&self.norm())
    }

    pub fn trace(&self) -> BigInt {
        &self.a + &self.d
    }

    pub fn classify(&self) -> TraceClass {
        if self.is_identity() {
            return TraceClass::Identity;
        }
        let t = self.trace().abs();
        let two = BigInt::from(2);
        match t.cmp(&two) {
            std::cmp::Ordering::Less => TraceClass::Elliptic,
            std::cmp::Ordering::Equal => TraceClass::Parabolic,
            std::cmp::Ordering::Greater => TraceClass::Hyperbolic,
        }
    }

    pub fn is_parabolic(&self) -> bool {
        self.classify() == TraceClass::Parabolic
    }

    /// Lower-left entry divisible by `level`.
    pub fn in_gamma0(&self, level: u64) -> bool {
        (&self.c % BigInt::from(level)).is_zero()
    }

    pub fn require_gamma0(&self, level: u64) -> Result<()> {
        if self.in_gamma0(level) {
            Ok(())
        } else {
            Err(ModsymError::NotInGroup(self.to_string(), level))
        }
    }

    pub fn conjugate_by(&self, g: &GroupElement) -> Self {
        &(g * self) * &g.inverse()
    }
}

impl Mul for &GroupElement {
    type Output = GroupElement;

    fn mul(self, rhs: &GroupElement) -> GroupElement {
        GroupElement::from_parts(
            &self.a * &rhs.a + &self.b * &rhs.c,
            &self.a * &rhs.b + &self.b * &rhs.d,
            &self.c * &rhs.a + &self.d * &rhs.c,
            &self.c * &rhs.b + &self.d * &rhs.d,
        )
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;

    fn mul(self, rhs: GroupElement) -> GroupElement {
        &self * &rhs
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {}; {} {})", self.a, self.b, self.c, self.d)
    }
}

/// ln|x| for an arbitrary-precision integer; `-inf` for zero.
pub fn ln_bigint(x: &BigInt) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits < 1000 {
        return x.abs().to_f64().expect("finite").ln();
    }
    let shift = bits - 64;
    let top = (x.abs() >> shift).to_f64().expect("64-bit head");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Returns (g, x, y) with g = gcd(a, b) >= 0 and a x + b y = g.
pub fn ext_gcd(a: &BigInt, b: &BigInt) -> (BigInt, BigInt, BigInt) {
    let e = a.extended_gcd(b);
    if e.gcd.is_negative() {
        (-e.gcd, -e.x, -e.y)
    } else {
        (e.gcd, e.x, e.y)
    }
}

/// An element (p x; q y) with first column (p, q), for coprime p, q.
pub fn matrix_with_first_column(p: &BigInt, q: &BigInt) -> GroupElement {
    // p*y - q*x = 1  <=>  p*y + q*(-x) = 1
    let (g, s, t) = ext_gcd(p, q);
    debug_assert!(g.is_one(), "first column must be coprime");
    GroupElement::from_parts(p.clone(), -t, q.clone(), s)
}
