//! Non-negative extended rationals `[0, +∞]`.
//!
//! The invariants `γ_ℓ`, `γ′_ℓ` and every threshold built from them may be
//! infinite, and the threshold formulas are checked for exact agreement, so
//! they are carried as exact rationals with an explicit infinity.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum XRat {
    Finite(BigRational),
    Infinite,
}

impl XRat {
    pub fn zero() -> Self {
        XRat::Finite(BigRational::zero())
    }

    pub fn one() -> Self {
        XRat::Finite(BigRational::one())
    }

    pub fn int(v: i64) -> Self {
        XRat::Finite(BigRational::from_integer(BigInt::from(v)))
    }

    /// `num / den`; panics on a zero denominator.
    pub fn frac(num: i64, den: i64) -> Self {
        XRat::Finite(BigRational::new(num.into(), den.into()))
    }

    /// Exact conversion from a float. `+∞` maps to [`XRat::Infinite`];
    /// negative or NaN inputs are rejected.
    pub fn from_f64(x: f64) -> Option<Self> {
        if x.is_nan() || x < 0.0 {
            None
        } else if x.is_infinite() {
            Some(XRat::Infinite)
        } else {
            BigRational::from_float(x).map(XRat::Finite)
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, XRat::Finite(_))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, XRat::Finite(r) if r.is_zero())
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            XRat::Finite(r) => Some(r),
            XRat::Infinite => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            XRat::Finite(r) => r.to_f64().unwrap_or(f64::INFINITY),
            XRat::Infinite => f64::INFINITY,
        }
    }

    /// `1/x` with `1/0 = +∞` and `1/+∞ = 0`.
    pub fn recip(&self) -> Self {
        match self {
            XRat::Infinite => XRat::zero(),
            XRat::Finite(r) if r.is_zero() => XRat::Infinite,
            XRat::Finite(r) => XRat::Finite(r.recip()),
        }
    }

    /// Multiplication by a non-negative finite rational; `0 · ∞ = 0`.
    pub fn scale(&self, k: &BigRational) -> Self {
        debug_assert!(!k.is_negative());
        match self {
            _ if k.is_zero() => XRat::zero(),
            XRat::Infinite => XRat::Infinite,
            XRat::Finite(r) => XRat::Finite(r * k),
        }
    }

    pub fn add(&self, other: &XRat) -> Self {
        match (self, other) {
            (XRat::Finite(a), XRat::Finite(b)) => XRat::Finite(a + b),
            _ => XRat::Infinite,
        }
    }

    pub fn min(self, other: XRat) -> Self {
        if self <= other { self } else { other }
    }

    pub fn max(self, other: XRat) -> Self {
        if self >= other { self } else { other }
    }
}

impl PartialOrd for XRat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for XRat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (XRat::Finite(a), XRat::Finite(b)) => a.cmp(b),
            (XRat::Finite(_), XRat::Infinite) => Ordering::Less,
            (XRat::Infinite, XRat::Finite(_)) => Ordering::Greater,
            (XRat::Infinite, XRat::Infinite) => Ordering::Equal,
        }
    }
}

impl From<BigRational> for XRat {
    fn from(r: BigRational) -> Self {
        XRat::Finite(r)
    }
}

impl fmt::Display for XRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XRat::Infinite => write!(f, "inf"),
            XRat::Finite(r) if r.is_integer() => write!(f, "{}", r.numer()),
            XRat::Finite(r) => write!(f, "{}/{}", r.numer(), r.denom()),
        }
    }
}

impl serde::Serialize for XRat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
