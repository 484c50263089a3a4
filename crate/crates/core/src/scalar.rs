//! Arithmetic substrate shared by all geometric code.
//!
//! Two backends implement [`Scalar`]:
//!
//! * [`Rational`]: exact arbitrary-precision rationals, always in lowest
//!   terms with a positive denominator. This is the default.
//! * [`TolFloat`]: `f64` tagged with a relative tolerance. Every sign and
//!   equality test goes through `|a - b| <= eps * max(1, |a|, |b|)`.
//!
//! Geometry is written once against the trait, so sign-sensitive decisions
//! (facet classification, incidence tests) are exact under the rational
//! backend and tolerance-checked under the float backend.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalarError {
    #[error("a direction must be a non-zero vector")]
    ZeroDirection,
    #[error("cannot parse scalar {0:?}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Negative => -1,
            Sign::Zero => 0,
            Sign::Positive => 1,
        }
    }
}

impl Neg for Sign {
    type Output = Sign;
    fn neg(self) -> Sign {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }
}

impl Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        match self.as_i8() * rhs.as_i8() {
            -1 => Sign::Negative,
            0 => Sign::Zero,
            _ => Sign::Positive,
        }
    }
}

/// Field element used throughout the crate.
pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
{
    /// True for backends whose comparisons are exact.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_rational(v: &BigRational) -> Self;
    fn to_f64(&self) -> f64;
    fn sign(&self) -> Sign;
    /// Product of two borrowed values without cloning either operand first.
    fn mul_ref(&self, rhs: &Self) -> Self;
    /// Tolerance-aware three-way comparison.
    fn cmp_to(&self, other: &Self) -> Ordering;
    /// Scale a non-zero vector by a positive factor into canonical form.
    ///
    /// Returns the canonical vector together with the factor used, so that
    /// offsets attached to the vector can be rescaled consistently.
    fn canonical_scaling(v: &[Self]) -> Result<(Vec<Self>, Self), ScalarError>;
    fn parse_str(s: &str) -> Result<Self, ScalarError>;
    /// Serialized form: `"p/q"` / `"p"` for rationals, shortest round-trip
    /// decimal for floats.
    fn to_repr(&self) -> String;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    fn is_zero(&self) -> bool {
        self.sign() == Sign::Zero
    }

    fn is_positive(&self) -> bool {
        self.sign() == Sign::Positive
    }

    fn is_negative(&self) -> bool {
        self.sign() == Sign::Negative
    }

    fn same(&self, other: &Self) -> bool {
        self.cmp_to(other) == Ordering::Equal
    }

    fn abs(&self) -> Self {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn max_of(self, other: Self) -> Self {
        if other.cmp_to(&self) == Ordering::Greater {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other.cmp_to(&self) == Ordering::Less {
            other
        } else {
            self
        }
    }
}

/// Sign of a scalar as `{-1, 0, +1}`.
pub fn sign<S: Scalar>(s: &S) -> Sign {
    s.sign()
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = S::zero();
    for (x, y) in a.iter().zip(b) {
        if x.is_zero() || y.is_zero() {
            continue;
        }
        acc = acc + x.mul_ref(y);
    }
    acc
}

pub fn is_zero_vector<S: Scalar>(v: &[S]) -> bool {
    v.iter().all(Scalar::is_zero)
}

pub fn vectors_equal<S: Scalar>(a: &[S], b: &[S]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.same(y))
}

/// Canonical form of a facet direction.
///
/// Exact backend: integer coordinates with gcd 1. Float backend: max-norm 1.
/// The result is a positive multiple of `v`, and the map is idempotent.
pub fn canonicalize_direction<S: Scalar>(v: &[S]) -> Result<Vec<S>, ScalarError> {
    S::canonical_scaling(v).map(|(c, _)| c)
}

// ---------------------------------------------------------------------------
// Exact rationals
// ---------------------------------------------------------------------------

/// Exact rational `p/q`, `q > 0`, `gcd(|p|, q) = 1`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(num: i64, den: i64) -> Self {
        Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_big(v: BigRational) -> Self {
        Rational(v)
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }

    pub fn into_big(self) -> BigRational {
        self.0
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    /// Bit length of numerator plus denominator, a rough size measure used
    /// by the benchmark harness to track coefficient growth.
    pub fn bits(&self) -> u64 {
        self.0.numer().bits() + self.0.denom().bits()
    }

    /// Exact rational value of a finite `f64`.
    pub fn from_f64_exact(v: f64) -> Option<Self> {
        BigRational::from_float(v).map(Rational)
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_repr())
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_repr())
    }
}

impl FromStr for Rational {
    type Err = ScalarError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_rational(s).map(Rational)
    }
}

fn parse_rational(raw: &str) -> Result<BigRational, ScalarError> {
    let err = || ScalarError::Parse(raw.to_string());
    let s = raw.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| err())?;
        let q: BigInt = q.trim().parse().map_err(|_| err())?;
        if q.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(p, q));
    }
    if let Ok(p) = s.parse::<BigInt>() {
        return Ok(BigRational::from_integer(p));
    }
    // Decimal notation, optionally with an exponent: read it exactly.
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().map_err(|_| err())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = all_digits.parse().map_err(|_| err())?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

macro_rules! rational_binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0 $op rhs.0)
            }
        }
        impl<'a> $tr<&'a Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational(self.0 $op &rhs.0)
            }
        }
        impl<'a> $tr<&'a Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational(&self.0 $op &rhs.0)
            }
        }
    };
}

rational_binop!(Add, add, +);
rational_binop!(Sub, sub, -);
rational_binop!(Mul, mul, *);
rational_binop!(Div, div, /);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Rational(BigRational::zero())
    }

    fn one() -> Self {
        Rational(BigRational::one())
    }

    fn from_i64(v: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(v)))
    }

    fn from_rational(v: &BigRational) -> Self {
        Rational(v.clone())
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(num, den)
    }

    fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    fn sign(&self) -> Sign {
        if self.0.is_zero() {
            Sign::Zero
        } else if self.0.is_positive() {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    fn mul_ref(&self, rhs: &Self) -> Self {
        Rational(&self.0 * &rhs.0)
    }

    fn cmp_to(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }

    fn canonical_scaling(v: &[Self]) -> Result<(Vec<Self>, Self), ScalarError> {
        if v.iter().all(|x| x.0.is_zero()) {
            return Err(ScalarError::ZeroDirection);
        }
        let lcm = v
            .iter()
            .fold(BigInt::one(), |acc, x| acc.lcm(x.0.denom()));
        let ints: Vec<BigInt> = v
            .iter()
            .map(|x| x.0.numer() * (&lcm / x.0.denom()))
            .collect();
        let gcd = ints
            .iter()
            .fold(BigInt::zero(), |acc, x| acc.gcd(x));
        let out = ints
            .into_iter()
            .map(|x| Rational(BigRational::from_integer(x / &gcd)))
            .collect();
        let factor = Rational(BigRational::new(lcm, gcd));
        Ok((out, factor))
    }

    fn parse_str(s: &str) -> Result<Self, ScalarError> {
        s.parse()
    }

    fn to_repr(&self) -> String {
        if self.0.denom().is_one() {
            self.0.numer().to_string()
        } else {
            format!("{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl Serialize for Rational {
    fn serialize<Se: Serializer>(&self, serializer: Se) -> Result<Se::Ok, Se::Error> {
        serializer.serialize_str(&self.to_repr())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = ScalarRepr::deserialize(deserializer)?;
        raw.parse::<Rational>().map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Tolerance-checked floats
// ---------------------------------------------------------------------------

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

static DEFAULT_TOL_BITS: AtomicU64 = AtomicU64::new(0x3E11_2E0B_E826_D695); // 1e-9

/// Tolerance attached to newly created [`TolFloat`] values.
pub fn default_tolerance() -> f64 {
    f64::from_bits(DEFAULT_TOL_BITS.load(AtomicOrdering::Relaxed))
}

/// Set the tolerance attached to newly created [`TolFloat`] values.
pub fn set_default_tolerance(eps: f64) {
    assert!(eps.is_finite() && eps >= 0.0, "tolerance must be finite and non-negative");
    DEFAULT_TOL_BITS.store(eps.to_bits(), AtomicOrdering::Relaxed);
}

/// `f64` carrying its comparison tolerance. Results of binary operations
/// carry the larger of the two operand tolerances.
#[derive(Clone, Copy)]
pub struct TolFloat {
    value: f64,
    eps: f64,
}

impl TolFloat {
    pub fn new(value: f64) -> Self {
        TolFloat { value, eps: default_tolerance() }
    }

    pub fn with_tolerance(value: f64, eps: f64) -> Self {
        TolFloat { value, eps }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn tolerance(&self) -> f64 {
        self.eps
    }

    fn close(a: f64, b: f64, eps: f64) -> bool {
        (a - b).abs() <= eps * 1f64.max(a.abs()).max(b.abs())
    }
}

impl PartialEq for TolFloat {
    fn eq(&self, other: &Self) -> bool {
        Self::close(self.value, other.value, self.eps.max(other.eps))
    }
}

impl fmt::Debug for TolFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.value)
    }
}

impl fmt::Display for TolFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

macro_rules! float_binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr for TolFloat {
            type Output = TolFloat;
            fn $method(self, rhs: TolFloat) -> TolFloat {
                TolFloat { value: self.value $op rhs.value, eps: self.eps.max(rhs.eps) }
            }
        }
        impl<'a> $tr<&'a TolFloat> for TolFloat {
            type Output = TolFloat;
            fn $method(self, rhs: &'a TolFloat) -> TolFloat {
                TolFloat { value: self.value $op rhs.value, eps: self.eps.max(rhs.eps) }
            }
        }
    };
}

float_binop!(Add, add, +);
float_binop!(Sub, sub, -);
float_binop!(Mul, mul, *);
float_binop!(Div, div, /);

impl Neg for TolFloat {
    type Output = TolFloat;
    fn neg(self) -> TolFloat {
        TolFloat { value: -self.value, eps: self.eps }
    }
}

impl Scalar for TolFloat {
    const EXACT: bool = false;

    fn zero() -> Self {
        TolFloat::new(0.0)
    }

    fn one() -> Self {
        TolFloat::new(1.0)
    }

    fn from_i64(v: i64) -> Self {
        TolFloat::new(v as f64)
    }

    fn from_rational(v: &BigRational) -> Self {
        TolFloat::new(v.to_f64().unwrap_or(f64::NAN))
    }

    fn to_f64(&self) -> f64 {
        self.value
    }

    fn sign(&self) -> Sign {
        if Self::close(self.value, 0.0, self.eps) {
            Sign::Zero
        } else if self.value > 0.0 {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }

    fn mul_ref(&self, rhs: &Self) -> Self {
        *self * *rhs
    }

    fn cmp_to(&self, other: &Self) -> Ordering {
        if Self::close(self.value, other.value, self.eps.max(other.eps)) {
            Ordering::Equal
        } else if self.value < other.value {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }

    fn canonical_scaling(v: &[Self]) -> Result<(Vec<Self>, Self), ScalarError> {
        let norm = v.iter().fold(0f64, |acc, x| acc.max(x.value.abs()));
        if v.iter().all(Scalar::is_zero) || norm == 0.0 {
            return Err(ScalarError::ZeroDirection);
        }
        let factor = TolFloat::with_tolerance(1.0 / norm, v[0].eps);
        let out = v
            .iter()
            .map(|x| {
                let scaled = TolFloat { value: x.value / norm, eps: x.eps };
                if scaled.is_zero() {
                    TolFloat { value: 0.0, eps: x.eps }
                } else {
                    scaled
                }
            })
            .collect();
        Ok((out, factor))
    }

    fn parse_str(s: &str) -> Result<Self, ScalarError> {
        if let Ok(v) = s.trim().parse::<f64>() {
            return Ok(TolFloat::new(v));
        }
        parse_rational(s).map(|r| Self::from_rational(&r))
    }

    fn to_repr(&self) -> String {
        // `{}` on f64 is the shortest representation that round-trips.
        format!("{}", self.value)
    }
}

impl Serialize for TolFloat {
    fn serialize<Se: Serializer>(&self, serializer: Se) -> Result<Se::Ok, Se::Error> {
        serializer.serialize_str(&self.to_repr())
    }
}

impl<'de> Deserialize<'de> for TolFloat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = ScalarRepr::deserialize(deserializer)?;
        TolFloat::parse_str(&raw).map_err(serde::de::Error::custom)
    }
}

/// Accepts either a JSON string or a JSON number wherever a scalar is read.
#[derive(Deserialize)]
#[serde(untagged)]
enum ScalarReprRaw {
    Str(String),
    Int(i64),
    Float(f64),
}

struct ScalarRepr(String);

impl std::ops::Deref for ScalarRepr {
    type Target = str;
    fn deref(&self) -> &str {
        &self.0
    }
}

impl<'de> Deserialize<'de> for ScalarRepr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(ScalarRepr(match ScalarReprRaw::deserialize(deserializer)? {
            ScalarReprRaw::Str(s) => s,
            ScalarReprRaw::Int(i) => i.to_string(),
            ScalarReprRaw::Float(f) => format!("{f}"),
        }))
    }
}

/// Serde adapter for scalar fields of generic structs.
pub mod serde_scalar {
    use super::*;

    pub fn serialize<S: Scalar, Se: Serializer>(v: &S, serializer: Se) -> Result<Se::Ok, Se::Error> {
        serializer.serialize_str(&v.to_repr())
    }

    pub fn deserialize<'de, S: Scalar, D: Deserializer<'de>>(deserializer: D) -> Result<S, D::Error> {
        let raw = ScalarRepr::deserialize(deserializer)?;
        S::parse_str(&raw).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<S>` fields.
pub mod serde_scalar_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Scalar, Se: Serializer>(v: &[S], serializer: Se) -> Result<Se::Ok, Se::Error> {
        let mut seq = serializer.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&x.to_repr())?;
        }
        seq.end()
    }

    pub fn deserialize<'de, S: Scalar, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<S>, D::Error> {
        let raw = Vec::<ScalarRepr>::deserialize(deserializer)?;
        raw.iter()
            .map(|r| S::parse_str(r).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter for `Vec<Vec<S>>` fields.
pub mod serde_scalar_mat {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Scalar, Se: Serializer>(v: &[Vec<S>], serializer: Se) -> Result<Se::Ok, Se::Error> {
        let mut seq = serializer.serialize_seq(Some(v.len()))?;
        for row in v {
            let strs: Vec<String> = row.iter().map(Scalar::to_repr).collect();
            seq.serialize_element(&strs)?;
        }
        seq.end()
    }

    pub fn deserialize<'de, S: Scalar, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<Vec<S>>, D::Error> {
        let raw = Vec::<Vec<ScalarRepr>>::deserialize(deserializer)?;
        raw.iter()
            .map(|row| {
                row.iter()
                    .map(|r| S::parse_str(r).map_err(serde::de::Error::custom))
                    .collect()
            })
            .collect()
    }
}
