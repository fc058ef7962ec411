//! Numeric backends.
//!
//! Every coordinate in the crate (cuts, endpoints, orbit points) is a
//! [`Scalar`]. Two backends exist:
//!
//! * [`Rational`]: arbitrary-precision fractions. Equality and order are
//!   exact and arithmetic never rounds.
//! * [`Float`]: `f64` where two values compare equal iff they differ by at
//!   most [`FLOAT_EQ_TOLERANCE`]. The tolerance is applied here and only
//!   here, so the interval and dynamics code never has to think about it.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Equality tolerance of the float backend.
pub const FLOAT_EQ_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Rational,
    Float,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::Rational => f.write_str("rational"),
            Backend::Float => f.write_str("float"),
        }
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rational" | "exact" => Ok(Backend::Rational),
            "float" | "f64" => Ok(Backend::Float),
            other => Err(Error::Parse(format!("unknown backend `{other}`"))),
        }
    }
}

/// An element of an ordered field, as used by every algorithm in the crate.
///
/// `PartialEq`/`PartialOrd` follow the backend's identification rule: exact
/// for [`Rational`], tolerance-based for [`Float`]. Use
/// [`Scalar::total_cmp`] when a strict total order is needed for sorting.
pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const BACKEND: Backend;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn from_f64(value: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn parse(text: &str) -> Result<Self>;
    fn abs(&self) -> Self;
    /// Square root, when the backend can represent it.
    fn sqrt(&self) -> Option<Self>;
    /// Strict total order on the underlying representation (no tolerance).
    fn total_cmp(&self, other: &Self) -> Ordering;

    fn is_exact() -> bool {
        Self::BACKEND == Backend::Rational
    }

    /// Order after the backend's equality identification.
    fn cmp_s(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }

    fn is_zero_s(&self) -> bool {
        *self == Self::zero()
    }

    fn is_positive(&self) -> bool {
        *self > Self::zero()
    }

    fn min_s(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn max_s(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn midpoint(&self, other: &Self) -> Self {
        (self.clone() + other.clone()) / Self::from_ratio(2, 1)
    }
}

/// Exact rational scalar.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(pub BigRational);

impl Rational {
    pub fn new(num: i64, den: i64) -> Self {
        Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

macro_rules! forward_binop {
    ($ty:ident, $trait:ident, $method:ident) => {
        impl $trait for $ty {
            type Output = $ty;
            fn $method(self, rhs: $ty) -> $ty {
                $ty($trait::$method(self.0, rhs.0))
            }
        }
    };
}

forward_binop!(Rational, Add, add);
forward_binop!(Rational, Sub, sub);
forward_binop!(Rational, Mul, mul);
forward_binop!(Rational, Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

fn parse_rational(text: &str) -> Result<BigRational> {
    let t = text.trim();
    let bad = || Error::Parse(format!("cannot parse `{text}` as a number"));
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in `{text}`")));
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(pos) => (&t[..pos], t[pos + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
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
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer = BigInt::from_str(if all_digits.is_empty() {
        "0"
    } else {
        &all_digits
    })
    .map_err(|_| bad())?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

impl Scalar for Rational {
    const BACKEND: Backend = Backend::Rational;

    fn zero() -> Self {
        Rational(BigRational::zero())
    }

    fn one() -> Self {
        Rational(BigRational::one())
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(num, den)
    }

    /// Exact value of the binary float.
    fn from_f64(value: f64) -> Self {
        Rational(BigRational::from_float(value).expect("finite float"))
    }

    fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    fn parse(text: &str) -> Result<Self> {
        parse_rational(text).map(Rational)
    }

    fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    fn sqrt(&self) -> Option<Self> {
        if self.0.is_negative() {
            return None;
        }
        let n = self.0.numer().sqrt();
        let d = self.0.denom().sqrt();
        if &n * &n == *self.0.numer() && &d * &d == *self.0.denom() {
            Some(Rational(BigRational::new(n, d)))
        } else {
            None
        }
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

/// `f64` scalar with tolerant equality.
#[derive(Clone, Copy, Default)]
pub struct Float(pub f64);

impl fmt::Debug for Float {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Float {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl PartialEq for Float {
    fn eq(&self, other: &Self) -> bool {
        (self.0 - other.0).abs() <= FLOAT_EQ_TOLERANCE
    }
}

impl PartialOrd for Float {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        if self.0.is_nan() || other.0.is_nan() {
            None
        } else if self == other {
            Some(Ordering::Equal)
        } else {
            self.0.partial_cmp(&other.0)
        }
    }
}

forward_binop!(Float, Add, add);
forward_binop!(Float, Sub, sub);
forward_binop!(Float, Mul, mul);
forward_binop!(Float, Div, div);

impl Neg for Float {
    type Output = Float;
    fn neg(self) -> Float {
        Float(-self.0)
    }
}

impl Scalar for Float {
    const BACKEND: Backend = Backend::Float;

    fn zero() -> Self {
        Float(0.0)
    }

    fn one() -> Self {
        Float(1.0)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Float(num as f64 / den as f64)
    }

    fn from_f64(value: f64) -> Self {
        Float(value)
    }

    fn to_f64(&self) -> f64 {
        self.0
    }

    fn parse(text: &str) -> Result<Self> {
        let r = parse_rational(text)?;
        Ok(Float(r.to_f64().unwrap_or(f64::NAN)))
    }

    fn abs(&self) -> Self {
        Float(self.0.abs())
    }

    fn sqrt(&self) -> Option<Self> {
        (self.0 >= 0.0).then(|| Float(self.0.sqrt()))
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Serde adapter: scalars travel as strings ("149/243" or "0.25"), and a
/// plain JSON/TOML number is accepted on input.
pub mod serde_scalar {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Text(String),
        Int(i64),
        Num(f64),
    }

    pub fn serialize<S: Scalar, Ser: Serializer>(
        v: &S,
        ser: Ser,
    ) -> std::result::Result<Ser::Ok, Ser::Error> {
        ser.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, S: Scalar, D: Deserializer<'de>>(
        de: D,
    ) -> std::result::Result<S, D::Error> {
        let text = match Raw::deserialize(de)? {
            Raw::Text(t) => t,
            Raw::Int(i) => i.to_string(),
            Raw::Num(x) => x.to_string(),
        };
        S::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Same as [`serde_scalar`] for `Vec<S>`.
pub mod serde_scalar_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Scalar, Ser: Serializer>(
        v: &[S],
        ser: Ser,
    ) -> std::result::Result<Ser::Ok, Ser::Error> {
        let mut seq = ser.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&x.to_string())?;
        }
        seq.end()
    }

    pub fn deserialize<'de, S: Scalar, D: Deserializer<'de>>(
        de: D,
    ) -> std::result::Result<Vec<S>, D::Error> {
        let raw: Vec<String> = Vec::deserialize(de)?;
        raw.iter()
            .map(|t| S::parse(t).map_err(serde::de::Error::custom))
            .collect()
    }
}
