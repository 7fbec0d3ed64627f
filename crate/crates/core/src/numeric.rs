//! Weight arithmetic in two modes: exact arbitrary-precision rationals and
//! fast doubles. Exact mode anchors tests (the switch condition and the
//! matrix relation hold with equality); fast mode powers long Monte Carlo
//! runs with a defect tolerance and per-step renormalization.

use std::fmt::Debug;
use std::ops::{Div, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericMode {
    Exact,
    Fast,
}

impl std::fmt::Display for NumericMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NumericMode::Exact => write!(f, "exact"),
            NumericMode::Fast => write!(f, "fast"),
        }
    }
}

impl std::str::FromStr for NumericMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(NumericMode::Exact),
            "fast" => Ok(NumericMode::Fast),
            other => Err(Error::Parse(format!("unknown numeric mode `{other}`"))),
        }
    }
}

/// Scalar type for branch weights.
///
/// Implemented by [`BigRational`] (exact mode) and `f64` (fast mode).
pub trait Scalar:
    Clone
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Neg<Output = Self>
    + Sub<Output = Self>
    + Div<Output = Self>
    + Debug
    + Send
    + Sync
    + 'static
{
    const MODE: NumericMode;

    fn from_u64(v: u64) -> Self;
    fn from_bigint(v: &BigInt) -> Self;
    /// Exact conversion from a finite double. Doubles are dyadic rationals,
    /// so this is lossless in both modes.
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    /// Largest switch-condition defect magnitude tolerated after an operation.
    fn defect_tolerance() -> f64;
    fn abs(&self) -> Self;
    /// Canonical text form: `p/q` in exact mode, a 17-significant-digit
    /// decimal in fast mode. Round-trips through [`Scalar::parse`].
    fn render(&self) -> String;
    /// Accepts `p/q`, plain decimals, and scientific notation.
    fn parse(text: &str) -> Result<Self>;
}

impl Scalar for BigRational {
    const MODE: NumericMode = NumericMode::Exact;

    fn from_u64(v: u64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_bigint(v: &BigInt) -> Self {
        BigRational::from_integer(v.clone())
    }

    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).expect("finite float")
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn defect_tolerance() -> f64 {
        0.0
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn render(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }

    fn parse(text: &str) -> Result<Self> {
        parse_rational(text)
    }
}

impl Scalar for f64 {
    const MODE: NumericMode = NumericMode::Fast;

    fn from_u64(v: u64) -> Self {
        v as f64
    }

    fn from_bigint(v: &BigInt) -> Self {
        v.to_f64().unwrap_or(f64::INFINITY)
    }

    fn from_f64(v: f64) -> Self {
        v
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn defect_tolerance() -> f64 {
        1e-12
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn render(&self) -> String {
        render_f64(*self)
    }

    fn parse(text: &str) -> Result<Self> {
        if let Some((p, q)) = text.split_once('/') {
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad numerator `{p}`")))?;
            let q: f64 = q
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad denominator `{q}`")))?;
            if q == 0.0 {
                return Err(Error::Parse("zero denominator".into()));
            }
            Ok(p / q)
        } else {
            text.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad number `{text}`")))
        }
    }
}

/// 17 significant digits; round-trips any finite double exactly.
pub fn render_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parses `p/q` or decimal/scientific notation into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let text = text.trim();
    if let Some((p, q)) = text.split_once('/') {
        let p: BigInt = p
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator `{p}`")))?;
        let q: BigInt = q
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator `{q}`")))?;
        if q.is_zero() {
            return Err(Error::Parse("zero denominator".into()));
        }
        return Ok(BigRational::new(p, q));
    }
    decimal_to_rational(text)
}

fn decimal_to_rational(text: &str) -> Result<BigRational> {
    let bad = || Error::Parse(format!("bad decimal `{text}`"));
    let (mantissa, exp10): (&str, i64) = match text.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse().map_err(|_| bad())?),
        None => (text, 0),
    };
    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    let joined: String = [int_part, frac_part].concat();
    if joined.chars().any(|c| !c.is_ascii_digit()) {
        return Err(bad());
    }
    let numer: BigInt = if joined.is_empty() {
        BigInt::zero()
    } else {
        joined.parse().map_err(|_| bad())?
    };
    let scale = frac_part.len() as i64 - exp10;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        BigRational::new(numer, ten.pow(scale as u32))
    } else {
        BigRational::from_integer(numer * ten.pow((-scale) as u32))
    };
    Ok(if sign < 0 { -value } else { value })
}
