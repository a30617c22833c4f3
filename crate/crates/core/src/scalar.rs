//! Scalar fields the tensor machinery is generic over.
//!
//! Three modes are supported: real and complex floating point for Monte
//! Carlo work, and exact rationals for operator identities that must hold
//! without rounding.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::space::FiniteFactor;

pub type Rational = BigRational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarMode {
    Real,
    Complex,
    Rational,
}

impl ScalarMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ScalarMode::Real => "real",
            ScalarMode::Complex => "complex",
            ScalarMode::Rational => "rational",
        }
    }
}

impl FromStr for ScalarMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" | "float" => Ok(ScalarMode::Real),
            "complex" => Ok(ScalarMode::Complex),
            "rational" => Ok(ScalarMode::Rational),
            other => Err(Error::Parse(format!("unknown scalar mode `{other}`"))),
        }
    }
}

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    const MODE: ScalarMode;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_rational(q: &Rational) -> Self;
    /// Exact for the rational mode: the binary value of `x` is converted without rounding.
    fn from_f64(x: f64) -> Self;
    fn weight(factor: &FiniteFactor, outcome: usize) -> Self;
    fn modulus(&self) -> f64;
    fn conj(&self) -> Self;
    fn to_complex(&self) -> Complex64;
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self>;

    fn from_ratio(num: i64, den: u64) -> Self {
        Self::from_rational(&Rational::new(BigInt::from(num), BigInt::from(den)))
    }

    fn is_exact() -> bool {
        Self::MODE == ScalarMode::Rational
    }
}

impl Scalar for f64 {
    const MODE: ScalarMode = ScalarMode::Real;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_rational(q: &Rational) -> Self {
        q.to_f64().unwrap_or(f64::NAN)
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn weight(factor: &FiniteFactor, outcome: usize) -> Self {
        factor.weights()[outcome]
    }
    fn modulus(&self) -> f64 {
        self.abs()
    }
    fn conj(&self) -> Self {
        *self
    }
    fn to_complex(&self) -> Complex64 {
        Complex64::new(*self, 0.0)
    }
    fn to_json(&self) -> Value {
        serde_json::json!(self)
    }
    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Number(n) => n
                .as_f64()
                .ok_or_else(|| Error::Parse(format!("not a float: {n}"))),
            Value::String(s) => parse_rational(s).map(|q| Self::from_rational(&q)),
            other => Err(Error::Parse(format!("expected a real value, got {other}"))),
        }
    }
}

impl Scalar for Complex64 {
    const MODE: ScalarMode = ScalarMode::Complex;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_rational(q: &Rational) -> Self {
        Complex64::new(f64::from_rational(q), 0.0)
    }
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn weight(factor: &FiniteFactor, outcome: usize) -> Self {
        Complex64::new(factor.weights()[outcome], 0.0)
    }
    fn modulus(&self) -> f64 {
        self.norm()
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn to_complex(&self) -> Complex64 {
        *self
    }
    fn to_json(&self) -> Value {
        serde_json::json!([self.re, self.im])
    }
    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Array(pair) if pair.len() == 2 => Ok(Complex64::new(
                f64::from_json(&pair[0])?,
                f64::from_json(&pair[1])?,
            )),
            Value::Number(_) | Value::String(_) => f64::from_json(v).map(Complex64::from),
            other => Err(Error::Parse(format!("expected [re, im], got {other}"))),
        }
    }
}

impl Scalar for Rational {
    const MODE: ScalarMode = ScalarMode::Rational;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }
    fn from_f64(x: f64) -> Self {
        Rational::from_float(x).unwrap_or_else(Zero::zero)
    }
    fn weight(factor: &FiniteFactor, outcome: usize) -> Self {
        match factor.exact_weights() {
            Some(w) => w[outcome].clone(),
            None => Self::from_f64(factor.weights()[outcome]),
        }
    }
    fn modulus(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }
    fn conj(&self) -> Self {
        self.clone()
    }
    fn to_complex(&self) -> Complex64 {
        Complex64::new(f64::from_rational(self), 0.0)
    }
    fn to_json(&self) -> Value {
        Value::String(format_rational(self))
    }
    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => parse_rational(s),
            Value::Number(n) if n.is_i64() => Ok(Rational::from_integer(BigInt::from(
                n.as_i64().unwrap_or_default(),
            ))),
            other => Err(Error::Parse(format!(
                "expected a \"p/q\" rational string, got {other}"
            ))),
        }
    }
}

/// Formats as `p/q` with `q > 0`, always including the denominator.
pub fn format_rational(q: &Rational) -> String {
    q.to_string()
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::Parse(format!("malformed rational `{s}`"));
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
            let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(p, q))
        }
        None => BigInt::from_str(s).map(Rational::from_integer).map_err(|_| bad()),
    }
}

pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}
