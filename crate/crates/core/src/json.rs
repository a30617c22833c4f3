//! JSON interchange for functions, spaces, spectra, families and reports.
//!
//! Values are written in atom order (last coordinate fastest). Rationals travel
//! as `"p/q"` strings and complex numbers as `[re, im]`, so rational documents
//! round-trip bit-exactly.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::decoupling::AdaptedTuple;
use crate::error::{Error, Result};
use crate::hoeffding::HoeffdingComponents;
use crate::scalar::{format_rational, Rational, Scalar, ScalarMode};
use crate::space::{CoordSubset, FiniteFactor, ProductSpace};
use crate::tensor::TensorFunction;
use crate::torus::{DirichletPolynomial, TorusSpectrum};
use crate::walsh::WalshSpectrum;

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| parse_err(format!("missing field `{key}`")))
}

pub fn factors_to_json(space: &ProductSpace) -> Value {
    let factors: Vec<Value> = space
        .factors()
        .iter()
        .map(|f| {
            let weights: Vec<Value> = match (space.mode(), f.exact_weights()) {
                (ScalarMode::Rational, Some(w)) => w.iter().map(|q| Value::String(format_rational(q))).collect(),
                _ => f.weights().iter().map(|w| json!(w)).collect(),
            };
            json!({"outcomes": f.outcome_count(), "weights": weights})
        })
        .collect();
    Value::Array(factors)
}

pub fn space_to_json(space: &ProductSpace) -> Value {
    json!({"factors": factors_to_json(space), "scalar": space.mode().as_str()})
}

fn factor_from_json(v: &Value, mode: ScalarMode) -> Result<FiniteFactor> {
    let weights = field(v, "weights")?.as_array().ok_or_else(|| parse_err("`weights` must be an array"))?;
    if let Some(k) = v.get("outcomes") {
        let k = k.as_u64().ok_or_else(|| parse_err("`outcomes` must be a positive integer"))?;
        if k as usize != weights.len() {
            return Err(Error::InvalidFactor(format!("{} weights for {k} outcomes", weights.len())));
        }
    }
    let exact = weights.iter().all(|w| w.is_string() || w.is_i64());
    if mode == ScalarMode::Rational || exact {
        let q = weights.iter().map(Rational::from_json).collect::<Result<Vec<_>>>();
        match q {
            Ok(q) => return FiniteFactor::exact(q),
            Err(e) if mode == ScalarMode::Rational => return Err(e),
            Err(_) => {}
        }
    }
    let w = weights.iter().map(f64::from_json).collect::<Result<Vec<_>>>()?;
    FiniteFactor::new(w)
}

pub fn space_from_json(v: &Value) -> Result<ProductSpace> {
    let mode: ScalarMode = field(v, "scalar")?
        .as_str()
        .ok_or_else(|| parse_err("`scalar` must be a string"))?
        .parse()?;
    let factors = field(v, "factors")?
        .as_array()
        .ok_or_else(|| parse_err("`factors` must be an array"))?
        .iter()
        .map(|f| factor_from_json(f, mode))
        .collect::<Result<Vec<_>>>()?;
    ProductSpace::new(factors, mode)
}

pub fn function_to_json<S: Scalar>(f: &TensorFunction<S>) -> Value {
    let mut doc = space_to_json(f.space());
    doc["scalar"] = json!(S::MODE.as_str());
    doc["values"] = Value::Array(f.values().iter().map(S::to_json).collect());
    doc
}

/// Reads a function whose scalar field matches `S`.
pub fn function_from_json<S: Scalar>(v: &Value) -> Result<TensorFunction<S>> {
    let space = space_from_json(v)?;
    if space.mode() != S::MODE {
        return Err(Error::ScalarMode(format!("document is {}, expected {}", space.mode().as_str(), S::MODE.as_str())));
    }
    function_on::<S>(v, Arc::new(space))
}

fn function_on<S: Scalar>(v: &Value, space: Arc<ProductSpace>) -> Result<TensorFunction<S>> {
    let values = field(v, "values")?
        .as_array()
        .ok_or_else(|| parse_err("`values` must be an array"))?
        .iter()
        .map(S::from_json)
        .collect::<Result<Vec<_>>>()?;
    TensorFunction::new(space, values)
}

/// A function in whichever scalar mode its document declares.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyFunction {
    Real(TensorFunction<f64>),
    Complex(TensorFunction<Complex64>),
    Rational(TensorFunction<Rational>),
}

impl AnyFunction {
    pub fn from_json(v: &Value) -> Result<Self> {
        let space = Arc::new(space_from_json(v)?);
        Ok(match space.mode() {
            ScalarMode::Real => AnyFunction::Real(function_on(v, space)?),
            ScalarMode::Complex => AnyFunction::Complex(function_on(v, space)?),
            ScalarMode::Rational => AnyFunction::Rational(function_on(v, space)?),
        })
    }

    pub fn to_json(&self) -> Value {
        match self {
            AnyFunction::Real(f) => function_to_json(f),
            AnyFunction::Complex(f) => function_to_json(f),
            AnyFunction::Rational(f) => function_to_json(f),
        }
    }

    pub fn space(&self) -> &Arc<ProductSpace> {
        match self {
            AnyFunction::Real(f) => f.space(),
            AnyFunction::Complex(f) => f.space(),
            AnyFunction::Rational(f) => f.space(),
        }
    }

    /// Floating-point view: exact values are rounded, real values kept.
    pub fn to_complex(&self) -> TensorFunction<Complex64> {
        match self {
            AnyFunction::Real(f) => f.to_complex(),
            AnyFunction::Complex(f) => f.clone(),
            AnyFunction::Rational(f) => f.to_complex(),
        }
    }
}

pub fn components_to_json<S: Scalar>(c: &HoeffdingComponents<S>) -> Value {
    let (subsets, comps): (Vec<Value>, Vec<Value>) =
        c.iter().map(|(a, f)| (json!(a), function_to_json(f))).unzip();
    json!({"subsets": subsets, "components": comps})
}

pub fn components_from_json<S: Scalar>(v: &Value) -> Result<HoeffdingComponents<S>> {
    let subsets: Vec<CoordSubset> = serde_json::from_value(field(v, "subsets")?.clone())?;
    let comps = field(v, "components")?.as_array().ok_or_else(|| parse_err("`components` must be an array"))?;
    if subsets.len() != comps.len() {
        return Err(parse_err("`subsets` and `components` differ in length"));
    }
    let first = comps.first().ok_or_else(|| parse_err("no components"))?;
    let space = Arc::new(space_from_json(first)?);
    let parts = subsets
        .into_iter()
        .zip(comps)
        .map(|(a, f)| Ok((a, function_on::<S>(f, space.clone())?)))
        .collect::<Result<Vec<_>>>()?;
    HoeffdingComponents::from_parts(space, parts)
}

pub fn walsh_to_json<S: Scalar>(spec: &WalshSpectrum<S>) -> Value {
    json!({"n": spec.n_coords, "coeffs": spec.coeffs.iter().map(S::to_json).collect::<Vec<_>>()})
}

pub fn walsh_from_json<S: Scalar>(v: &Value) -> Result<WalshSpectrum<S>> {
    let n = field(v, "n")?.as_u64().ok_or_else(|| parse_err("`n` must be an integer"))? as usize;
    let coeffs = field(v, "coeffs")?
        .as_array()
        .ok_or_else(|| parse_err("`coeffs` must be an array"))?
        .iter()
        .map(S::from_json)
        .collect::<Result<Vec<_>>>()?;
    if n >= usize::BITS as usize || coeffs.len() != 1 << n {
        return Err(parse_err(format!("{} coefficients for n = {n}", coeffs.len())));
    }
    Ok(WalshSpectrum { n_coords: n, coeffs })
}

/// Coefficients of modulus above `tol` as `[{"freq": […], "coeff": [re, im]}, …]`.
pub fn torus_spectrum_to_json(spec: &TorusSpectrum, tol: f64) -> Value {
    Value::Array(
        spec.entries(tol)
            .into_iter()
            .map(|(n, c)| json!({"freq": n, "coeff": [c.re, c.im]}))
            .collect(),
    )
}

pub fn torus_spectrum_from_json(v: &Value, modulus: usize, n_coords: usize) -> Result<TorusSpectrum> {
    let mut spec = TorusSpectrum::empty(modulus, n_coords);
    for e in v.as_array().ok_or_else(|| parse_err("spectrum must be an array"))? {
        let freq: Vec<i64> = serde_json::from_value(field(e, "freq")?.clone())?;
        spec.set(&freq, Complex64::from_json(field(e, "coeff")?)?)?;
    }
    Ok(spec)
}

pub fn dirichlet_to_json(d: &DirichletPolynomial) -> Value {
    let coeffs: Map<String, Value> = d.iter().map(|(n, b)| (n.to_string(), json!([b.re, b.im]))).collect();
    json!({"coeffs": coeffs})
}

pub fn dirichlet_from_json(v: &Value) -> Result<DirichletPolynomial> {
    let coeffs = field(v, "coeffs")?.as_object().ok_or_else(|| parse_err("`coeffs` must be an object"))?;
    let mut d = DirichletPolynomial::new();
    for (k, b) in coeffs {
        let n: u64 = k.trim().parse().map_err(|_| parse_err(format!("Dirichlet index `{k}` is not a positive integer")))?;
        d.insert(n, Complex64::from_json(b)?)?;
    }
    Ok(d)
}

pub fn tuple_to_json<S: Scalar>(t: &AdaptedTuple<S>) -> Value {
    json!({
        "space": space_to_json(t.space()),
        "funcs": t.funcs().iter().map(function_to_json).collect::<Vec<_>>(),
    })
}

pub fn tuple_from_json<S: Scalar>(v: &Value) -> Result<AdaptedTuple<S>> {
    let space = Arc::new(space_from_json(field(v, "space")?)?);
    let funcs = field(v, "funcs")?
        .as_array()
        .ok_or_else(|| parse_err("`funcs` must be an array"))?
        .iter()
        .map(|f| {
            let own = space_from_json(f)?;
            if !own.same_measure(&space) {
                return Err(Error::SpaceMismatch);
            }
            function_on::<S>(f, space.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    AdaptedTuple::new(space, funcs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub kind: String,
    pub family: Option<String>,
    pub value: f64,
}
