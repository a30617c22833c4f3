use serde::{Deserialize, Serialize};

use super::family::{family_differences, DifferenceFamily};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::CoordSubset;
use crate::tensor::{Exponent, TensorFunction};

#[derive(Clone, Debug)]
pub struct SquareMaximal {
    pub square: TensorFunction<f64>,
    pub maximal: TensorFunction<f64>,
}

/// `Sf = (Σ_i |Δ_i f|²)^{1/2}` over every item, the `∅` item included.
pub fn square_function<S: Scalar>(f: &TensorFunction<S>, family: &DifferenceFamily) -> Result<TensorFunction<f64>> {
    let set = family_differences(f, family)?;
    TensorFunction::l2_pointwise(&set.parts)
}

/// Square function and `f* = max_k |E_k f|` along the filtration of a chain-ordered family.
pub fn square_and_maximal<S: Scalar>(f: &TensorFunction<S>, family: &DifferenceFamily) -> Result<SquareMaximal> {
    let chain = family.filtration()?;
    let square = square_function(f, family)?;
    let mut maximal = vec![0.0f64; f.space().atom_count()];
    for (level, _) in &chain {
        let e = f.conditional_expectation(*level)?;
        for (m, v) in maximal.iter_mut().zip(e.values()) {
            *m = m.max(v.modulus());
        }
    }
    Ok(SquareMaximal { square, maximal: TensorFunction::new(f.space().clone(), maximal)? })
}

/// `E (Σ_i |Δ_i f|²)^{1/2}`.
pub fn h1_norm<S: Scalar>(f: &TensorFunction<S>, family: &DifferenceFamily) -> Result<f64> {
    square_function(f, family)?.lp_norm(Exponent::Finite(1.0))
}

/// `(E (Σ_i |Δ_i f|²)^{p/2})^{1/p}`, an interpretation of the family `H^p` norm.
pub fn hp_norm<S: Scalar>(f: &TensorFunction<S>, family: &DifferenceFamily, p: Exponent) -> Result<f64> {
    square_function(f, family)?.lp_norm(p.check()?)
}

/// `sup_k ‖(E_k Σ_{n ≥ k} |Δ_n g|²)^{1/2}‖_∞` with `k = 0` covering `Δ_0 = E`.
pub fn bmo_norm<S: Scalar>(g: &TensorFunction<S>, family: &DifferenceFamily) -> Result<f64> {
    let chain = family.filtration()?;
    let set = family_differences(g, family)?;
    let sq: Vec<TensorFunction<f64>> = chain
        .iter()
        .map(|(_, i)| set.parts[*i].map(|v| v.modulus() * v.modulus()))
        .collect::<Result<_>>()?;
    let mut tail = TensorFunction::<f64>::zeros(g.space().clone())?;
    let mut best = 0.0f64;
    for (k, (level, _)) in chain.iter().enumerate().rev() {
        tail.add_assign(&sq[k])?;
        let cond = tail.conditional_expectation(*level)?.map(|v| v.max(0.0).sqrt())?;
        best = best.max(cond.lp_norm(Exponent::Sup)?);
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LepingleReport {
    pub lhs: f64,
    pub rhs: f64,
}

/// `E(Σ|f_n|²)^{1/2}` against `E(Σ|E_{{n}} f_n|²)^{1/2}` for `f_n` measurable on `[1, n]`.
pub fn lepingle_check<S: Scalar>(funcs: &[TensorFunction<S>]) -> Result<LepingleReport> {
    let first = funcs.first().ok_or_else(|| Error::InvalidParameter("empty sequence".into()))?;
    if funcs.len() > first.n_coords() {
        return Err(Error::InvalidParameter(format!(
            "{} functions on {} coordinates",
            funcs.len(),
            first.n_coords()
        )));
    }
    let mut projected = Vec::with_capacity(funcs.len());
    for (i, f) in funcs.iter().enumerate() {
        let n = i + 1;
        f.require_measurable(CoordSubset::interval(1, n))?;
        projected.push(f.conditional_expectation(CoordSubset::singleton(n))?);
    }
    let one = Exponent::Finite(1.0);
    Ok(LepingleReport {
        lhs: TensorFunction::l2_pointwise(funcs)?.lp_norm(one)?,
        rhs: TensorFunction::l2_pointwise(&projected)?.lp_norm(one)?,
    })
}
