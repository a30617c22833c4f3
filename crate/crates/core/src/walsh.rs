//! Walsh–Hadamard analysis on the uniform cube `Z_2^N`.
//!
//! Spectra are indexed by subset bitmask with bit `j` standing for coordinate
//! `j + 1`; the Rademacher function is `+1` at outcome 0 and `−1` at outcome 1.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::{CoordSubset, ProductSpace};
use crate::stats::pairwise_sum;
use crate::tensor::TensorFunction;

pub const WALSH_GUARD: usize = 24;
pub const KHINTCHINE_GUARD: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct WalshSpectrum<S: Scalar> {
    pub n_coords: usize,
    pub coeffs: Vec<S>,
}

impl<S: Scalar> WalshSpectrum<S> {
    pub fn coeff(&self, a: CoordSubset) -> &S {
        &self.coeffs[a.mask() as usize]
    }
}

fn check_cube(space: &ProductSpace) -> Result<()> {
    let n = space.n_coords();
    if n > WALSH_GUARD {
        return Err(Error::SubsetGuard { what: "Walsh coefficient", n, limit: WALSH_GUARD });
    }
    for c in 1..=n {
        let f = space.factor(c);
        if f.outcome_count() != 2 || !f.is_uniform() {
            return Err(Error::InvalidFactor(format!("coordinate {c} is not a fair coin")));
        }
    }
    Ok(())
}

/// Atom bit `N − j` holds coordinate `j`; spectrum bit `j − 1` does.
fn reverse_bits(x: usize, n: usize) -> usize {
    if n == 0 { 0 } else { x.reverse_bits() >> (usize::BITS as usize - n) }
}

/// Unnormalized in-place butterfly `v[u] ← Σ_x v[x] (−1)^{|u ∧ x|}`.
fn butterfly<S: Scalar>(v: &mut [S]) {
    let mut h = 1;
    while h < v.len() {
        for base in (0..v.len()).step_by(2 * h) {
            for i in base..base + h {
                let a = v[i].clone();
                let b = v[i + h].clone();
                v[i] = a.clone() + b.clone();
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// `coeffs[A] = ⟨f, w_A⟩`.
pub fn walsh_hadamard_transform<S: Scalar>(f: &TensorFunction<S>) -> Result<WalshSpectrum<S>> {
    check_cube(f.space())?;
    let n = f.n_coords();
    let mut v = f.values().to_vec();
    butterfly(&mut v);
    let scale = S::from_ratio(1, 1u64 << n);
    let mut coeffs = vec![S::zero(); v.len()];
    for (u, x) in v.into_iter().enumerate() {
        coeffs[reverse_bits(u, n)] = x * scale.clone();
    }
    Ok(WalshSpectrum { n_coords: n, coeffs })
}

/// `f = Σ_A coeffs[A] w_A` on `space`.
pub fn walsh_inverse<S: Scalar>(spec: &WalshSpectrum<S>, space: Arc<ProductSpace>) -> Result<TensorFunction<S>> {
    check_cube(&space)?;
    if space.n_coords() != spec.n_coords || spec.coeffs.len() != 1 << spec.n_coords {
        return Err(Error::SpaceMismatch);
    }
    let n = spec.n_coords;
    let mut v = vec![S::zero(); spec.coeffs.len()];
    for (a, c) in spec.coeffs.iter().enumerate() {
        v[reverse_bits(a, n)] = c.clone();
    }
    butterfly(&mut v);
    TensorFunction::new(space, v)
}

/// Inverse transform of the `|A| = m` layer of the spectrum.
pub fn walsh_projection<S: Scalar>(f: &TensorFunction<S>, m: usize) -> Result<TensorFunction<S>> {
    let mut spec = walsh_hadamard_transform(f)?;
    for (a, c) in spec.coeffs.iter_mut().enumerate() {
        if a.count_ones() as usize != m {
            *c = S::zero();
        }
    }
    walsh_inverse(&spec, f.space().clone())
}

/// `E|Σ c_i r_i| / ‖c‖₂` by enumerating every sign pattern.
pub fn khintchine_ratio(c: &[f64]) -> Result<f64> {
    let d = c.len();
    if d == 0 || d > KHINTCHINE_GUARD {
        return Err(Error::InvalidParameter(format!(
            "Khintchine dimension {d} outside [1, {KHINTCHINE_GUARD}]"
        )));
    }
    let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidParameter("zero coefficient vector".into()));
    }
    let sums: Vec<f64> = (0..1usize << d)
        .map(|signs| {
            c.iter()
                .enumerate()
                .map(|(i, x)| if signs >> i & 1 == 1 { -x } else { *x })
                .sum::<f64>()
                .abs()
        })
        .collect();
    Ok(pairwise_sum(&sums) / sums.len() as f64 / norm)
}
