//! The discretized torus `Z_K^N` standing in for `T^N`: frequency-side
//! characterizations of analytic and m-last Hardy spaces, and the Bohr lift
//! of Dirichlet polynomials.

mod bohr;
mod spectrum;

pub use bohr::{
    bohr_drop, bohr_lift, dirichlet_prime_projection, factorize, lift_to_torus, mask_support, nth_primes,
    BohrLift, DirichletPolynomial, PrimeSieve, SparseFrequency,
};
pub use spectrum::{
    character, inverse_spectrum, project_mlast, spectrum, trig_polynomial, TorusSpectrum, SPECTRAL_TOL,
};

use crate::error::{Error, Result};
use crate::scalar::ScalarMode;
use crate::space::{CoordSubset, FiniteFactor, ProductSpace};

/// `N` uniform `K`-point factors.
pub fn torus_space(k: usize, n: usize, mode: ScalarMode) -> Result<ProductSpace> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("torus modulus K = {k} must be at least 2")));
    }
    ProductSpace::power(&FiniteFactor::uniform(k)?, n, mode)
}

/// The common modulus `K` of a torus-type space.
pub fn torus_modulus(space: &ProductSpace) -> Result<usize> {
    let k = match space.factors().first() {
        Some(f) => f.outcome_count(),
        None => return Err(Error::NotTorus("no coordinates".into())),
    };
    for (j, f) in space.factors().iter().enumerate() {
        if f.outcome_count() != k || !f.is_uniform() {
            return Err(Error::NotTorus(format!("factor {} is not uniform on Z_{k}", j + 1)));
        }
    }
    if k < 2 {
        return Err(Error::NotTorus("modulus below 2".into()));
    }
    Ok(k)
}

/// Representative of residue `j` in `(−K/2, K/2]`.
pub fn symmetric(j: usize, k: usize) -> i64 {
    if 2 * j <= k { j as i64 } else { j as i64 - k as i64 }
}

/// Residue of a frequency entry modulo `K`.
pub fn residue(entry: i64, k: usize) -> usize {
    entry.rem_euclid(k as i64) as usize
}

/// Largest admissible `|entry|`, excluding the Nyquist row for even `K`.
pub fn band_limit(k: usize) -> i64 {
    ((k - 1) / 2) as i64
}

fn check_entry(entry: i64, k: usize) -> Result<()> {
    if k % 2 == 0 && entry.unsigned_abs() as usize == k / 2 {
        return Err(Error::Nyquist { entry, modulus: k });
    }
    if entry.abs() > band_limit(k) {
        return Err(Error::InvalidParameter(format!("frequency entry {entry} outside the band of Z_{k}")));
    }
    Ok(())
}

pub fn frequency_support(freq: &[i64]) -> CoordSubset {
    CoordSubset::from_mask(freq.iter().enumerate().filter(|(_, e)| **e != 0).fold(0, |m, (j, _)| m | 1 << j))
}

/// Whether the character `e^{i⟨n,t⟩}` lies in the m-last Hardy space: the `m`
/// largest-index nonzero entries are positive, or, with fewer than `m` nonzero
/// entries, every entry is nonnegative.
pub fn mlast_member(freq: &[i64], m: usize, k: usize) -> Result<bool> {
    for &e in freq {
        check_entry(e, k)?;
    }
    let nonzero: Vec<i64> = freq.iter().copied().filter(|e| *e != 0).collect();
    Ok(if nonzero.len() >= m {
        nonzero[nonzero.len() - m..].iter().all(|e| *e > 0)
    } else {
        nonzero.iter().all(|e| *e > 0)
    })
}
