//! Seeded random inputs: dense functions, adapted tuples and band-limited torus
//! polynomials. Every stochastic path draws from a ChaCha substream derived from
//! a master seed, so results do not depend on scheduling.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::decoupling::AdaptedTuple;
use crate::error::{Error, Result};
use crate::scalar::{rational, Rational};
use crate::space::{FiniteFactor, ProductSpace};
use crate::tensor::TensorFunction;
use crate::torus::{band_limit, inverse_spectrum, mlast_member, symmetric, torus_modulus, TorusSpectrum};

pub type SampleRng = ChaCha8Rng;

/// Independent stream `stream` of the master `seed`.
pub fn substream(seed: u64, stream: u64) -> SampleRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn sample_outcome(factor: &FiniteFactor, rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in factor.weights().iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    factor.weights().iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn complex_normal(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(normal(rng), normal(rng)) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_real(space: Arc<ProductSpace>, rng: &mut impl Rng) -> Result<TensorFunction<f64>> {
    let values = (0..space.atom_count()).map(|_| normal(rng)).collect();
    TensorFunction::new(space, values)
}

pub fn random_complex(space: Arc<ProductSpace>, rng: &mut impl Rng) -> Result<TensorFunction<Complex64>> {
    let values = (0..space.atom_count()).map(|_| complex_normal(rng)).collect();
    TensorFunction::new(space, values)
}

/// Values `p/den` with `|p| ≤ 3·den`.
pub fn random_rational(space: Arc<ProductSpace>, den: i64, rng: &mut impl Rng) -> Result<TensorFunction<Rational>> {
    let values = (0..space.atom_count()).map(|_| rational(rng.random_range(-3 * den..=3 * den), den)).collect();
    TensorFunction::new(space, values)
}

/// `f − Ef` for a random real `f`.
pub fn random_mean_zero(space: Arc<ProductSpace>, rng: &mut impl Rng) -> Result<TensorFunction<f64>> {
    let f = random_real(space, rng)?;
    let m = f.expectation();
    f.map(|v| v - m)
}

/// A function of the first `k` coordinates, i.i.d. standard normal per cell.
pub fn random_prefix_function(space: Arc<ProductSpace>, k: usize, rng: &mut impl Rng) -> Result<TensorFunction<f64>> {
    let cells: usize = space.shape()[..k].iter().product();
    let table: Vec<f64> = (0..cells).map(|_| normal(rng)).collect();
    let shape = space.shape().to_vec();
    TensorFunction::from_fn(space, |x| {
        let idx = x[..k].iter().zip(&shape).fold(0, |acc, (xi, s)| acc * s + xi);
        table[idx]
    })
}

pub fn random_adapted_tuple(space: Arc<ProductSpace>, rng: &mut impl Rng) -> Result<AdaptedTuple<f64>> {
    let funcs = (1..=space.n_coords())
        .map(|k| random_prefix_function(space.clone(), k, rng))
        .collect::<Result<Vec<_>>>()?;
    AdaptedTuple::new(space, funcs)
}

/// `X_k` depending on coordinate `k` only.
pub fn random_independent_tuple(space: Arc<ProductSpace>, rng: &mut impl Rng) -> Result<AdaptedTuple<f64>> {
    let funcs = (1..=space.n_coords())
        .map(|k| {
            let table: Vec<f64> = (0..space.factor(k).outcome_count()).map(|_| normal(rng)).collect();
            TensorFunction::of_coordinate(space.clone(), k, &table)
        })
        .collect::<Result<Vec<_>>>()?;
    AdaptedTuple::new(space, funcs)
}

/// Which frequencies a torus sampler may populate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrequencyMask {
    /// Everything strictly inside the band.
    Band,
    /// Every entry nonnegative.
    Analytic,
    /// m-last Hardy frequencies.
    MLast(usize),
}

impl FrequencyMask {
    pub fn admits(self, freq: &[i64], k: usize) -> bool {
        let band = band_limit(k);
        if freq.iter().any(|e| e.abs() > band) {
            return false;
        }
        match self {
            FrequencyMask::Band => true,
            FrequencyMask::Analytic => freq.iter().all(|e| *e >= 0),
            FrequencyMask::MLast(m) => mlast_member(freq, m, k).unwrap_or(false),
        }
    }
}

/// Complex-normal coefficients on every admitted frequency with `|entry| ≤ degree`.
pub fn random_torus_polynomial(
    space: Arc<ProductSpace>,
    mask: FrequencyMask,
    degree: i64,
    rng: &mut impl Rng,
) -> Result<TensorFunction<Complex64>> {
    let k = torus_modulus(&space)?;
    if degree < 0 {
        return Err(Error::InvalidParameter("negative degree".into()));
    }
    let n = space.n_coords();
    let mut spec = TorusSpectrum::empty(k, n);
    for index in 0..space.atom_count() {
        let freq: Vec<i64> = space.atom_coords(index).into_iter().map(|j| symmetric(j, k)).collect();
        if freq.iter().all(|e| e.abs() <= degree) && mask.admits(&freq, k) {
            spec.set(&freq, complex_normal(rng))?;
        }
    }
    inverse_spectrum(&spec, space)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ScalarMode;
    use crate::space::CoordSubset;
    use crate::torus::{spectrum, torus_space};

    #[test]
    fn substreams_differ_and_repeat() {
        let a: Vec<u64> = (0..4).map(|_| substream(7, 0).random()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        let x: u64 = substream(7, 0).random();
        let y: u64 = substream(7, 1).random();
        assert_ne!(x, y);
    }

    #[test]
    fn outcome_sampling_respects_zero_weight() {
        let f = FiniteFactor::new(vec![0.0, 1.0]).unwrap();
        let mut rng = substream(1, 0);
        assert!((0..100).all(|_| sample_outcome(&f, &mut rng) == 1));
    }

    #[test]
    fn prefix_functions_are_measurable() {
        let s = ProductSpace::uniform(3, 3, ScalarMode::Real).unwrap().shared();
        let mut rng = substream(3, 0);
        let f = random_prefix_function(s, 2, &mut rng).unwrap();
        assert!(f.is_measurable(CoordSubset::interval(1, 2)).unwrap());
        assert!(!f.is_measurable(CoordSubset::interval(1, 1)).unwrap());
    }

    #[test]
    fn torus_samples_stay_in_mask() {
        let s = torus_space(8, 3, ScalarMode::Complex).unwrap().shared();
        let mut rng = substream(5, 0);
        let f = random_torus_polynomial(s, FrequencyMask::MLast(2), 3, &mut rng).unwrap();
        for (n, c) in spectrum(&f).unwrap().entries(1e-10) {
            assert!(mlast_member(&n, 2, 8).unwrap(), "{n:?} {c}");
        }
    }
}
