use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{check_entry, residue, symmetric, torus_modulus, mlast_member};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::ProductSpace;
use crate::tensor::TensorFunction;

/// Coefficients below this modulus count as absent when checking band limits.
pub const SPECTRAL_TOL: f64 = 1e-10;

/// `f̂(n) = E f(x) e^{−2πi⟨n,x⟩/K}`, stored densely by residue in atom order.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusSpectrum {
    pub modulus: usize,
    pub n_coords: usize,
    coeffs: Vec<Complex64>,
}

impl TorusSpectrum {
    fn index(&self, freq: &[i64]) -> Result<usize> {
        if freq.len() != self.n_coords {
            return Err(Error::InvalidParameter(format!(
                "frequency of length {} on {} coordinates",
                freq.len(),
                self.n_coords
            )));
        }
        Ok(freq.iter().fold(0, |acc, e| acc * self.modulus + residue(*e, self.modulus)))
    }

    fn frequency(&self, mut index: usize) -> Vec<i64> {
        let mut freq = vec![0; self.n_coords];
        for slot in freq.iter_mut().rev() {
            *slot = symmetric(index % self.modulus, self.modulus);
            index /= self.modulus;
        }
        freq
    }

    pub fn coeff(&self, freq: &[i64]) -> Result<Complex64> {
        Ok(self.coeffs[self.index(freq)?])
    }

    pub fn set(&mut self, freq: &[i64], c: Complex64) -> Result<()> {
        let i = self.index(freq)?;
        self.coeffs[i] = c;
        Ok(())
    }

    /// Every coefficient with its symmetric frequency, in atom order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<i64>, Complex64)> + '_ {
        self.coeffs.iter().enumerate().map(|(i, c)| (self.frequency(i), *c))
    }

    /// Coefficients of modulus above `tol`.
    pub fn entries(&self, tol: f64) -> Vec<(Vec<i64>, Complex64)> {
        self.iter().filter(|(_, c)| c.norm() > tol).collect()
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// No coefficient above `tol` sits on a Nyquist row.
    pub fn is_band_limited(&self, tol: f64) -> bool {
        let k = self.modulus;
        self.iter().all(|(n, c)| c.norm() <= tol || n.iter().all(|e| check_entry(*e, k).is_ok()))
    }

    /// Zeroes every coefficient whose frequency fails `keep`.
    pub fn mask(&mut self, mut keep: impl FnMut(&[i64]) -> bool) {
        for i in 0..self.coeffs.len() {
            let freq = self.frequency(i);
            if !keep(&freq) {
                self.coeffs[i] = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn empty(modulus: usize, n_coords: usize) -> Self {
        Self { modulus, n_coords, coeffs: vec![Complex64::new(0.0, 0.0); modulus.pow(n_coords as u32)] }
    }
}

/// Unnormalized DFT along every axis of a row-major `K^N` array.
fn dft_axes(data: &mut [Complex64], k: usize, n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(k) } else { planner.plan_fft_forward(k) };
    let mut line = vec![Complex64::new(0.0, 0.0); k];
    let mut stride = 1;
    for _ in 0..n {
        let block = stride * k;
        for base in (0..data.len()).step_by(block) {
            for i in 0..stride {
                for (t, v) in line.iter_mut().enumerate() {
                    *v = data[base + t * stride + i];
                }
                fft.process(&mut line);
                for (t, v) in line.iter().enumerate() {
                    data[base + t * stride + i] = *v;
                }
            }
        }
        stride = block;
    }
}

pub fn spectrum<S: Scalar>(f: &TensorFunction<S>) -> Result<TorusSpectrum> {
    let k = torus_modulus(f.space())?;
    let n = f.n_coords();
    let mut data: Vec<Complex64> = f.values().iter().map(S::to_complex).collect();
    dft_axes(&mut data, k, n, false);
    let scale = 1.0 / data.len() as f64;
    for v in &mut data {
        *v *= scale;
    }
    Ok(TorusSpectrum { modulus: k, n_coords: n, coeffs: data })
}

/// `f(x) = Σ_n f̂(n) e^{2πi⟨n,x⟩/K}` on `space`.
pub fn inverse_spectrum(spec: &TorusSpectrum, space: Arc<ProductSpace>) -> Result<TensorFunction<Complex64>> {
    if torus_modulus(&space)? != spec.modulus || space.n_coords() != spec.n_coords {
        return Err(Error::SpaceMismatch);
    }
    let mut data = spec.coeffs.clone();
    dft_axes(&mut data, spec.modulus, spec.n_coords, true);
    TensorFunction::new(space, data)
}

/// The character `x ↦ e^{2πi⟨n,x⟩/K}`.
pub fn character(space: Arc<ProductSpace>, freq: &[i64]) -> Result<TensorFunction<Complex64>> {
    trig_polynomial(space, &[(freq.to_vec(), Complex64::new(1.0, 0.0))])
}

/// `Σ c_n e^{2πi⟨n,x⟩/K}`, evaluated pointwise.
pub fn trig_polynomial(space: Arc<ProductSpace>, terms: &[(Vec<i64>, Complex64)]) -> Result<TensorFunction<Complex64>> {
    let k = torus_modulus(&space)?;
    for (n, _) in terms {
        if n.len() != space.n_coords() {
            return Err(Error::InvalidParameter("frequency length differs from N".into()));
        }
    }
    TensorFunction::from_fn(space, |x| {
        terms
            .iter()
            .map(|(n, c)| {
                let phase = n.iter().zip(x).map(|(e, xi)| e * *xi as i64).sum::<i64>().rem_euclid(k as i64);
                c * Complex64::from_polar(1.0, TAU * phase as f64 / k as f64)
            })
            .sum()
    })
}

/// Spectral masking onto the m-last Hardy space. Inputs carrying energy on a
/// Nyquist row are rejected.
pub fn project_mlast<S: Scalar>(f: &TensorFunction<S>, m: usize) -> Result<TensorFunction<Complex64>> {
    let mut spec = spectrum(f)?;
    let k = spec.modulus;
    let tol = SPECTRAL_TOL * f.sup_modulus().max(1.0);
    for (n, c) in spec.iter() {
        if c.norm() > tol {
            mlast_member(&n, m, k)?;
        }
    }
    spec.mask(|n| n.iter().all(|e| check_entry(*e, k).is_ok()) && mlast_member(n, m, k).unwrap_or(false));
    inverse_spectrum(&spec, f.space().clone())
}
