use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use super::{band_limit, torus_space, trig_polynomial};
use crate::error::{Error, Result};
use crate::scalar::ScalarMode;
use crate::tensor::TensorFunction;

/// `Σ b_n n^{−s}` with finitely many nonzero `b_n`, `n ≥ 1`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DirichletPolynomial {
    coeffs: BTreeMap<u64, Complex64>,
}

impl DirichletPolynomial {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (u64, Complex64)>) -> Result<Self> {
        let mut d = Self::new();
        for (n, b) in terms {
            d.insert(n, b)?;
        }
        Ok(d)
    }

    pub fn insert(&mut self, n: u64, b: Complex64) -> Result<()> {
        if n == 0 {
            return Err(Error::InvalidParameter("Dirichlet index must be at least 1".into()));
        }
        self.coeffs.insert(n, b);
        Ok(())
    }

    pub fn get(&self, n: u64) -> Option<Complex64> {
        self.coeffs.get(&n).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, Complex64)> + '_ {
        self.coeffs.iter().map(|(n, b)| (*n, *b))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn max_index(&self) -> u64 {
        self.coeffs.keys().next_back().copied().unwrap_or(1)
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.values().map(|b| b.norm_sqr()).sum()
    }
}

/// Smallest-prime-factor table on `[0, limit]`.
#[derive(Clone, Debug)]
pub struct PrimeSieve {
    spf: Vec<u32>,
    primes: Vec<u64>,
}

impl PrimeSieve {
    pub fn new(limit: u64) -> Self {
        let limit = limit.max(2) as usize;
        let mut spf = vec![0u32; limit + 1];
        let mut primes = Vec::new();
        for i in 2..=limit {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u64);
            }
            for &p in &primes {
                let j = p as usize * i;
                if p as u32 > spf[i] || j > limit {
                    break;
                }
                spf[j] = p as u32;
            }
        }
        Self { spf, primes }
    }

    pub fn limit(&self) -> u64 {
        (self.spf.len() - 1) as u64
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// `n = Π p_j^{k_j}` as `(j, k_j)` with `j` the 0-based prime index.
    pub fn factorize(&self, mut n: u64) -> SparseFrequency {
        assert!(n >= 1 && n <= self.limit(), "{n} outside the sieve");
        let mut out: SparseFrequency = Vec::new();
        while n > 1 {
            let p = self.spf[n as usize] as u64;
            let j = self.primes.partition_point(|q| *q < p);
            match out.last_mut() {
                Some((i, k)) if *i == j => *k += 1,
                _ => out.push((j, 1)),
            }
            n /= p;
        }
        out
    }

    /// Number of distinct prime factors.
    pub fn omega(&self, n: u64) -> usize {
        self.factorize(n).len()
    }
}

/// Sorted nonzero entries `(prime index, exponent)` of an exponent vector.
pub type SparseFrequency = Vec<(usize, u32)>;

pub fn factorize(n: u64) -> Result<SparseFrequency> {
    if n == 0 {
        return Err(Error::InvalidParameter("cannot factorize 0".into()));
    }
    Ok(PrimeSieve::new(n).factorize(n))
}

/// The first `count` primes.
pub fn nth_primes(count: usize) -> Vec<u64> {
    let mut limit = 16u64;
    loop {
        let sieve = PrimeSieve::new(limit);
        if sieve.primes().len() >= count {
            return sieve.primes()[..count].to_vec();
        }
        limit *= 2;
    }
}

/// Torus coefficients `a_k = b_n` indexed by the prime-exponent vector of `n`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BohrLift {
    pub coeffs: BTreeMap<SparseFrequency, Complex64>,
}

impl BohrLift {
    /// Number of prime coordinates touched.
    pub fn n_primes(&self) -> usize {
        self.coeffs.keys().filter_map(|f| f.last().map(|(j, _)| j + 1)).max().unwrap_or(0)
    }

    /// Exponent vector padded to `len` coordinates.
    pub fn dense(freq: &SparseFrequency, len: usize) -> Vec<i64> {
        let mut v = vec![0; len];
        for (j, k) in freq {
            v[*j] = *k as i64;
        }
        v
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.values().map(|b| b.norm_sqr()).sum()
    }
}

pub fn bohr_lift(d: &DirichletPolynomial) -> BohrLift {
    let sieve = PrimeSieve::new(d.max_index());
    BohrLift { coeffs: d.iter().map(|(n, b)| (sieve.factorize(n), b)).collect() }
}

pub fn bohr_drop(lift: &BohrLift) -> Result<DirichletPolynomial> {
    let primes = nth_primes(lift.n_primes());
    let overflow = || Error::InvalidParameter("Dirichlet index overflows u64".into());
    let mut d = DirichletPolynomial::new();
    for (freq, b) in &lift.coeffs {
        let mut n: u64 = 1;
        for (j, k) in freq {
            let pk = primes[*j].checked_pow(*k).ok_or_else(overflow)?;
            n = n.checked_mul(pk).ok_or_else(overflow)?;
        }
        d.insert(n, *b)?;
    }
    Ok(d)
}

/// Keeps `b_n` iff `n` has at most `m` distinct prime factors.
pub fn dirichlet_prime_projection(d: &DirichletPolynomial, m: usize) -> DirichletPolynomial {
    let sieve = PrimeSieve::new(d.max_index());
    DirichletPolynomial { coeffs: d.iter().filter(|(n, _)| sieve.omega(*n) <= m).collect() }
}

/// Keeps lifted coefficients whose frequency support has at most `m` coordinates.
pub fn mask_support(lift: &BohrLift, m: usize) -> BohrLift {
    BohrLift { coeffs: lift.coeffs.iter().filter(|(f, _)| f.len() <= m).map(|(f, b)| (f.clone(), *b)).collect() }
}

/// Evaluates the lift as a trigonometric polynomial on `Z_K^P`, `P` the number of
/// primes involved. Every exponent must sit strictly inside the band of `Z_K`.
pub fn lift_to_torus(d: &DirichletPolynomial, k: usize) -> Result<TensorFunction<Complex64>> {
    let lift = bohr_lift(d);
    let n = lift.n_primes().max(1);
    let space = Arc::new(torus_space(k, n, ScalarMode::Complex)?);
    let mut terms = Vec::with_capacity(lift.coeffs.len());
    for (freq, b) in &lift.coeffs {
        if freq.iter().any(|(_, e)| *e as i64 > band_limit(k)) {
            return Err(Error::InvalidParameter(format!("exponent exceeds the band of Z_{k}")));
        }
        terms.push((BohrLift::dense(freq, n), *b));
    }
    trig_polynomial(space, &terms)
}
