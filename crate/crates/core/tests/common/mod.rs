#![allow(dead_code)]

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use hoeffding::{CoordSubset, ProductSpace, Scalar, ScalarMode, TensorFunction};
use num_complex::Complex64;

/// `E[f | coordinates in b]` by grouping atoms on their `b`-restriction.
pub fn cond_exp<S: Scalar>(f: &TensorFunction<S>, b: CoordSubset) -> Vec<S> {
    let space = f.space();
    let n = space.n_coords();
    let key = |x: &[usize]| -> Vec<usize> { (1..=n).filter(|c| b.contains(*c)).map(|c| x[c - 1]).collect() };
    let mut sums: HashMap<Vec<usize>, S> = HashMap::new();
    for (i, v) in f.values().iter().enumerate() {
        let x = space.atom_coords(i);
        let mut w = S::one();
        for c in 1..=n {
            if !b.contains(c) {
                w = w * S::weight(space.factor(c), x[c - 1]);
            }
        }
        let e = sums.entry(key(&x)).or_insert_with(S::zero);
        *e = e.clone() + w * v.clone();
    }
    (0..space.atom_count()).map(|i| sums[&key(&space.atom_coords(i))].clone()).collect()
}

/// `P_A f = Σ_{B ⊆ A} (−1)^{|A∖B|} E[f | B]`.
pub fn component<S: Scalar>(f: &TensorFunction<S>, a: CoordSubset) -> TensorFunction<S> {
    let mut acc = vec![S::zero(); f.values().len()];
    for b in a.subsets() {
        let sign = if (a.len() - b.len()) % 2 == 0 { S::one() } else { -S::one() };
        for (slot, v) in acc.iter_mut().zip(cond_exp(f, b)) {
            *slot = slot.clone() + sign.clone() * v;
        }
    }
    TensorFunction::new(f.space().clone(), acc).unwrap()
}

/// Every `P_A f`, indexed by mask.
pub fn all_components<S: Scalar>(f: &TensorFunction<S>) -> Vec<TensorFunction<S>> {
    f.space().all_coords().subsets().map(|a| component(f, a)).collect()
}

pub fn multiplicity<S: Scalar>(f: &TensorFunction<S>, m: usize) -> TensorFunction<S> {
    let n = f.n_coords();
    let mut acc = TensorFunction::zeros(f.space().clone()).unwrap();
    for a in CoordSubset::of_size(n, m) {
        acc.add_assign(&component(f, a)).unwrap();
    }
    acc
}

/// `r_i(x) = +1` at outcome 0 and `−1` at outcome 1.
pub fn walsh_function<S: Scalar>(space: &Arc<ProductSpace>, a: CoordSubset) -> TensorFunction<S> {
    TensorFunction::from_fn(space.clone(), |x| {
        let odd = a.iter().filter(|c| x[c - 1] == 1).count() % 2 == 1;
        if odd {
            -S::one()
        } else {
            S::one()
        }
    })
    .unwrap()
}

pub fn walsh_coefficient<S: Scalar>(f: &TensorFunction<S>, a: CoordSubset) -> S {
    let w = walsh_function::<S>(f.space(), a);
    let count = f.values().len() as u64;
    let sum = f.values().iter().zip(w.values()).fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone());
    sum * S::from_ratio(1, count)
}

/// `ĉ(k) = K^{−N} Σ_x f(x) e^{−2πi⟨k, x⟩/K}` by direct summation; keys are residues.
pub fn naive_dft(f: &TensorFunction<Complex64>, k: usize) -> Vec<(Vec<usize>, Complex64)> {
    let space = f.space();
    let atoms = space.atom_count();
    (0..atoms)
        .map(|fi| {
            let freq = space.atom_coords(fi);
            let mut acc = Complex64::new(0.0, 0.0);
            for (xi, v) in f.values().iter().enumerate() {
                let x = space.atom_coords(xi);
                let phase: usize = freq.iter().zip(&x).map(|(a, b)| a * b).sum::<usize>() % k;
                acc += v * Complex64::from_polar(1.0, -2.0 * PI * phase as f64 / k as f64);
            }
            (freq, acc / atoms as f64)
        })
        .collect()
}

pub fn rational_space(k: usize, n: usize) -> Arc<ProductSpace> {
    ProductSpace::uniform(k, n, ScalarMode::Rational).unwrap().shared()
}

pub fn real_space(k: usize, n: usize) -> Arc<ProductSpace> {
    ProductSpace::uniform(k, n, ScalarMode::Real).unwrap().shared()
}

pub fn max_diff<S: Scalar>(a: &[S], b: &[S]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.to_complex() - y.to_complex()).norm()).fold(0.0, f64::max)
}
