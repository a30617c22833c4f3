//! Finite probability factors, their products, and coordinate subsets.

use std::fmt;
use std::sync::Arc;

use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{Rational, ScalarMode};

/// Default ceiling on the number of atoms in a product space.
pub const DEFAULT_ATOM_GUARD: u64 = 1 << 24;

const FLOAT_WEIGHT_TOL: f64 = 1e-10;

/// A finite probability space: `outcome_count` outcomes with a weight each.
///
/// Exact factors keep their rational weights so that rational-mode
/// computations never see a rounded probability.
#[derive(Clone, Debug)]
pub struct FiniteFactor {
    weights: Vec<f64>,
    exact: Option<Vec<Rational>>,
}

impl FiniteFactor {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidFactor("outcome_count must be at least 1".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidFactor(format!("weight {w} is not a probability")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > FLOAT_WEIGHT_TOL {
            return Err(Error::WeightSum { sum: sum.to_string() });
        }
        Ok(Self { weights, exact: None })
    }

    pub fn exact(weights: Vec<Rational>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidFactor("outcome_count must be at least 1".into()));
        }
        if let Some(w) = weights.iter().find(|w| *w < &Rational::zero()) {
            return Err(Error::InvalidFactor(format!("weight {w} is negative")));
        }
        let sum: Rational = weights.iter().cloned().sum();
        if sum != Rational::from_integer(1.into()) {
            return Err(Error::WeightSum { sum: sum.to_string() });
        }
        let float = weights.iter().map(|w| w.to_f64().unwrap_or(f64::NAN)).collect();
        Ok(Self { weights: float, exact: Some(weights) })
    }

    /// Uniform weights `1/k`, stored exactly.
    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidFactor("outcome_count must be at least 1".into()));
        }
        Self::exact(vec![crate::scalar::rational(1, k as i64); k])
    }

    pub fn outcome_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn exact_weights(&self) -> Option<&[Rational]> {
        self.exact.as_deref()
    }

    pub fn is_uniform(&self) -> bool {
        let k = self.outcome_count();
        match &self.exact {
            Some(w) => w.iter().all(|x| *x == crate::scalar::rational(1, k as i64)),
            None => self.weights.iter().all(|w| (w - 1.0 / k as f64).abs() <= 1e-12),
        }
    }
}

impl PartialEq for FiniteFactor {
    fn eq(&self, other: &Self) -> bool {
        match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => a == b,
            _ => self.weights == other.weights,
        }
    }
}

/// A finite product `Ω_1 × … × Ω_N` with its product measure.
///
/// Atoms are laid out row-major with the last coordinate varying fastest.
#[derive(Clone, Debug)]
pub struct ProductSpace {
    factors: Vec<FiniteFactor>,
    mode: ScalarMode,
    shape: Vec<usize>,
    strides: Vec<usize>,
    atoms: usize,
}

impl ProductSpace {
    pub fn new(factors: Vec<FiniteFactor>, mode: ScalarMode) -> Result<Self> {
        Self::with_guard(factors, mode, DEFAULT_ATOM_GUARD)
    }

    pub fn with_guard(factors: Vec<FiniteFactor>, mode: ScalarMode, guard: u64) -> Result<Self> {
        if mode == ScalarMode::Rational {
            if let Some(i) = factors.iter().position(|f| f.exact.is_none()) {
                return Err(Error::ScalarMode(format!(
                    "factor {} has floating-point weights in rational mode",
                    i + 1
                )));
            }
        }
        let shape: Vec<usize> = factors.iter().map(FiniteFactor::outcome_count).collect();
        let atoms = shape.iter().map(|&k| k as u128).product::<u128>();
        if atoms > guard as u128 {
            return Err(Error::AtomGuard { atoms, limit: guard });
        }
        let mut strides = vec![1usize; shape.len()];
        for i in (0..shape.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * shape[i + 1];
        }
        Ok(Self { factors, mode, shape, strides, atoms: atoms as usize })
    }

    /// `n` copies of `factor`.
    pub fn power(factor: &FiniteFactor, n: usize, mode: ScalarMode) -> Result<Self> {
        Self::new(vec![factor.clone(); n], mode)
    }

    /// `n` uniform `k`-point factors.
    pub fn uniform(k: usize, n: usize, mode: ScalarMode) -> Result<Self> {
        Self::power(&FiniteFactor::uniform(k)?, n, mode)
    }

    pub fn shared(self) -> Arc<Self> {
        Arc::new(self)
    }

    pub fn factors(&self) -> &[FiniteFactor] {
        &self.factors
    }

    pub fn factor(&self, coord: usize) -> &FiniteFactor {
        &self.factors[coord - 1]
    }

    pub fn mode(&self) -> ScalarMode {
        self.mode
    }

    pub fn n_coords(&self) -> usize {
        self.factors.len()
    }

    pub fn atom_count(&self) -> usize {
        self.atoms
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Outcome of each coordinate at a flat atom index.
    pub fn atom_coords(&self, index: usize) -> Vec<usize> {
        self.shape
            .iter()
            .zip(&self.strides)
            .map(|(&k, &s)| (index / s) % k)
            .collect()
    }

    pub fn atom_index(&self, outcomes: &[usize]) -> usize {
        outcomes.iter().zip(&self.strides).map(|(o, s)| o * s).sum()
    }

    /// Floating-point probability of every atom, in layout order.
    pub fn atom_weights(&self) -> Vec<f64> {
        let mut w = vec![1.0; self.atoms];
        for (idx, wt) in w.iter_mut().enumerate() {
            for (c, f) in self.factors.iter().enumerate() {
                *wt *= f.weights[(idx / self.strides[c]) % self.shape[c]];
            }
        }
        w
    }

    /// Checks `coords` against `[1, N]`.
    pub fn check_subset(&self, set: CoordSubset) -> Result<()> {
        match set.members().into_iter().find(|&c| c > self.n_coords()) {
            Some(c) => Err(Error::CoordOutOfRange { coord: c, n: self.n_coords() }),
            None => Ok(()),
        }
    }

    pub fn all_coords(&self) -> CoordSubset {
        CoordSubset::full(self.n_coords())
    }

    /// Product with another space; coordinates of `other` follow those of `self`.
    pub fn product(&self, other: &ProductSpace) -> Result<ProductSpace> {
        let mode = if self.mode == other.mode { self.mode } else {
            return Err(Error::ScalarMode(format!(
                "cannot multiply a {} space with a {} space",
                self.mode.as_str(),
                other.mode.as_str()
            )));
        };
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        ProductSpace::new(factors, mode)
    }

    /// Sub-product on the listed coordinates, in the listed order.
    pub fn restrict(&self, coords: &[usize]) -> Result<ProductSpace> {
        let factors = coords.iter().map(|&c| self.factor(c).clone()).collect();
        ProductSpace::new(factors, self.mode)
    }

    pub fn same_measure(&self, other: &ProductSpace) -> bool {
        self.factors == other.factors
    }
}

impl PartialEq for ProductSpace {
    fn eq(&self, other: &Self) -> bool {
        self.mode == other.mode && self.factors == other.factors
    }
}

/// A set of coordinates in `[1, 64]`, stored as a bitmask (bit `j` ⇔ coordinate `j+1`).
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoordSubset(u64);

impl CoordSubset {
    pub const EMPTY: CoordSubset = CoordSubset(0);

    pub fn new(coords: &[usize]) -> Result<Self> {
        let mut mask = 0u64;
        for &c in coords {
            if c == 0 || c > 64 {
                return Err(Error::CoordOutOfRange { coord: c, n: 64 });
            }
            mask |= 1 << (c - 1);
        }
        Ok(Self(mask))
    }

    pub fn from_mask(mask: u64) -> Self {
        Self(mask)
    }

    pub fn singleton(coord: usize) -> Self {
        debug_assert!((1..=64).contains(&coord));
        Self(1 << (coord - 1))
    }

    pub fn full(n: usize) -> Self {
        if n >= 64 { Self(u64::MAX) } else { Self((1u64 << n) - 1) }
    }

    /// `[a, b]`; empty when `a > b`.
    pub fn interval(a: usize, b: usize) -> Self {
        if a > b || b == 0 {
            return Self::EMPTY;
        }
        let a = a.max(1);
        Self(Self::full(b).0 & !Self::full(a - 1).0)
    }

    pub fn mask(self) -> u64 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, coord: usize) -> bool {
        coord >= 1 && coord <= 64 && self.0 & (1 << (coord - 1)) != 0
    }

    pub fn members(self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut m = self.0;
        std::iter::from_fn(move || {
            if m == 0 {
                return None;
            }
            let j = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(j + 1)
        })
    }

    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize + 1)
    }

    pub fn last(self) -> Option<usize> {
        (self.0 != 0).then(|| 64 - self.0.leading_zeros() as usize)
    }

    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        Self(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        Self(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// All subsets of `self`, in increasing mask order.
    pub fn subsets(self) -> impl Iterator<Item = CoordSubset> {
        let full = self.0;
        let mut next = Some(0u64);
        std::iter::from_fn(move || {
            let cur = next?;
            // standard submask successor in increasing order
            next = if cur == full { None } else { Some(((cur | !full).wrapping_add(1)) & full) };
            Some(CoordSubset(cur))
        })
    }

    /// Subsets of `[1, n]` of size `k`, in increasing mask order.
    pub fn of_size(n: usize, k: usize) -> impl Iterator<Item = CoordSubset> {
        let limit = if n >= 64 { u64::MAX } else { 1u64 << n };
        let mut next = if k > n {
            None
        } else if k == 0 {
            Some(0)
        } else {
            Some((1u64 << k) - 1)
        };
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == 0 {
                None
            } else {
                // Gosper's hack
                let c = cur & cur.wrapping_neg();
                let r = cur.wrapping_add(c);
                let nxt = (((r ^ cur) >> 2) / c) | r;
                (r != 0 && nxt < limit).then_some(nxt)
            };
            Some(CoordSubset(cur))
        })
    }
}

impl fmt::Debug for CoordSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for CoordSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m: Vec<String> = self.iter().map(|c| c.to_string()).collect();
        write!(f, "{{{}}}", m.join(","))
    }
}

impl Serialize for CoordSubset {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.members().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoordSubset {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let coords = Vec::<usize>::deserialize(d)?;
        CoordSubset::new(&coords).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;

    #[test]
    fn fair_coin_square_has_quarter_atoms() {
        let s = ProductSpace::uniform(2, 2, ScalarMode::Rational).unwrap();
        assert_eq!(s.atom_count(), 4);
        assert!(s.atom_weights().iter().all(|&w| w == 0.25));
    }

    #[test]
    fn biased_cube_atom_weight() {
        let f = FiniteFactor::new(vec![0.3, 0.7]).unwrap();
        let s = ProductSpace::power(&f, 3, ScalarMode::Real).unwrap();
        assert_eq!(s.atom_count(), 8);
        assert!((s.atom_weights()[0] - 0.027).abs() < 1e-15);
    }

    #[test]
    fn weight_sum_violation() {
        assert!(matches!(FiniteFactor::new(vec![0.3, 0.6]), Err(Error::WeightSum { .. })));
        assert!(matches!(
            FiniteFactor::exact(vec![rational(1, 3), rational(1, 3)]),
            Err(Error::WeightSum { .. })
        ));
        assert!(FiniteFactor::new(vec![]).is_err());
        assert!(FiniteFactor::new(vec![-0.5, 1.5]).is_err());
    }

    #[test]
    fn atom_guard() {
        let err = ProductSpace::uniform(2, 25, ScalarMode::Real).unwrap_err();
        assert!(matches!(err, Error::AtomGuard { .. }));
        assert!(ProductSpace::with_guard(vec![FiniteFactor::uniform(3).unwrap(); 3], ScalarMode::Real, 26).is_err());
    }

    #[test]
    fn rational_mode_requires_exact_weights() {
        let f = FiniteFactor::new(vec![0.5, 0.5]).unwrap();
        assert!(ProductSpace::power(&f, 2, ScalarMode::Rational).is_err());
    }

    #[test]
    fn layout_last_coordinate_fastest() {
        let s = ProductSpace::new(
            vec![FiniteFactor::uniform(2).unwrap(), FiniteFactor::uniform(3).unwrap()],
            ScalarMode::Real,
        )
        .unwrap();
        assert_eq!(s.strides(), &[3, 1]);
        assert_eq!(s.atom_coords(4), vec![1, 1]);
        assert_eq!(s.atom_index(&[1, 2]), 5);
    }

    #[test]
    fn subset_helpers() {
        let a = CoordSubset::new(&[1, 3]).unwrap();
        assert_eq!(a.members(), vec![1, 3]);
        assert_eq!(a.subsets().count(), 4);
        assert_eq!(CoordSubset::interval(2, 4).members(), vec![2, 3, 4]);
        assert!(CoordSubset::interval(3, 2).is_empty());
        assert_eq!(CoordSubset::of_size(5, 2).count(), 10);
        assert_eq!(CoordSubset::of_size(4, 0).count(), 1);
        assert_eq!(CoordSubset::of_size(3, 4).count(), 0);
        assert_eq!(CoordSubset::of_size(4, 4).count(), 1);
        assert_eq!((a.first(), a.last()), (Some(1), Some(3)));
        assert!(CoordSubset::new(&[0]).is_err());
    }
}
