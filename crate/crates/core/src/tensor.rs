//! Dense functions on product spaces and the per-coordinate operators
//! (`id`, `E`, `id − E`) from which every projection in the crate is built.

use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{Scalar, ScalarMode};
use crate::space::{CoordSubset, ProductSpace};

/// Action of a product operator on one coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoordOp {
    Identity,
    /// Integrate the coordinate away.
    Expect,
    /// `id − E` on the coordinate.
    Center,
}

/// Exponent of an `L^p` norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Sup,
}

impl Exponent {
    pub fn check(self) -> Result<Self> {
        match self {
            Exponent::Finite(p) if !(p >= 1.0) => {
                Err(Error::InvalidParameter(format!("L^p exponent {p} is below 1")))
            }
            Exponent::Finite(p) if p.is_infinite() => Ok(Exponent::Sup),
            e => Ok(e),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sup" | "inf" | "infinity" => Ok(Exponent::Sup),
            _ => s
                .parse::<f64>()
                .map(Exponent::Finite)
                .map_err(|_| Error::Parse(format!("bad exponent `{s}`")))?
                .check(),
        }
    }
}

/// A function on the atoms of a [`ProductSpace`], one value per atom.
#[derive(Clone, Debug)]
pub struct TensorFunction<S: Scalar> {
    space: Arc<ProductSpace>,
    values: Vec<S>,
}

impl<S: Scalar> PartialEq for TensorFunction<S> {
    fn eq(&self, other: &Self) -> bool {
        self.same_space(other) && self.values == other.values
    }
}

impl<S: Scalar> TensorFunction<S> {
    pub fn new(space: Arc<ProductSpace>, values: Vec<S>) -> Result<Self> {
        if values.len() != space.atom_count() {
            return Err(Error::InvalidParameter(format!(
                "{} values for a space of {} atoms",
                values.len(),
                space.atom_count()
            )));
        }
        if S::MODE == ScalarMode::Rational && space.mode() != ScalarMode::Rational {
            return Err(Error::ScalarMode(format!(
                "rational values on a {} space",
                space.mode().as_str()
            )));
        }
        Ok(Self { space, values })
    }

    pub fn constant(space: Arc<ProductSpace>, c: S) -> Result<Self> {
        let n = space.atom_count();
        Self::new(space, vec![c; n])
    }

    pub fn zeros(space: Arc<ProductSpace>) -> Result<Self> {
        Self::constant(space, S::zero())
    }

    /// Builds `f(x) = g(x_1, …, x_N)` from the outcome vector of each atom.
    pub fn from_fn(space: Arc<ProductSpace>, mut g: impl FnMut(&[usize]) -> S) -> Result<Self> {
        let values = (0..space.atom_count()).map(|i| g(&space.atom_coords(i))).collect();
        Self::new(space, values)
    }

    /// A function of the single coordinate `coord`, given by its value per outcome.
    pub fn of_coordinate(space: Arc<ProductSpace>, coord: usize, table: &[S]) -> Result<Self> {
        space.check_subset(CoordSubset::new(&[coord])?)?;
        if table.len() != space.factor(coord).outcome_count() {
            return Err(Error::InvalidParameter(format!(
                "coordinate table of length {} for a factor with {} outcomes",
                table.len(),
                space.factor(coord).outcome_count()
            )));
        }
        Self::from_fn(space, |x| table[x[coord - 1]].clone())
    }

    pub fn space(&self) -> &Arc<ProductSpace> {
        &self.space
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    pub fn value_at(&self, outcomes: &[usize]) -> &S {
        &self.values[self.space.atom_index(outcomes)]
    }

    pub fn n_coords(&self) -> usize {
        self.space.n_coords()
    }

    pub fn same_space(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.space, &other.space) || *self.space == *other.space
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.same_space(other) { Ok(()) } else { Err(Error::SpaceMismatch) }
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Result<TensorFunction<T>> {
        TensorFunction::new(self.space.clone(), self.values.iter().map(f).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(&S, &S) -> S) -> Result<Self> {
        self.check_same_space(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| f(a, b)).collect();
        Ok(Self { space: self.space.clone(), values })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a.clone() + b.clone())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a.clone() - b.clone())
    }

    pub fn scale(&self, c: &S) -> Self {
        Self {
            space: self.space.clone(),
            values: self.values.iter().map(|v| c.clone() * v.clone()).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.check_same_space(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a = a.clone() + b.clone();
        }
        Ok(())
    }

    pub fn to_complex(&self) -> TensorFunction<num_complex::Complex64> {
        TensorFunction { space: self.space.clone(), values: self.values.iter().map(S::to_complex).collect() }
    }

    /// Pointwise modulus as a real function.
    pub fn modulus(&self) -> TensorFunction<f64> {
        TensorFunction { space: self.space.clone(), values: self.values.iter().map(S::modulus).collect() }
    }

    /// Same values on a structurally equal space (used to move functions between spaces
    /// that were constructed independently).
    pub fn rebind(&self, space: Arc<ProductSpace>) -> Result<Self> {
        if *space != *self.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self { space, values: self.values.clone() })
    }

    fn axis_weights(&self, coord: usize) -> Vec<S> {
        let factor = self.space.factor(coord);
        (0..factor.outcome_count()).map(|o| S::weight(factor, o)).collect()
    }

    /// Integrates coordinate `coord` (1-based) in place; `center` keeps `v − E v` instead.
    fn integrate_axis(&mut self, coord: usize, center: bool) {
        let axis = coord - 1;
        let k = self.space.shape()[axis];
        let s = self.space.strides()[axis];
        let w = self.axis_weights(coord);
        let block = k * s;
        for base in (0..self.values.len()).step_by(block) {
            for i in 0..s {
                let mut acc = S::zero();
                for (t, wt) in w.iter().enumerate() {
                    acc = acc + wt.clone() * self.values[base + t * s + i].clone();
                }
                for t in 0..k {
                    let v = &mut self.values[base + t * s + i];
                    *v = if center { v.clone() - acc.clone() } else { acc.clone() };
                }
            }
        }
    }

    /// Applies `⊗_j ops[j]`; the per-coordinate factors commute, so order is irrelevant.
    pub fn apply_ops(&self, ops: &[CoordOp]) -> Result<Self> {
        if ops.len() != self.n_coords() {
            return Err(Error::InvalidParameter(format!(
                "{} coordinate operators for {} coordinates",
                ops.len(),
                self.n_coords()
            )));
        }
        let mut out = self.clone();
        for (j, op) in ops.iter().enumerate() {
            match op {
                CoordOp::Identity => {}
                CoordOp::Expect => out.integrate_axis(j + 1, false),
                CoordOp::Center => out.integrate_axis(j + 1, true),
            }
        }
        Ok(out)
    }

    /// Applies `op` on every coordinate in `coords` and the identity elsewhere.
    pub fn apply_on(&self, coords: CoordSubset, op: CoordOp) -> Result<Self> {
        self.space.check_subset(coords)?;
        let mut out = self.clone();
        if op != CoordOp::Identity {
            for c in coords.iter() {
                out.integrate_axis(c, op == CoordOp::Center);
            }
        }
        Ok(out)
    }

    /// `E_A f`: integrates away every coordinate outside `A`.
    pub fn conditional_expectation(&self, a: CoordSubset) -> Result<Self> {
        self.space.check_subset(a)?;
        self.apply_on(self.space.all_coords().difference(a), CoordOp::Expect)
    }

    pub fn expectation(&self) -> S {
        let mut acc = S::zero();
        let weights = self.atom_weights();
        for (w, v) in weights.into_iter().zip(&self.values) {
            acc = acc + w * v.clone();
        }
        acc
    }

    /// Atom probabilities in the scalar field (exact in rational mode).
    pub fn atom_weights(&self) -> Vec<S> {
        let n = self.space.atom_count();
        let mut w = vec![S::one(); n];
        for c in 1..=self.n_coords() {
            let aw = self.axis_weights(c);
            let k = self.space.shape()[c - 1];
            let s = self.space.strides()[c - 1];
            for (idx, x) in w.iter_mut().enumerate() {
                *x = x.clone() * aw[(idx / s) % k].clone();
            }
        }
        w
    }

    pub fn lp_norm(&self, p: Exponent) -> Result<f64> {
        let weights = self.space.atom_weights();
        match p.check()? {
            Exponent::Sup => Ok(self
                .values
                .iter()
                .zip(&weights)
                .filter(|(_, w)| **w > 0.0)
                .map(|(v, _)| v.modulus())
                .fold(0.0, f64::max)),
            Exponent::Finite(p) => {
                let terms: Vec<f64> = self
                    .values
                    .iter()
                    .zip(&weights)
                    .map(|(v, w)| w * v.modulus().powf(p))
                    .collect();
                Ok(crate::stats::pairwise_sum(&terms).powf(1.0 / p))
            }
        }
    }

    /// `⟨f, g⟩ = Σ weight · f · conj(g)`.
    pub fn inner_product(&self, other: &Self) -> Result<S> {
        self.check_same_space(other)?;
        let mut acc = S::zero();
        for ((w, a), b) in self.atom_weights().into_iter().zip(&self.values).zip(&other.values) {
            acc = acc + w * a.clone() * b.conj();
        }
        Ok(acc)
    }

    /// `(f ⊗ g)(a, b) = f(a) g(b)` on the product of the two spaces.
    pub fn tensor_product(&self, other: &Self) -> Result<Self> {
        let space = Arc::new(self.space.product(&other.space)?);
        let mut values = Vec::with_capacity(space.atom_count());
        for a in &self.values {
            for b in &other.values {
                values.push(a.clone() * b.clone());
            }
        }
        Self::new(space, values)
    }

    /// `f^{⊗m}` on the `m`-fold product space.
    pub fn tensor_power(&self, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("tensor power of order 0".into()));
        }
        let mut out = self.clone();
        for _ in 1..m {
            out = out.tensor_product(self)?;
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_space(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a.clone() - b.clone()).modulus())
            .fold(0.0, f64::max))
    }

    pub fn sup_modulus(&self) -> f64 {
        self.values.iter().map(S::modulus).fold(0.0, f64::max)
    }

    /// `‖E_A f − f‖_∞`; zero exactly when `f` depends only on coordinates in `A`.
    pub fn measurability_deviation(&self, a: CoordSubset) -> Result<f64> {
        self.conditional_expectation(a)?.max_abs_diff(self)
    }

    /// Exact in rational mode; relative tolerance `1e-12` otherwise.
    pub fn is_measurable(&self, a: CoordSubset) -> Result<bool> {
        let proj = self.conditional_expectation(a)?;
        if S::is_exact() {
            return Ok(proj == *self);
        }
        let scale = self.sup_modulus().max(1.0);
        Ok(proj.max_abs_diff(self)? <= 1e-12 * scale)
    }

    pub fn require_measurable(&self, a: CoordSubset) -> Result<()> {
        if self.is_measurable(a)? {
            Ok(())
        } else {
            Err(Error::Measurability { coords: a.members(), deviation: self.measurability_deviation(a)? })
        }
    }
}

impl TensorFunction<f64> {
    /// Pointwise `sqrt(Σ_i |f_i|²)` of a family of functions on one space.
    pub fn l2_pointwise<S: Scalar>(parts: &[TensorFunction<S>]) -> Result<TensorFunction<f64>> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty family of functions".into()))?;
        let mut acc = vec![0.0; first.space.atom_count()];
        for p in parts {
            first.check_same_space(p)?;
            for (a, v) in acc.iter_mut().zip(&p.values) {
                let m = v.modulus();
                *a += m * m;
            }
        }
        TensorFunction::new(first.space.clone(), acc.into_iter().map(f64::sqrt).collect())
    }
}
