//! Zinn-type decoupling functionals, the λ-recursion behind the telescoping
//! argument, multi-fold and triple decoupling, and translation operators.
//!
//! Decoupled functionals are evaluated exactly on an extended grid holding one
//! copy of every `(block, coordinate)` pair a component reads, or by Monte Carlo
//! over the same wiring.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{sample_outcome, substream};
use crate::scalar::{Scalar, ScalarMode};
use crate::space::{CoordSubset, ProductSpace, DEFAULT_ATOM_GUARD};
use crate::stats::{mean, pairwise_sum, std_error};
use crate::tensor::{CoordOp, Exponent, TensorFunction};

/// `f_1, …, f_N` with `f_k` measurable on `[1, k]`.
#[derive(Clone, Debug)]
pub struct AdaptedTuple<S: Scalar = f64> {
    space: Arc<ProductSpace>,
    funcs: Vec<TensorFunction<S>>,
}

impl<S: Scalar> AdaptedTuple<S> {
    pub fn new(space: Arc<ProductSpace>, funcs: Vec<TensorFunction<S>>) -> Result<Self> {
        if funcs.len() != space.n_coords() {
            return Err(Error::InvalidParameter(format!(
                "{} functions for {} coordinates",
                funcs.len(),
                space.n_coords()
            )));
        }
        for (i, f) in funcs.iter().enumerate() {
            if **f.space() != *space {
                return Err(Error::SpaceMismatch);
            }
            f.require_measurable(CoordSubset::interval(1, i + 1))?;
        }
        Ok(Self { space, funcs })
    }

    pub fn space(&self) -> &Arc<ProductSpace> {
        &self.space
    }

    pub fn funcs(&self) -> &[TensorFunction<S>] {
        &self.funcs
    }

    pub fn len(&self) -> usize {
        self.funcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.funcs.is_empty()
    }

    /// Every `f_k` depends on coordinate `k` alone.
    pub fn is_independent(&self) -> bool {
        self.funcs
            .iter()
            .enumerate()
            .all(|(i, f)| f.is_measurable(CoordSubset::singleton(i + 1)).unwrap_or(false))
    }

    fn wired(&self, decoupled: bool) -> Vec<(&TensorFunction<S>, Wiring)> {
        let n = self.len();
        self.funcs
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let k = i + 1;
                let wiring = (1..=n)
                    .map(|c| match c.cmp(&k) {
                        std::cmp::Ordering::Less => Some(0),
                        std::cmp::Ordering::Equal => Some(if decoupled { 1 } else { 0 }),
                        std::cmp::Ordering::Greater => None,
                    })
                    .collect();
                (f, wiring)
            })
            .collect()
    }
}

/// For each original coordinate, the copy (block) it is read from, or `None` when
/// the component does not depend on it.
pub type Wiring = Vec<Option<usize>>;

struct Grid {
    space: ProductSpace,
    /// `(block, coord)` → position in the extended grid.
    slots: BTreeMap<(usize, usize), usize>,
}

fn extended_grid<S: Scalar>(space: &ProductSpace, comps: &[(&TensorFunction<S>, Wiring)], guard: u64) -> Result<Grid> {
    let mut slots = BTreeMap::new();
    for (f, w) in comps {
        if w.len() != space.n_coords() || **f.space() != *space {
            return Err(Error::SpaceMismatch);
        }
        let used: Vec<usize> = (1..=w.len()).filter(|c| w[c - 1].is_some()).collect();
        f.require_measurable(CoordSubset::new(&used)?)?;
        for c in used {
            slots.insert((w[c - 1].unwrap_or(0), c), 0);
        }
    }
    let mut factors = Vec::with_capacity(slots.len());
    for (pos, ((_, c), slot)) in slots.iter_mut().enumerate() {
        *slot = pos;
        factors.push(space.factor(*c).clone());
    }
    Ok(Grid { space: ProductSpace::with_guard(factors, ScalarMode::Real, guard)?, slots })
}

fn read_outcomes(grid: &Grid, w: &Wiring, ext: &[usize], out: &mut [usize]) {
    for (j, b) in w.iter().enumerate() {
        out[j] = match b {
            Some(b) => ext[grid.slots[&(*b, j + 1)]],
            None => 0,
        };
    }
}

/// `E √(Σ_i |f_i(wired arguments)|²)` by exhaustive enumeration of the extended grid.
pub fn wired_functional_exact<S: Scalar>(space: &ProductSpace, comps: &[(&TensorFunction<S>, Wiring)]) -> Result<f64> {
    let grid = extended_grid(space, comps, DEFAULT_ATOM_GUARD)?;
    let weights = grid.space.atom_weights();
    let mut outcomes = vec![0usize; space.n_coords()];
    let terms: Vec<f64> = (0..grid.space.atom_count())
        .map(|atom| {
            let ext = grid.space.atom_coords(atom);
            let sq: f64 = comps
                .iter()
                .map(|(f, w)| {
                    read_outcomes(&grid, w, &ext, &mut outcomes);
                    let m = f.value_at(&outcomes).modulus();
                    m * m
                })
                .sum();
            weights[atom] * sq.sqrt()
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Monte Carlo version of [`wired_functional_exact`]: trial `t` draws every grid
/// slot from substream `t` of `seed`. Returns `(mean, standard error)`.
pub fn wired_functional_mc<S: Scalar>(
    space: &ProductSpace,
    comps: &[(&TensorFunction<S>, Wiring)],
    trials: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if trials < 2 {
        return Err(Error::InvalidParameter("Monte Carlo needs at least 2 trials".into()));
    }
    let grid = extended_grid(space, comps, u64::MAX)?;
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(seed, t as u64);
            let ext: Vec<usize> = grid.space.factors().iter().map(|f| sample_outcome(f, &mut rng)).collect();
            let mut outcomes = vec![0usize; space.n_coords()];
            comps
                .iter()
                .map(|(f, w)| {
                    read_outcomes(&grid, w, &ext, &mut outcomes);
                    let m = f.value_at(&outcomes).modulus();
                    m * m
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok((mean(&samples), std_error(&samples)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum EvalMode {
    Exact,
    MonteCarlo { trials: usize, seed: u64 },
}

/// `lhs` is the undecoupled functional, `rhs` the decoupled one, `ratio = lhs / rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecouplingReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub trials: Option<usize>,
    pub stderr: Option<f64>,
    pub seed: Option<u64>,
}

impl DecouplingReport {
    fn new(lhs: f64, rhs: (f64, Option<f64>), mode: EvalMode) -> Self {
        let (trials, seed) = match mode {
            EvalMode::Exact => (None, None),
            EvalMode::MonteCarlo { trials, seed } => (Some(trials), Some(seed)),
        };
        let ratio = if rhs.0 == 0.0 && lhs == 0.0 { 1.0 } else { lhs / rhs.0 };
        Self { lhs, rhs: rhs.0, ratio, trials, stderr: rhs.1, seed }
    }
}

fn evaluate<S: Scalar>(space: &ProductSpace, comps: &[(&TensorFunction<S>, Wiring)], mode: EvalMode) -> Result<(f64, Option<f64>)> {
    match mode {
        EvalMode::Exact => Ok((wired_functional_exact(space, comps)?, None)),
        EvalMode::MonteCarlo { trials, seed } => {
            let (m, se) = wired_functional_mc(space, comps, trials, seed)?;
            Ok((m, Some(se)))
        }
    }
}

/// `E √(Σ_k |f_k(x_1, …, x_k)|²)`.
pub fn zinn_left<S: Scalar>(t: &AdaptedTuple<S>) -> Result<f64> {
    TensorFunction::l2_pointwise(&t.funcs)?.lp_norm(Exponent::Finite(1.0))
}

/// `E_x E_y √(Σ_k |f_k(x_1, …, x_{k−1}, y_k)|²)`.
pub fn zinn_right<S: Scalar>(t: &AdaptedTuple<S>, mode: EvalMode) -> Result<(f64, Option<f64>)> {
    evaluate(&t.space, &t.wired(true), mode)
}

pub fn decouple<S: Scalar>(t: &AdaptedTuple<S>, mode: EvalMode) -> Result<DecouplingReport> {
    Ok(DecouplingReport::new(zinn_left(t)?, zinn_right(t, mode)?, mode))
}

/// `λ_0 = 0`, `λ_k = E_{y_k} √(|f_k(x_{<k}, y_k)|² + λ_{k−1}²)`; `λ_k` depends on `[1, k−1]`.
#[derive(Clone, Debug)]
pub struct LambdaSequence {
    pub lambdas: Vec<TensorFunction<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaReport {
    pub elambda_n: f64,
    pub measurable_ok: bool,
    pub monotone_ok: bool,
    pub independent: bool,
    /// `(λ_N, E√ΣX_k²)` when the `X_k` are independent and the `λ_k` constants.
    pub sandwich: Option<(f64, f64)>,
    pub sandwich_ok: bool,
    pub zinn_left: f64,
    pub zinn_right: f64,
    /// `E λ_N ≤ zinn_right`.
    pub lower_ok: bool,
    /// `zinn_left ≤ 2 E λ_N`.
    pub upper_ok: bool,
}

const CHAIN_TOL: f64 = 1e-10;

pub fn lambda_sequence<S: Scalar>(t: &AdaptedTuple<S>) -> Result<LambdaSequence> {
    let mut lambdas = vec![TensorFunction::<f64>::zeros(t.space.clone())?];
    for (i, f) in t.funcs.iter().enumerate() {
        let prev = &lambdas[i];
        let inner: Vec<f64> = f
            .values()
            .iter()
            .zip(prev.values())
            .map(|(v, l)| {
                let m = v.modulus();
                (m * m + l * l).sqrt()
            })
            .collect();
        let inner = TensorFunction::new(t.space.clone(), inner)?;
        lambdas.push(inner.apply_on(CoordSubset::singleton(i + 1), CoordOp::Expect)?);
    }
    Ok(LambdaSequence { lambdas })
}

/// Computes the λ-sequence and checks measurability, monotonicity, the sandwich for
/// independent tuples, and the chain `zinn_left ≤ 2 E λ_N ≤ 2 zinn_right` (exact).
pub fn lambda_recursion<S: Scalar>(t: &AdaptedTuple<S>) -> Result<(LambdaSequence, LambdaReport)> {
    let seq = lambda_sequence(t)?;
    let n = t.len();
    let mut measurable_ok = true;
    let mut monotone_ok = true;
    for k in 1..=n {
        let l = &seq.lambdas[k];
        measurable_ok &= l.measurability_deviation(CoordSubset::interval(1, k - 1))? <= CHAIN_TOL * l.sup_modulus().max(1.0);
        monotone_ok &= l.values().iter().zip(seq.lambdas[k - 1].values()).all(|(a, b)| *a >= b - CHAIN_TOL);
    }
    let lambda_n = &seq.lambdas[n];
    let elambda_n = lambda_n.expectation();
    let left = zinn_left(t)?;
    let (right, _) = zinn_right(t, EvalMode::Exact)?;
    let independent = t.is_independent();
    let sandwich = independent.then(|| (lambda_n.values()[0], left));
    let sandwich_ok = match sandwich {
        Some((l, mid)) => l <= mid + CHAIN_TOL && mid <= 2.0 * l + CHAIN_TOL,
        None => true,
    };
    let report = LambdaReport {
        elambda_n,
        measurable_ok,
        monotone_ok,
        independent,
        sandwich,
        sandwich_ok,
        zinn_left: left,
        zinn_right: right,
        lower_ok: elambda_n <= right + CHAIN_TOL,
        upper_ok: left <= 2.0 * elambda_n + CHAIN_TOL,
    };
    Ok((seq, report))
}

/// A component `f_i` indexed by `i_1 < … < i_m`, measurable on `[1, i_1 − 1] ∪ {i_1, …, i_m}`.
#[derive(Clone, Debug)]
pub struct IndexedComponent<S: Scalar = f64> {
    pub index: Vec<usize>,
    pub func: TensorFunction<S>,
}

fn check_index(index: &[usize], m: usize, n: usize) -> Result<()> {
    let increasing = index.windows(2).all(|w| w[0] < w[1]);
    if index.len() != m || !increasing || index.first() == Some(&0) || index.last().is_some_and(|l| *l > n) {
        return Err(Error::InvalidParameter(format!("index {index:?} is not increasing of length {m} in [1, {n}]")));
    }
    Ok(())
}

fn multi_wiring(index: &[usize], n: usize, decoupled: bool) -> Wiring {
    (1..=n)
        .map(|c| {
            if c < index[0] {
                Some(0)
            } else {
                index.iter().position(|i| *i == c).map(|j| if decoupled { j + 1 } else { 0 })
            }
        })
        .collect()
}

fn same_space<S: Scalar>(comps: &[IndexedComponent<S>]) -> Result<Arc<ProductSpace>> {
    let space = comps
        .first()
        .map(|c| c.func.space().clone())
        .ok_or_else(|| Error::InvalidParameter("no components".into()))?;
    Ok(space)
}

/// Undecoupled `E √(Σ_i |f_i(x)|²)` and the m-fold decoupled
/// `E_x E_{y^{(1..m)}} √(Σ_i |f_i(x_{<i_1}, y^{(1)}_{i_1}, …, y^{(m)}_{i_m})|²)`.
pub fn multi_decoupled<S: Scalar>(comps: &[IndexedComponent<S>], m: usize, mode: EvalMode) -> Result<DecouplingReport> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be positive".into()));
    }
    let space = same_space(comps)?;
    let n = space.n_coords();
    for c in comps {
        check_index(&c.index, m, n)?;
    }
    let wire = |decoupled| -> Vec<(&TensorFunction<S>, Wiring)> {
        comps.iter().map(|c| (&c.func, multi_wiring(&c.index, n, decoupled))).collect()
    };
    let lhs = wired_functional_exact(&space, &wire(false))?;
    Ok(DecouplingReport::new(lhs, evaluate(&space, &wire(true), mode)?, mode))
}

pub fn multi_decoupled_right<S: Scalar>(comps: &[IndexedComponent<S>], m: usize, mode: EvalMode) -> Result<f64> {
    Ok(multi_decoupled(comps, m, mode)?.rhs)
}

/// Components `f_{a,b}`, `a < b`, measurable on `[a, b]`: undecoupled against
/// `E √(Σ |f_{a,b}(z_a, x_{[a+1,b−1]}, y_b)|²)`.
pub fn triple_decoupled<S: Scalar>(comps: &[IndexedComponent<S>], mode: EvalMode) -> Result<DecouplingReport> {
    let space = same_space(comps)?;
    let n = space.n_coords();
    for c in comps {
        check_index(&c.index, 2, n)?;
    }
    let wire = |decoupled: bool| -> Vec<(&TensorFunction<S>, Wiring)> {
        comps
            .iter()
            .map(|c| {
                let (a, b) = (c.index[0], c.index[1]);
                let w = (1..=n)
                    .map(|j| match () {
                        _ if j == a => Some(0),
                        _ if j > a && j < b => Some(if decoupled { 1 } else { 0 }),
                        _ if j == b => Some(if decoupled { 2 } else { 0 }),
                        _ => None,
                    })
                    .collect();
                (&c.func, w)
            })
            .collect()
    };
    let lhs = wired_functional_exact(&space, &wire(false))?;
    Ok(DecouplingReport::new(lhs, evaluate(&space, &wire(true), mode)?, mode))
}

fn group_orders(space: &ProductSpace) -> Result<Vec<usize>> {
    (1..=space.n_coords())
        .map(|c| {
            let f = space.factor(c);
            if f.is_uniform() { Ok(f.outcome_count()) } else { Err(Error::NonGroupFactor { coord: c }) }
        })
        .collect()
}

/// `T_ξ f = Δ_0 f + Σ_k Δ_k f(x_1, …, x_{k−1}, x_k + ξ_k)` for the natural filtration
/// on a product of cyclic groups.
pub fn translate_op<S: Scalar>(f: &TensorFunction<S>, xi: &[usize]) -> Result<TensorFunction<S>> {
    let space = f.space().clone();
    let orders = group_orders(&space)?;
    if xi.len() != orders.len() {
        return Err(Error::InvalidParameter(format!("shift of length {} on {} coordinates", xi.len(), orders.len())));
    }
    let n = orders.len();
    let mut out = f.conditional_expectation(CoordSubset::EMPTY)?;
    let mut prev = out.clone();
    for k in 1..=n {
        let ek = f.conditional_expectation(CoordSubset::interval(1, k))?;
        let delta = ek.sub(&prev)?;
        let shifted = TensorFunction::from_fn(space.clone(), |x| {
            let mut y = x.to_vec();
            y[k - 1] = (x[k - 1] + xi[k - 1]) % orders[k - 1];
            delta.value_at(&y).clone()
        })?;
        out.add_assign(&shifted)?;
        prev = ek;
    }
    Ok(out)
}

/// `−ξ` in the product of cyclic groups of `space`.
pub fn negate_shift(space: &ProductSpace, xi: &[usize]) -> Result<Vec<usize>> {
    let orders = group_orders(space)?;
    Ok(xi.iter().zip(orders).map(|(x, k)| (k - x % k) % k).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ScalarMode;

    fn z2(n: usize) -> Arc<ProductSpace> {
        ProductSpace::uniform(2, n, ScalarMode::Real).unwrap().shared()
    }

    fn rad(s: &Arc<ProductSpace>, c: usize) -> TensorFunction<f64> {
        TensorFunction::of_coordinate(s.clone(), c, &[1.0, -1.0]).unwrap()
    }

    fn coin(s: &Arc<ProductSpace>, c: usize) -> TensorFunction<f64> {
        TensorFunction::of_coordinate(s.clone(), c, &[0.0, 2.0]).unwrap()
    }

    #[test]
    fn rademacher_tuple() {
        let s = z2(4);
        let t = AdaptedTuple::new(s.clone(), (1..=4).map(|k| rad(&s, k)).collect()).unwrap();
        assert!((zinn_left(&t).unwrap() - 2.0).abs() < 1e-15);
        assert!((zinn_right(&t, EvalMode::Exact).unwrap().0 - 2.0).abs() < 1e-15);
    }

    #[test]
    fn independent_coins() {
        let s = z2(2);
        let t = AdaptedTuple::new(s.clone(), vec![coin(&s, 1), coin(&s, 2)]).unwrap();
        let want = (4.0 + 8f64.sqrt()) / 4.0;
        assert!((zinn_left(&t).unwrap() - want).abs() < 1e-15);
        assert!((zinn_right(&t, EvalMode::Exact).unwrap().0 - want).abs() < 1e-15);
        let (seq, rep) = lambda_recursion(&t).unwrap();
        assert_eq!(seq.lambdas[1].values()[0], 1.0);
        assert!((seq.lambdas[2].values()[0] - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!(rep.independent && rep.sandwich_ok && rep.lower_ok && rep.upper_ok);
        assert!(rep.measurable_ok && rep.monotone_ok);
    }

    #[test]
    fn adapted_second_function() {
        let s = z2(2);
        let f2 = TensorFunction::from_fn(s.clone(), |x| if x[0] == x[1] { 2.0 } else { 0.0 }).unwrap();
        let t = AdaptedTuple::new(s.clone(), vec![coin(&s, 1), f2]).unwrap();
        let rep = decouple(&t, EvalMode::Exact).unwrap();
        assert!(rep.lhs <= 2.0 * rep.rhs);
        let (_, lam) = lambda_recursion(&t).unwrap();
        assert!(!lam.independent && lam.sandwich.is_none());
        assert!(lam.lower_ok && lam.upper_ok);
    }

    #[test]
    fn measurability_enforced() {
        let s = z2(2);
        assert!(matches!(AdaptedTuple::new(s.clone(), vec![rad(&s, 2), rad(&s, 2)]), Err(Error::Measurability { .. })));
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let s = z2(3);
        let t = AdaptedTuple::new(s.clone(), (1..=3).map(|k| coin(&s, k)).collect()).unwrap();
        let mode = EvalMode::MonteCarlo { trials: 500, seed: 11 };
        let a = decouple(&t, mode).unwrap();
        let b = decouple(&t, mode).unwrap();
        assert_eq!(a, b);
        let exact = zinn_right(&t, EvalMode::Exact).unwrap().0;
        assert!((a.rhs - exact).abs() < 5.0 * a.stderr.unwrap() + 1e-12);
        assert!(zinn_right(&t, EvalMode::MonteCarlo { trials: 1, seed: 0 }).is_err());
    }

    #[test]
    fn multi_fold_cases() {
        let s = z2(2);
        let f = rad(&s, 1).zip_map(&rad(&s, 2), |a, b| a * b).unwrap();
        let rep = multi_decoupled(&[IndexedComponent { index: vec![1, 2], func: f }], 2, EvalMode::Exact).unwrap();
        assert_eq!((rep.lhs, rep.rhs), (1.0, 1.0));

        let s = z2(3);
        let funcs: Vec<_> = (1..=3).map(|k| coin(&s, k).add(&rad(&s, 1)).unwrap()).collect();
        let t = AdaptedTuple::new(s.clone(), funcs.clone()).unwrap();
        let comps: Vec<_> = funcs.into_iter().enumerate().map(|(i, func)| IndexedComponent { index: vec![i + 1], func }).collect();
        let one = multi_decoupled_right(&comps, 1, EvalMode::Exact).unwrap();
        assert!((one - zinn_right(&t, EvalMode::Exact).unwrap().0).abs() < 1e-15);
    }

    #[test]
    fn translation_basics() {
        let s = ProductSpace::uniform(4, 2, ScalarMode::Real).unwrap().shared();
        let f = TensorFunction::from_fn(s.clone(), |x| (x[0] * 3 + x[1] * x[1]) as f64).unwrap();
        assert!(translate_op(&f, &[0, 0]).unwrap().max_abs_diff(&f).unwrap() < 1e-12);
        let g = TensorFunction::of_coordinate(s.clone(), 1, &[1.0, -2.0, 0.5, 0.5]).unwrap();
        let shifted = translate_op(&g, &[1, 3]).unwrap();
        let want = TensorFunction::of_coordinate(s.clone(), 1, &[-2.0, 0.5, 0.5, 1.0]).unwrap();
        assert!(shifted.max_abs_diff(&want).unwrap() < 1e-12);
        assert_eq!(negate_shift(&s, &[1, 0]).unwrap(), vec![3, 0]);
        let biased = crate::space::FiniteFactor::new(vec![0.25, 0.75]).unwrap();
        let b = ProductSpace::power(&biased, 1, ScalarMode::Real).unwrap().shared();
        let h = TensorFunction::constant(b, 1.0).unwrap();
        assert!(matches!(translate_op(&h, &[1]), Err(Error::NonGroupFactor { coord: 1 })));
    }
}
