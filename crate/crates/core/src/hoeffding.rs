//! Hoeffding decomposition on a finite product space and the multiplicity
//! projections `P_m = Σ_{|A|=m} P_A`.
//!
//! `P_A = (id − E)^{⊗A} ⊗ E^{⊗A^c}` is applied as a product of per-coordinate
//! operators. The exact operator identities relating `P_m` to averaged tensor
//! products of `P_1` are verified on the full indicator basis of the atom grid.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{format_rational, Rational, Scalar, ScalarMode};
use crate::space::{CoordSubset, ProductSpace};
use crate::tensor::{CoordOp, Exponent, TensorFunction};

/// Largest `N` for which all `2^N` components are materialized.
pub const DECOMPOSE_GUARD: usize = 20;

fn component_ops(n: usize, a: CoordSubset) -> Vec<CoordOp> {
    (1..=n).map(|c| if a.contains(c) { CoordOp::Center } else { CoordOp::Expect }).collect()
}

/// `P_A f`.
pub fn hoeffding_component<S: Scalar>(f: &TensorFunction<S>, a: CoordSubset) -> Result<TensorFunction<S>> {
    f.space().check_subset(a)?;
    f.apply_ops(&component_ops(f.n_coords(), a))
}

/// `P_A f = Σ_{B⊆A} (−1)^{|A∖B|} E_B f`, the inclusion–exclusion form. Slower than
/// [`hoeffding_component`]; kept as an independent cross-check.
pub fn hoeffding_component_inclusion_exclusion<S: Scalar>(
    f: &TensorFunction<S>,
    a: CoordSubset,
) -> Result<TensorFunction<S>> {
    f.space().check_subset(a)?;
    let mut acc = TensorFunction::zeros(f.space().clone())?;
    for b in a.subsets() {
        let term = f.conditional_expectation(b)?;
        if (a.len() - b.len()) % 2 == 0 {
            acc = acc.add(&term)?;
        } else {
            acc = acc.sub(&term)?;
        }
    }
    Ok(acc)
}

/// All `2^N` components `P_A f`, keyed by `A`.
#[derive(Clone, Debug)]
pub struct HoeffdingComponents<S: Scalar> {
    space: Arc<ProductSpace>,
    components: BTreeMap<CoordSubset, TensorFunction<S>>,
}

impl<S: Scalar> HoeffdingComponents<S> {
    pub fn space(&self) -> &Arc<ProductSpace> {
        &self.space
    }

    pub fn get(&self, a: CoordSubset) -> Option<&TensorFunction<S>> {
        self.components.get(&a)
    }

    pub fn iter(&self) -> impl Iterator<Item = (CoordSubset, &TensorFunction<S>)> {
        self.components.iter().map(|(a, f)| (*a, f))
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// `Σ_A P_A f`.
    pub fn reassemble(&self) -> Result<TensorFunction<S>> {
        let mut acc = TensorFunction::zeros(self.space.clone())?;
        for f in self.components.values() {
            acc.add_assign(f)?;
        }
        Ok(acc)
    }

    /// Subsets whose component is not identically zero (exact in rational mode,
    /// `tol` on the sup norm otherwise).
    pub fn support(&self, tol: f64) -> Vec<CoordSubset> {
        self.components
            .iter()
            .filter(|(_, f)| {
                if S::is_exact() {
                    f.values().iter().any(|v| *v != S::zero())
                } else {
                    f.sup_modulus() > tol
                }
            })
            .map(|(a, _)| *a)
            .collect()
    }

    pub fn into_parts(self) -> (Arc<ProductSpace>, Vec<(CoordSubset, TensorFunction<S>)>) {
        (self.space, self.components.into_iter().collect())
    }

    pub fn from_parts(space: Arc<ProductSpace>, parts: Vec<(CoordSubset, TensorFunction<S>)>) -> Result<Self> {
        let mut components = BTreeMap::new();
        for (a, f) in parts {
            space.check_subset(a)?;
            if *f.space().as_ref() != *space {
                return Err(Error::SpaceMismatch);
            }
            components.insert(a, f);
        }
        Ok(Self { space, components })
    }
}

/// Splits `f` coordinate by coordinate into `E_j g` and `g − E_j g`; after `N`
/// rounds each leaf is one `P_A f`.
pub fn hoeffding_decompose<S: Scalar>(f: &TensorFunction<S>) -> Result<HoeffdingComponents<S>> {
    let n = f.n_coords();
    if n > DECOMPOSE_GUARD {
        return Err(Error::SubsetGuard { what: "Hoeffding component", n, limit: DECOMPOSE_GUARD });
    }
    let mut leaves = vec![(CoordSubset::EMPTY, f.clone())];
    for c in 1..=n {
        let single = CoordSubset::singleton(c);
        let mut next = Vec::with_capacity(leaves.len() * 2);
        for (a, g) in leaves {
            let mean = g.apply_on(single, CoordOp::Expect)?;
            let centered = g.sub(&mean)?;
            next.push((a, mean));
            next.push((a.union(single), centered));
        }
        leaves = next;
    }
    Ok(HoeffdingComponents { space: f.space().clone(), components: leaves.into_iter().collect() })
}

/// `P_m` of the sub-product on `coords`, acting as the identity on every other
/// coordinate: `Σ_{B⊆coords, |B|=m} (id − E)^{⊗B} ⊗ E^{⊗coords∖B} ⊗ id`.
///
/// Computed by a degree recursion over the coordinates of `coords` instead of
/// enumerating subsets, so it scales to any `N` the atom guard admits.
pub fn project_multiplicity_on<S: Scalar>(
    f: &TensorFunction<S>,
    coords: CoordSubset,
    m: usize,
) -> Result<TensorFunction<S>> {
    f.space().check_subset(coords)?;
    if m > coords.len() {
        return Err(Error::InvalidParameter(format!(
            "multiplicity {m} exceeds the {} available coordinates",
            coords.len()
        )));
    }
    // by_degree[k] accumulates the terms with exactly k centered coordinates so far
    let mut by_degree: Vec<Option<TensorFunction<S>>> = vec![None; m + 1];
    by_degree[0] = Some(f.clone());
    for (seen, c) in coords.iter().enumerate() {
        let single = CoordSubset::singleton(c);
        let remaining = coords.len() - seen - 1;
        let mut next: Vec<Option<TensorFunction<S>>> = vec![None; m + 1];
        for k in 0..=m {
            let Some(g) = &by_degree[k] else { continue };
            // prune branches that can no longer reach degree m
            if k + remaining + 1 >= m {
                let e = g.apply_on(single, CoordOp::Expect)?;
                if k + remaining >= m {
                    accumulate(&mut next[k], e.clone())?;
                }
                if k < m {
                    accumulate(&mut next[k + 1], g.sub(&e)?)?;
                }
            }
        }
        by_degree = next;
    }
    match by_degree.pop().flatten() {
        Some(g) => Ok(g),
        None => TensorFunction::zeros(f.space().clone()),
    }
}

fn accumulate<S: Scalar>(slot: &mut Option<TensorFunction<S>>, g: TensorFunction<S>) -> Result<()> {
    match slot {
        Some(acc) => acc.add_assign(&g),
        None => {
            *slot = Some(g);
            Ok(())
        }
    }
}

/// `P_m f`.
pub fn project_multiplicity<S: Scalar>(f: &TensorFunction<S>, m: usize) -> Result<TensorFunction<S>> {
    if m > f.n_coords() {
        return Err(Error::InvalidParameter(format!(
            "multiplicity {m} out of range [0, {}]",
            f.n_coords()
        )));
    }
    project_multiplicity_on(f, f.space().all_coords(), m)
}

pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `(Σ parts)! / Π parts!`.
pub fn multinomial(parts: &[usize]) -> BigInt {
    let mut total = 0;
    let mut acc = BigInt::one();
    for &p in parts {
        total += p;
        acc *= binomial(total, p);
    }
    acc
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

fn indicator_basis(space: &Arc<ProductSpace>) -> impl Iterator<Item = Result<TensorFunction<Rational>>> + '_ {
    (0..space.atom_count()).map(move |i| {
        let mut v = vec![<Rational as Zero>::zero(); space.atom_count()];
        v[i] = <Rational as One>::one();
        TensorFunction::new(space.clone(), v)
    })
}

fn require_rational(space: &ProductSpace, n: usize) -> Result<()> {
    if space.mode() != ScalarMode::Rational {
        return Err(Error::ScalarMode("operator identities are verified in rational mode".into()));
    }
    if space.n_coords() != n {
        return Err(Error::InvalidParameter(format!(
            "space has {} coordinates, expected N = {n}",
            space.n_coords()
        )));
    }
    if n > DECOMPOSE_GUARD {
        return Err(Error::SubsetGuard { what: "subset", n, limit: DECOMPOSE_GUARD });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QIdentityReport {
    pub n_coords: usize,
    pub block: usize,
    pub m: usize,
    /// `m·C(N−m, n−1)/C(N, n)` as `p/q`.
    pub coefficient: String,
    pub operator_match: bool,
    pub basis_size: usize,
}

/// `m·C(N−m, n−1) / C(N, n)`.
pub fn q_coefficient(n_coords: usize, block: usize, m: usize) -> Rational {
    let num = BigInt::from(m) * binomial(n_coords.saturating_sub(m), block.saturating_sub(1));
    Rational::new(num, binomial(n_coords, block))
}

/// Applies `Q_m = C(N,n)^{-1} Σ_{|A|=n} P_1^{(A)} ⊗ P_{m−1}^{(A^c)}` to `f`.
pub fn apply_q_operator(f: &TensorFunction<Rational>, block: usize, m: usize) -> Result<TensorFunction<Rational>> {
    let n = f.n_coords();
    let all = f.space().all_coords();
    let mut acc = TensorFunction::zeros(f.space().clone())?;
    for a in CoordSubset::of_size(n, block) {
        let rest = all.difference(a);
        if m - 1 > rest.len() {
            continue;
        }
        let g = project_multiplicity_on(f, a, 1)?;
        acc.add_assign(&project_multiplicity_on(&g, rest, m - 1)?)?;
    }
    Ok(acc.scale(&Rational::new(BigInt::one(), binomial(n, block))))
}

/// Checks `Q_m = m·C(N−m, n−1)/C(N, n) · P_m` exactly on every indicator of the atom grid.
pub fn verify_q_identity(n_coords: usize, block: usize, m: usize, space: &Arc<ProductSpace>) -> Result<QIdentityReport> {
    require_rational(space, n_coords)?;
    if block == 0 || block > n_coords || m == 0 || m > n_coords {
        return Err(Error::InvalidParameter(format!(
            "need 1 ≤ n ≤ N and 1 ≤ m ≤ N, got N={n_coords}, n={block}, m={m}"
        )));
    }
    let coefficient = q_coefficient(n_coords, block, m);
    let mut operator_match = true;
    for e in indicator_basis(space) {
        let e = e?;
        let lhs = apply_q_operator(&e, block, m)?;
        let rhs = project_multiplicity(&e, m)?.scale(&coefficient);
        if lhs != rhs {
            operator_match = false;
            break;
        }
    }
    Ok(QIdentityReport {
        n_coords,
        block,
        m,
        coefficient: format_rational(&coefficient),
        operator_match,
        basis_size: space.atom_count(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultinomialReport {
    pub block: usize,
    pub m: usize,
    pub partitions: u64,
    /// Appearances of each `P_B`, `|B| = m`, when every count agrees.
    pub count_per_b: Option<u64>,
    /// `m!·C((n−1)m; n−1, …, n−1)`.
    pub expected_count: u64,
    pub operator_match: bool,
    #[serde(rename = "match")]
    pub matched: bool,
}

/// Ordered partitions of `coords` into blocks of size `block`.
pub fn ordered_partitions(coords: CoordSubset, block: usize) -> Vec<Vec<CoordSubset>> {
    if coords.is_empty() {
        return vec![vec![]];
    }
    if block == 0 || coords.len() % block != 0 {
        return vec![];
    }
    let members = coords.members();
    let mut out = Vec::new();
    for pick in CoordSubset::of_size(members.len(), block) {
        let first = CoordSubset::new(&pick.iter().map(|i| members[i - 1]).collect::<Vec<_>>())
            .expect("members are valid coordinates");
        for mut rest in ordered_partitions(coords.difference(first), block) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Enumerates `Q_{m,n}` over ordered partitions of `[1, nm]`, counts how often each
/// `P_B` appears, and checks the resulting operator identity exactly.
pub fn verify_multinomial_identity(block: usize, m: usize, space: &Arc<ProductSpace>) -> Result<MultinomialReport> {
    if block == 0 || m == 0 {
        return Err(Error::InvalidParameter("block size and m must be positive".into()));
    }
    let n_coords = block * m;
    require_rational(space, n_coords)?;
    let partitions = ordered_partitions(space.all_coords(), block);

    let mut counts: BTreeMap<CoordSubset, u64> = BTreeMap::new();
    for p in &partitions {
        // one coordinate from every block
        let mut picks = vec![CoordSubset::EMPTY];
        for blk in p {
            picks = picks
                .into_iter()
                .flat_map(|b| blk.iter().map(move |c| b.union(CoordSubset::singleton(c))))
                .collect();
        }
        for b in picks {
            *counts.entry(b).or_default() += 1;
        }
    }
    let expected = factorial(m) * multinomial(&vec![block - 1; m]);
    let expected_count: u64 = expected.try_into().map_err(|_| Error::InvalidParameter("count overflow".into()))?;
    let all_b: Vec<CoordSubset> = CoordSubset::of_size(n_coords, m).collect();
    let count_per_b = {
        let first = all_b.first().and_then(|b| counts.get(b)).copied();
        let uniform = counts.len() == all_b.len() && all_b.iter().all(|b| counts.get(b).copied() == first);
        if uniform { first } else { None }
    };

    let n_part = partitions.len() as u64;
    let mut operator_match = count_per_b.is_some();
    if let Some(count) = count_per_b {
        let norm = Rational::new(BigInt::one(), BigInt::from(n_part));
        let coeff = Rational::new(BigInt::from(count), BigInt::from(n_part));
        for e in indicator_basis(space) {
            let e = e?;
            let mut lhs = TensorFunction::zeros(space.clone())?;
            for p in &partitions {
                let mut g = e.clone();
                for blk in p {
                    g = project_multiplicity_on(&g, *blk, 1)?;
                }
                lhs.add_assign(&g)?;
            }
            if lhs.scale(&norm) != project_multiplicity(&e, m)?.scale(&coeff) {
                operator_match = false;
                break;
            }
        }
    }
    let matched = operator_match && count_per_b == Some(expected_count);
    Ok(MultinomialReport {
        block,
        m,
        partitions: n_part,
        count_per_b,
        expected_count,
        operator_match,
        matched,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorPowerReport {
    pub m: usize,
    pub identity_holds: bool,
    pub max_deviation: f64,
    /// `(p, ‖P_m(f^{⊗m})‖_p)` for each requested exponent (`p = 0` encodes sup).
    pub lhs_norms: Vec<(f64, f64)>,
    pub rhs_norms: Vec<(f64, f64)>,
}

/// Verifies `P_m(f^{⊗m}) = (P_1 f)^{⊗m}` for mean-zero `f`.
pub fn tensor_power_projection_check<S: Scalar>(
    f: &TensorFunction<S>,
    m: usize,
    exponents: &[Exponent],
) -> Result<TensorPowerReport> {
    let mean = f.expectation();
    let mean_zero = if S::is_exact() { mean == S::zero() } else { mean.modulus() <= 1e-12 };
    if !mean_zero {
        return Err(Error::NonzeroMean(mean.modulus()));
    }
    let power = f.tensor_power(m)?;
    let lhs = project_multiplicity(&power, m)?;
    let rhs = project_multiplicity(f, 1)?.tensor_power(m)?;
    let max_deviation = lhs.max_abs_diff(&rhs)?;
    let identity_holds = if S::is_exact() { lhs == rhs } else { max_deviation <= 1e-12 * rhs.sup_modulus().max(1.0) };
    let tag = |p: &Exponent| match p {
        Exponent::Finite(p) => *p,
        Exponent::Sup => 0.0,
    };
    let mut lhs_norms = Vec::new();
    let mut rhs_norms = Vec::new();
    for p in exponents {
        lhs_norms.push((tag(p), lhs.lp_norm(*p)?));
        rhs_norms.push((tag(p), rhs.lp_norm(*p)?));
    }
    Ok(TensorPowerReport { m, identity_holds, max_deviation, lhs_norms, rhs_norms })
}
