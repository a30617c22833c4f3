use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::CoordSubset;
use crate::tensor::{CoordOp, TensorFunction};

pub const FAMILY_GUARD: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyItem {
    #[serde(rename = "T")]
    pub t: CoordSubset,
    pub boundary: CoordSubset,
}

impl FamilyItem {
    pub fn new(t: CoordSubset, boundary: CoordSubset) -> Self {
        Self { t, boundary }
    }

    /// `(id − E)` on the boundary, `id` on the rest of `T`, `E` outside `T`.
    pub fn ops(&self, n: usize) -> Vec<CoordOp> {
        (1..=n)
            .map(|c| {
                if self.boundary.contains(c) {
                    CoordOp::Center
                } else if self.t.contains(c) {
                    CoordOp::Identity
                } else {
                    CoordOp::Expect
                }
            })
            .collect()
    }
}

/// Pairs `(T_i, ∂T_i)` over the ground set `[1, N]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferenceFamily {
    #[serde(rename = "N")]
    pub n: usize,
    pub items: Vec<FamilyItem>,
}

impl DifferenceFamily {
    pub fn new(n: usize, items: Vec<FamilyItem>) -> Self {
        Self { n, items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Same items up to order.
    pub fn same_items(&self, other: &DifferenceFamily) -> bool {
        let key = |f: &DifferenceFamily| {
            let mut v: Vec<(u64, u64)> = f.items.iter().map(|i| (i.t.mask(), i.boundary.mask())).collect();
            v.sort_unstable();
            v
        };
        self.n == other.n && key(self) == key(other)
    }

    /// The chain `∅ = F_0 ⊂ F_1 ⊂ … ⊂ F_N` when every item is `(F_k, F_k ∖ F_{k−1})`
    /// for one such chain, with the item index of each level.
    pub fn filtration(&self) -> Result<Vec<(CoordSubset, usize)>> {
        let mut order: Vec<usize> = (0..self.items.len()).collect();
        order.sort_by_key(|&i| self.items[i].t.len());
        if order.len() != self.n + 1 {
            return Err(Error::UnorderedFamily);
        }
        let mut prev = CoordSubset::EMPTY;
        let mut chain = Vec::with_capacity(order.len());
        for (level, &i) in order.iter().enumerate() {
            let item = self.items[i];
            let ok = item.t.len() == level && prev.is_subset(item.t) && item.boundary == item.t.difference(prev);
            if !ok {
                return Err(Error::UnorderedFamily);
            }
            chain.push((item.t, i));
            prev = item.t;
        }
        Ok(chain)
    }
}

/// `(∅, ∅)` and `([1, k], {k})`.
pub fn linear_family(n: usize) -> DifferenceFamily {
    let mut items = vec![FamilyItem::new(CoordSubset::EMPTY, CoordSubset::EMPTY)];
    items.extend((1..=n).map(|k| FamilyItem::new(CoordSubset::interval(1, k), CoordSubset::singleton(k))));
    DifferenceFamily::new(n, items)
}

/// `(∅, ∅)` and `([k, N], {k})`.
pub fn reversed_family(n: usize) -> DifferenceFamily {
    let mut items = vec![FamilyItem::new(CoordSubset::EMPTY, CoordSubset::EMPTY)];
    items.extend((1..=n).rev().map(|k| FamilyItem::new(CoordSubset::interval(k, n), CoordSubset::singleton(k))));
    DifferenceFamily::new(n, items)
}

/// `(∅, ∅)` and `([a, b], {a, b})` for `1 ≤ a ≤ b ≤ N`.
pub fn double_family(n: usize) -> DifferenceFamily {
    let mut items = vec![FamilyItem::new(CoordSubset::EMPTY, CoordSubset::EMPTY)];
    for b in 1..=n {
        for a in 1..=b {
            let ends = CoordSubset::singleton(a).union(CoordSubset::singleton(b));
            items.push(FamilyItem::new(CoordSubset::interval(a, b), ends));
        }
    }
    DifferenceFamily::new(n, items)
}

/// `∂T_A = A` for `|A| ≤ m`; `T_A = A` when `|A| < m` and `[1, min A − 1] ∪ A` when `|A| = m`.
pub fn mlast_family(n: usize, m: usize) -> Result<DifferenceFamily> {
    if m == 0 {
        return Err(Error::InvalidParameter("m-last family needs m ≥ 1".into()));
    }
    if n > FAMILY_GUARD {
        return Err(Error::SubsetGuard { what: "family index", n, limit: FAMILY_GUARD });
    }
    let mut index: Vec<CoordSubset> = (0..=m.min(n)).flat_map(|k| CoordSubset::of_size(n, k)).collect();
    index.sort_by_key(|a| (a.last().unwrap_or(0), a.mask()));
    let items = index
        .into_iter()
        .map(|a| {
            let t = if a.len() < m { a } else { CoordSubset::interval(1, a.first().unwrap_or(1) - 1).union(a) };
            FamilyItem::new(t, a)
        })
        .collect();
    Ok(DifferenceFamily::new(n, items))
}

/// Every `A ⊆ [1, N]` satisfies `∂T_i ⊆ A ⊆ T_i` for exactly one item.
pub fn validate_family(family: &DifferenceFamily) -> Result<bool> {
    let n = family.n;
    if n > FAMILY_GUARD {
        return Err(Error::SubsetGuard { what: "family validation", n, limit: FAMILY_GUARD });
    }
    let full = CoordSubset::full(n);
    let mut hits = vec![0u32; 1 << n];
    for item in &family.items {
        if !item.boundary.is_subset(item.t) || !item.t.is_subset(full) {
            return Ok(false);
        }
        for b in item.t.difference(item.boundary).subsets() {
            hits[b.union(item.boundary).mask() as usize] += 1;
        }
    }
    Ok(hits.iter().all(|h| *h == 1))
}

pub fn require_valid(family: &DifferenceFamily) -> Result<()> {
    if validate_family(family)? {
        Ok(())
    } else {
        Err(Error::InvalidFamily("some subset is covered zero or several times".into()))
    }
}

/// `Δ_i f` for every item, aligned with `family.items`.
#[derive(Clone, Debug)]
pub struct DifferenceSet<S: Scalar> {
    pub family: DifferenceFamily,
    pub parts: Vec<TensorFunction<S>>,
}

impl<S: Scalar> DifferenceSet<S> {
    pub fn reassemble(&self) -> Result<TensorFunction<S>> {
        let mut acc = self
            .parts
            .first()
            .cloned()
            .ok_or_else(|| Error::InvalidFamily("empty family".into()))?;
        for p in &self.parts[1..] {
            acc.add_assign(p)?;
        }
        Ok(acc)
    }
}

pub fn family_differences<S: Scalar>(f: &TensorFunction<S>, family: &DifferenceFamily) -> Result<DifferenceSet<S>> {
    if family.n != f.n_coords() {
        return Err(Error::InvalidFamily(format!(
            "family on [1, {}] for a function of {} coordinates",
            family.n,
            f.n_coords()
        )));
    }
    require_valid(family)?;
    let parts = family
        .items
        .iter()
        .map(|item| f.apply_ops(&item.ops(family.n)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DifferenceSet { family: family.clone(), parts })
}

/// `E_{[a+1,b−1]} + E_{[a,b]} − E_{[a+1,b]} − E_{[a,b−1]}`, with `E_∅ = E`.
pub fn double_difference_four_term<S: Scalar>(f: &TensorFunction<S>, a: usize, b: usize) -> Result<TensorFunction<S>> {
    if a == 0 || a > b || b > f.n_coords() {
        return Err(Error::InvalidParameter(format!("interval [{a}, {b}] outside [1, {}]", f.n_coords())));
    }
    let e = |lo: usize, hi: usize| f.conditional_expectation(CoordSubset::interval(lo, hi));
    e(a + 1, b - 1)?.add(&e(a, b)?)?.sub(&e(a + 1, b)?)?.sub(&e(a, b - 1)?)
}
