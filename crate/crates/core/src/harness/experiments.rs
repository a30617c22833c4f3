use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{ExperimentConfig, ExperimentKind, Parameters};
use super::report::ExperimentReport;
use super::search::operator_norm_lower_bound;
use crate::decoupling::lambda_recursion;
use crate::error::{Error, Result};
use crate::hoeffding::{project_multiplicity, tensor_power_projection_check, verify_multinomial_identity, verify_q_identity};
use crate::martingale::{double_family, h1_norm, linear_family, mlast_family, reversed_family, DifferenceFamily};
use crate::sample::{complex_normal, normal, random_adapted_tuple, random_independent_tuple, random_torus_polynomial, substream, FrequencyMask};
use crate::scalar::ScalarMode;
use crate::space::{FiniteFactor, ProductSpace};
use crate::stats::{pairwise_sum, Summary};
use crate::tensor::{Exponent, TensorFunction};
use crate::torus::{
    bohr_drop, bohr_lift, character, dirichlet_prime_projection, mask_support, spectrum, torus_space, DirichletPolynomial,
    PrimeSieve, SPECTRAL_TOL,
};
use crate::walsh::khintchine_ratio;

const L1: Exponent = Exponent::Finite(1.0);

/// Which difference family an H¹ norm is taken over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family", content = "m")]
pub enum FamilySpec {
    Linear,
    Reversed,
    Double,
    MLast(usize),
}

impl FamilySpec {
    pub fn build(self, n: usize) -> Result<DifferenceFamily> {
        match self {
            FamilySpec::Linear => Ok(linear_family(n)),
            FamilySpec::Reversed => Ok(reversed_family(n)),
            FamilySpec::Double => Ok(double_family(n)),
            FamilySpec::MLast(m) => mlast_family(n, m),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "norm", content = "family")]
pub enum NormSpec {
    L1,
    H1(FamilySpec),
}

impl NormSpec {
    pub fn eval(self, f: &TensorFunction<Complex64>) -> Result<f64> {
        match self {
            NormSpec::L1 => f.lp_norm(L1),
            NormSpec::H1(fam) => h1_norm(f, &fam.build(f.n_coords())?),
        }
    }
}

/// Random trigonometric polynomials on `Z_K^N` with a frequency mask and degree cap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerSpec {
    pub k: usize,
    pub n_coords: usize,
    pub mask: FrequencyMask,
    pub degree: i64,
}

impl SamplerSpec {
    pub fn space(&self) -> Result<Arc<ProductSpace>> {
        Ok(torus_space(self.k, self.n_coords, ScalarMode::Complex)?.shared())
    }

    pub fn sample(&self, space: Arc<ProductSpace>, rng: &mut impl Rng) -> Result<TensorFunction<Complex64>> {
        let f = random_torus_polynomial(space, self.mask, self.degree, rng)?;
        self.require_member(&f)?;
        Ok(f)
    }

    /// Fails with the largest offending coefficient when `f` leaves the masked subspace.
    pub fn require_member(&self, f: &TensorFunction<Complex64>) -> Result<()> {
        let scale = f.sup_modulus().max(1.0);
        let worst = spectrum(f)?
            .entries(SPECTRAL_TOL * scale)
            .into_iter()
            .filter(|(freq, _)| !self.mask.admits(freq, self.k) || freq.iter().any(|e| e.abs() > self.degree))
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max);
        if worst > 0.0 {
            return Err(Error::OutOfSubspace(worst));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub numerator: NormSpec,
    pub denominator: NormSpec,
    pub ratios: Vec<f64>,
    pub summary: Option<Summary>,
    pub lower: f64,
    pub upper: f64,
    pub passed: bool,
}

/// Ratios `num(f) / den(f)` over `trials` seeded samples, checked against `[lower, upper]`.
pub fn estimate_equivalence(
    num: NormSpec,
    den: NormSpec,
    sampler: &SamplerSpec,
    trials: usize,
    seed: u64,
    envelope: (f64, f64),
) -> Result<EnvelopeReport> {
    let space = sampler.space()?;
    let ratios: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let f = sampler.sample(space.clone(), &mut substream(seed, t))?;
            let d = den.eval(&f)?;
            Ok(if d == 0.0 { 1.0 } else { num.eval(&f)? / d })
        })
        .collect::<Result<_>>()?;
    let passed = ratios.iter().all(|r| *r >= envelope.0 && *r <= envelope.1);
    Ok(EnvelopeReport {
        numerator: num,
        denominator: den,
        summary: Summary::of(&ratios),
        ratios,
        lower: envelope.0,
        upper: envelope.1,
        passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub n: usize,
    pub ratio: f64,
}

fn check_mean_one(f: &[f64]) -> Result<()> {
    if f.is_empty() {
        return Err(Error::InvalidParameter("empty function table".into()));
    }
    if let Some(v) = f.iter().find(|v| **v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("value {v} is negative or not finite")));
    }
    let mean = pairwise_sum(f) / f.len() as f64;
    if (mean - 1.0).abs() > 1e-12 {
        return Err(Error::NonzeroMean(mean - 1.0));
    }
    if f.iter().all(|v| (v - 1.0).abs() <= 1e-12) {
        return Err(Error::InvalidParameter("f ≡ 1 has no growth".into()));
    }
    Ok(())
}

/// `‖P_1 f^{⊗n}‖₁ / ‖f^{⊗n}‖₁` for each `n`, `f` a mean-one density on a uniform factor.
pub fn growth_l1(ns: &[usize], f: &[f64]) -> Result<Vec<GrowthRow>> {
    check_mean_one(f)?;
    let one = ProductSpace::uniform(f.len(), 1, ScalarMode::Real)?.shared();
    let base = TensorFunction::new(one, f.to_vec())?;
    ns.iter()
        .map(|&n| {
            let power = base.tensor_power(n)?;
            let ratio = project_multiplicity(&power, 1)?.lp_norm(L1)? / power.lp_norm(L1)?;
            Ok(GrowthRow { n, ratio })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KhintchineCase {
    pub dim: usize,
    pub coeffs: Vec<f64>,
    pub ratio: f64,
}

/// `(1, 1)` followed by `count` seeded normal vectors of dimension `1..=max_dim`.
pub fn khintchine_sweep(max_dim: usize, count: usize, seed: u64) -> Result<Vec<KhintchineCase>> {
    if max_dim < 2 {
        return Err(Error::InvalidParameter("max_dim must be at least 2".into()));
    }
    let mut vectors = vec![vec![1.0, 1.0]];
    vectors.extend((0..count as u64).map(|t| {
        let mut rng = substream(seed, t);
        let dim = rng.random_range(1..=max_dim);
        (0..dim).map(|_| normal(&mut rng)).collect::<Vec<f64>>()
    }));
    vectors
        .into_par_iter()
        .map(|c| Ok(KhintchineCase { dim: c.len(), ratio: khintchine_ratio(&c)?, coeffs: c }))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRow {
    pub m: usize,
    pub m_prime: usize,
    pub n: usize,
    /// `‖P_{m'} G‖₁ / ‖G‖₁`.
    pub ratio: f64,
    /// The same ratio in the `m`-last family H¹ norm.
    pub h1_ratio: f64,
    /// `‖P_{m'} G − (P_{m'−m} g) ⊗ e‖_∞`.
    pub factorization_deviation: f64,
}

/// `G = f^{⊗n} ⊗ e^{i(t_{n+1} + … + t_{n+m})}` on `Z_K^{n+m}`, `K = |f|`.
pub fn tensor_counterexample(f: &[f64], n: usize, m: usize) -> Result<CounterexampleRow> {
    check_mean_one(f)?;
    let k = f.len();
    if k < 3 || m == 0 || n == 0 {
        return Err(Error::InvalidParameter("need |f| ≥ 3, n ≥ 1 and m ≥ 1".into()));
    }
    let base_space = torus_space(k, 1, ScalarMode::Complex)?.shared();
    let base = TensorFunction::new(base_space.clone(), f.iter().map(|v| Complex64::new(*v, 0.0)).collect())?;
    let g = base.tensor_power(n)?;
    let chi = character(torus_space(k, m, ScalarMode::Complex)?.shared(), &vec![1; m])?;
    let big = g.tensor_product(&chi)?;
    let space = big.space().clone();
    let sampler = SamplerSpec { k, n_coords: n + m, mask: FrequencyMask::MLast(m), degree: crate::torus::band_limit(k) };
    sampler.require_member(&big)?;
    let m_prime = m + 1;
    let projected = project_multiplicity(&big, m_prime)?;
    let predicted = project_multiplicity(&g, 1)?.tensor_product(&chi)?.rebind(space.clone())?;
    let family = mlast_family(n + m, m)?;
    Ok(CounterexampleRow {
        m,
        m_prime,
        n,
        ratio: projected.lp_norm(L1)? / big.lp_norm(L1)?,
        h1_ratio: h1_norm(&projected, &family)? / h1_norm(&big, &family)?,
        factorization_deviation: projected.max_abs_diff(&predicted)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoncontractionWitness {
    pub f_index: usize,
    /// Coefficients of `F(z) = Σ_{j≥1} c_j z^j`.
    pub f_coeffs: Vec<Complex64>,
    pub a: Complex64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoncontractionReport {
    pub best_ratio: f64,
    pub excess: f64,
    pub witness: NoncontractionWitness,
    pub evaluated: usize,
    pub identity_max_deviation: f64,
    pub identity_cases: usize,
}

pub fn a_grid(points: usize) -> Vec<Complex64> {
    let axis: Vec<f64> = if points == 1 {
        vec![0.0]
    } else {
        (0..points).map(|i| -0.5 + i as f64 / (points - 1) as f64).collect()
    };
    axis.iter().flat_map(|re| axis.iter().map(move |im| Complex64::new(*re, *im))).collect()
}

/// `E_w |α + βw|` and `E_w ||α| + |β| w|` over the `K` points of the discretized circle.
pub fn circle_identity(alpha: Complex64, beta: Complex64, k: usize) -> (f64, f64) {
    let roots: Vec<Complex64> = (0..k).map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / k as f64)).collect();
    let avg = |a: Complex64, b: Complex64| pairwise_sum(&roots.iter().map(|w| (a + b * w).norm()).collect::<Vec<_>>()) / k as f64;
    (avg(alpha, beta), avg(Complex64::new(alpha.norm(), 0.0), Complex64::new(beta.norm(), 0.0)))
}

/// `h1(P_1 g) / h1(g)` over `g = F(z) + w + a z w` on `Z_K²`, linear family.
pub fn noncontraction_search(k: usize, grid: usize, f_count: usize, degree: i64, seed: u64) -> Result<NoncontractionReport> {
    if k < 8 || grid == 0 || f_count == 0 {
        return Err(Error::InvalidParameter("need K ≥ 8 and a non-empty grid".into()));
    }
    let degree = degree.clamp(1, crate::torus::band_limit(k));
    let space = torus_space(k, 2, ScalarMode::Complex)?.shared();
    let family = linear_family(2);
    let sampler = SamplerSpec { k, n_coords: 2, mask: FrequencyMask::MLast(1), degree: crate::torus::band_limit(k) };
    let grid_points = a_grid(grid);
    let w = character(space.clone(), &[0, 1])?;
    let zw = character(space.clone(), &[1, 1])?;
    let per_f: Vec<Vec<NoncontractionWitness>> = (0..f_count)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let coeffs: Vec<Complex64> = (0..degree).map(|_| complex_normal(&mut rng)).collect();
            let terms: Vec<(Vec<i64>, Complex64)> = coeffs.iter().enumerate().map(|(j, c)| (vec![j as i64 + 1, 0], *c)).collect();
            let big_f = crate::torus::trig_polynomial(space.clone(), &terms)?;
            let base = big_f.add(&w)?;
            grid_points
                .iter()
                .map(|a| {
                    let g = base.add(&zw.scale(a))?;
                    sampler.require_member(&g)?;
                    let p1 = project_multiplicity(&g, 1)?;
                    let ratio = h1_norm(&p1, &family)? / h1_norm(&g, &family)?;
                    Ok(NoncontractionWitness { f_index: i, f_coeffs: coeffs.clone(), a: *a, ratio })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let evaluated = per_f.iter().map(Vec::len).sum();
    let mut best: Option<NoncontractionWitness> = None;
    for w in per_f.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| w.ratio > b.ratio) {
            best = Some(w);
        }
    }
    let witness = best.expect("non-empty grid");

    let mut pairs = vec![(Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0))];
    let mut rng = substream(seed, u64::MAX);
    for _ in 0..32 {
        let alpha = complex_normal(&mut rng);
        let step = rng.random_range(0..k);
        let beta = Complex64::from_polar(complex_normal(&mut rng).norm(), alpha.arg() + 2.0 * PI * step as f64 / k as f64);
        pairs.push((alpha, beta));
    }
    let identity_max_deviation = pairs
        .iter()
        .map(|(a, b)| {
            let (lhs, rhs) = circle_identity(*a, *b, k);
            (lhs - rhs).abs()
        })
        .fold(0.0, f64::max);
    Ok(NoncontractionReport {
        best_ratio: witness.ratio,
        excess: witness.ratio - 1.0,
        witness,
        evaluated,
        identity_max_deviation,
        identity_cases: pairs.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BohrSummary {
    pub max_index: u64,
    pub roundtrip_exact: bool,
    pub isometry_exact: bool,
    pub factorization_matches_oracle: bool,
    pub commutation: Vec<(usize, bool)>,
}

fn trial_division(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Seeded coefficients `b_n`, `1 ≤ n ≤ max_index`; round trip, isometry, factorization and
/// projection/lift commutation on the prefix `n ≤ support`.
pub fn bohr_roundtrip(max_index: u64, support: u64, max_m: usize, seed: u64) -> Result<BohrSummary> {
    if max_index == 0 {
        return Err(Error::InvalidParameter("max_index must be positive".into()));
    }
    let mut rng = substream(seed, 0);
    let d = DirichletPolynomial::from_terms((1..=max_index).map(|n| (n, complex_normal(&mut rng))))?;
    let lift = bohr_lift(&d);
    let back = bohr_drop(&lift)?;
    let roundtrip_exact = back == d;
    let key = |c: &Complex64| (c.re.to_bits(), c.im.to_bits());
    let mut a: Vec<_> = d.iter().map(|(_, c)| key(&c)).collect();
    let mut b: Vec<_> = lift.coeffs.values().map(key).collect();
    a.sort_unstable();
    b.sort_unstable();
    let isometry_exact = a == b && lift.coeffs.len() == d.len();

    let sieve = PrimeSieve::new(max_index);
    let primes = sieve.primes().to_vec();
    let factorization_matches_oracle = (1..=max_index).into_par_iter().all(|n| {
        let ours: Vec<(u64, u32)> = sieve.factorize(n).into_iter().map(|(j, e)| (primes[j], e)).collect();
        ours == trial_division(n)
    });

    let prefix = DirichletPolynomial::from_terms(d.iter().filter(|(n, _)| *n <= support.min(max_index)))?;
    let prefix_lift = bohr_lift(&prefix);
    let commutation = (0..=max_m)
        .map(|m| (m, bohr_lift(&dirichlet_prime_projection(&prefix, m)) == mask_support(&prefix_lift, m)))
        .collect();
    Ok(BohrSummary { max_index, roundtrip_exact, isometry_exact, factorization_matches_oracle, commutation })
}

fn seed_of(p: &Parameters) -> u64 {
    p.seed.expect("resolved config carries a seed")
}

fn q_identity(p: &Parameters, r: &mut ExperimentReport) -> Result<()> {
    let (nn, n, m) = (p.n_coords.unwrap(), p.n.unwrap(), p.m.unwrap());
    let space = ProductSpace::uniform(2, nn, ScalarMode::Rational)?.shared();
    let rep = verify_q_identity(nn, n, m, &space)?;
    r.check("operator_match", rep.operator_match, &rep.coefficient, "Q_m equals coefficient · P_m on every indicator")?;
    r.push_case(rep)
}

fn multinomial_identity(p: &Parameters, r: &mut ExperimentReport) -> Result<()> {
    let (n, m) = (p.n.unwrap(), p.m.unwrap());
    let coords = n * m;
    let space = ProductSpace::with_guard(vec![FiniteFactor::uniform(2)?; coords], ScalarMode::Rational, crate::space::DEFAULT_ATOM_GUARD)?.shared();
    let rep = verify_multinomial_identity(n, m, &space)?;
    r.check("count", rep.matched, rep.count_per_b, &format!("every P_B appears {} times", rep.expected_count))?;
    r.check("operator_match", rep.operator_match, rep.operator_match, "sum over partitions equals count · P_m")?;
    r.push_case(rep)
}

#[derive(Serialize)]
struct ZinnCase {
    kind: &'static str,
    trial: usize,
    n: usize,
    k: usize,
    zinn_left: f64,
    zinn_right: f64,
    elambda_n: f64,
    hard_ok: bool,
    chain_ok: bool,
    reverse_ratio: f64,
    sandwich_ok: bool,
}

fn zinn_sweep(p: &Parameters, r: &mut ExperimentReport) -> Result<()> {
    let (n_max, k, trials, seed) = (p.n_coords.unwrap(), p.k.unwrap(), p.trials.unwrap(), seed_of(p));
    let adapted: Vec<ZinnCase> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let n = 1 + t % n_max;
            let space = ProductSpace::uniform(k, n, ScalarMode::Real)?.shared();
            let tuple = random_adapted_tuple(space, &mut substream(seed, t as u64))?;
            let (_, rep) = lambda_recursion(&tuple)?;
            Ok(ZinnCase {
                kind: "adapted",
                trial: t,
                n,
                k,
                zinn_left: rep.zinn_left,
                zinn_right: rep.zinn_right,
                elambda_n: rep.elambda_n,
                hard_ok: rep.zinn_left <= 2.0 * rep.zinn_right + 1e-10,
                chain_ok: rep.lower_ok && rep.upper_ok && rep.measurable_ok && rep.monotone_ok,
                reverse_ratio: rep.zinn_right / rep.zinn_left,
                sandwich_ok: rep.sandwich_ok,
            })
        })
        .collect::<Result<_>>()?;
    let independent: Vec<ZinnCase> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let n = 1 + t % 5;
            let kk = 2 + t % 2;
            let space = ProductSpace::uniform(kk, n, ScalarMode::Real)?.shared();
            let tuple = random_independent_tuple(space, &mut substream(seed, (1 << 32) + t as u64))?;
            let (_, rep) = lambda_recursion(&tuple)?;
            Ok(ZinnCase {
                kind: "independent",
                trial: t,
                n,
                k: kk,
                zinn_left: rep.zinn_left,
                zinn_right: rep.zinn_right,
                elambda_n: rep.elambda_n,
                hard_ok: rep.zinn_left <= 2.0 * rep.zinn_right + 1e-10,
                chain_ok: rep.lower_ok && rep.upper_ok && rep.measurable_ok && rep.monotone_ok,
                reverse_ratio: rep.zinn_right / rep.zinn_left,
                sandwich_ok: rep.sandwich_ok && rep.independent,
            })
        })
        .collect::<Result<_>>()?;
    let hard_failures = adapted.iter().filter(|c| !c.hard_ok).count();
    let chain_failures = adapted.iter().chain(&independent).filter(|c| !c.chain_ok).count();
    let sandwich_failures = independent.iter().filter(|c| !c.sandwich_ok).count();
    let reverse: Vec<f64> = adapted.iter().map(|c| c.reverse_ratio).collect();
    let reverse_max = reverse.iter().copied().fold(0.0, f64::max);
    r.summarize("reverse_ratio", &reverse);
    r.summarize("forward_ratio", &adapted.iter().map(|c| c.zinn_left / c.zinn_right).collect::<Vec<_>>());
    r.check("hard_bound", hard_failures == 0, hard_failures, "zinn_left ≤ 2·zinn_right + 1e-10, zero failures")?;
    r.check("lambda_chain", chain_failures == 0, chain_failures, "zinn_left ≤ 2Eλ_N ≤ 2·zinn_right, zero failures")?;
    r.check("lambda_sandwich", sandwich_failures == 0, sandwich_failures, "λ_N ≤ E√ΣX² ≤ 2λ_N, zero failures")?;
    r.check("reverse_envelope", reverse_max <= 10.0, reverse_max, "zinn_right ≤ 10·zinn_left")?;
    for c in adapted.into_iter().chain(independent) {
        r.push_case(c)?;
    }
    Ok(())
}

fn growth(p: &Parameters, r: &mut ExperimentReport) -> Result<()> {
    let (n_max, step) = (p.n_max.unwrap(), p.step.unwrap());
    let f = p.f.clone().unwrap();
    let ns: Vec<usize> = (step..=n_max).step_by(step).collect();
    let rows = growth_l1(&ns, &f)?;
    let increasing = rows.windows(2).all(|w| w[1].ratio > w[0].ratio);
    let ratios: Vec<f64> = rows.iter().map(|row| row.ratio).collect();
    r.summarize("ratio", &ratios);
    r.check("strictly_increasing", increasing, &ratios, "ratio strictly increasing along the table")?;
    for row in rows {
        r.push_case(row)?;
    }
    if let Some(pp) = p.p {
        let space = ProductSpace::uniform(f.len(), p.n_coords.unwrap(), ScalarMode::Real)?.shared();
        let lb = operator_norm_lower_bound(&space, 1, pp, p.trials.unwrap(), 100, seed_of(p))?;
        r.push_case(json!({ "lower_bound": lb }))?;
    }
    Ok(())
}

fn h1_equivalence(p: &Parameters, r: &mut ExperimentReport) -> Result<()> {
    let (k, n, trials, degree, seed) = (p.k.unwrap(), p.n_coords.unwrap(), p.trials.unwrap(), p.degree.unwrap(), seed_of(p));
    let runs = [
        ("h1_linear_over_l1", FamilySpec::Linear, 1, (0.99, 50.0)),
        ("h1_t2_over_l1", FamilySpec::MLast(2), 2, (1.0 / 50.0, 50.0)),
    ];
    for (i, (name, fam, m, env)) in runs.into_iter().enumerate() {
        let sampler = SamplerSpec { k, n_coords: n, mask: FrequencyMask::MLast(m), degree };
        let rep = estimate_equivalence(NormSpec::H1(fam), NormSpec::L1, &sampler, trials, seed.wrapping_add(i as u64), env)?;
        r.summarize(name, &rep.ratios);
        let observed = rep.summary.clone();
        r.check(name, rep.passed, observed, &format!("⊆ [{}, {}]", env.0, env.1))?;
        r.push_case(json!({ "name": name, "envelope": rep }))?;
    }
    Ok(())
}

fn pm_on_h1tm(p: &Parameters, r: &mut ExperimentReport) -> Result<()> {
    let (k, n, trials, degree, seed) = (p.k.unwrap(), p.n_coords.unwrap(), p.trials.unwrap(), p.degree.unwrap(), seed_of(p));
    let space = torus_space(k, n, ScalarMode::Complex)?.shared();
    for m in 1..=2usize.min(n) {
        let family = mlast_family(n, m)?;
        let sampler = SamplerSpec { k, n_coords: n, mask: FrequencyMask::MLast(m), degree };
        let ratios: Vec<Vec<f64>> = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let f = sampler.sample(space.clone(), &mut substream(seed, ((m as u64) << 32) + t))?;
                let base = h1_norm(&f, &family)?;
                (0..=m).map(|mp| Ok(h1_norm(&project_multiplicity(&f, mp)?, &family)? / base)).collect()
            })
            .collect::<Result<_>>()?;
        for mp in 0..=m {
            let col: Vec<f64> = ratios.iter().map(|row| row[mp]).collect();
            let max = col.iter().copied().fold(0.0, f64::max);
            let name = format!("bounded_m{m}_mprime{mp}");
            r.summarize(&name, &col);
            r.check(&name, max <= 10.0, max, "‖P_{m'} f‖ ≤ 10‖f‖ in the m-last H¹ norm")?;
            r.push_case(json!({ "m": m, "m_prime": mp, "max_ratio": max }))?;
        }
    }
    let f = p.f.clone().unwrap();
    let n_max = p.n_max.unwrap();
    if n_max < 2 {
        return Err(Error::InvalidParameter("n_max must be at least 2".into()));
    }
    for m in 1..=2usize {
        let rows: Vec<CounterexampleRow> = (2..=n_max).map(|nn| tensor_counterexample(&f, nn, m)).collect::<Result<_>>()?;
        let first = rows.first().unwrap().ratio;
        let last = rows.last().unwrap().ratio;
        let factor_dev = rows.iter().map(|row| row.factorization_deviation).fold(0.0, f64::max);
        r.check(
            &format!("unbounded_m{m}"),
            last > first,
            (first, last),
            &format!("ratio at n = {n_max} exceeds ratio at n = 2"),
        )?;
        r.check(&format!("factorization_m{m}"), factor_dev <= 1e-9, factor_dev, "P_{m+1} G = (P_1 g) ⊗ e within 1e-9")?;
        for row in rows {
            r.push_case(row)?;
        }
    }
    Ok(())
}

fn khintchine(p: &Parameters, r: &mut ExperimentReport) -> Result<()> {
    let cases = khintchine_sweep(p.max_dim.unwrap(), p.trials.unwrap(), seed_of(p))?;
    let ratios: Vec<f64> = cases.iter().map(|c| c.ratio).collect();
    let (argmin, min) = ratios.iter().copied().enumerate().fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    r.summarize("ratio", &ratios);
    r.check("min_ratio", (min - FRAC_1_SQRT_2).abs() <= 1e-9, json!({"min": min, "at": cases[argmin].coeffs}), "equals 1/√2 within 1e-9")?;
    let max = ratios.iter().copied().fold(0.0, f64::max);
    r.check("max_ratio", max <= 1.0 + 1e-12, max, "≤ 1")?;
    for c in cases {
        r.push_case(c)?;
    }
    Ok(())
}

fn bohr(p: &Parameters, r: &mut ExperimentReport) -> Result<()> {
    let s = bohr_roundtrip(p.max_index.unwrap(), p.projection_support.unwrap(), p.m.unwrap(), seed_of(p))?;
    r.check("roundtrip", s.roundtrip_exact, s.max_index, "drop(lift(d)) = d exactly")?;
    r.check("isometry", s.isometry_exact, s.isometry_exact, "coefficient multisets equal")?;
    r.check("factorization_oracle", s.factorization_matches_oracle, s.max_index, "sieve agrees with trial division")?;
    let all = s.commutation.iter().all(|(_, ok)| *ok);
    r.check("commutation", all, &s.commutation, "lift ∘ prime projection = support mask ∘ lift")?;
    r.push_case(s)
}

fn noncontraction(p: &Parameters, r: &mut ExperimentReport) -> Result<()> {
    let rep = noncontraction_search(p.k.unwrap(), p.grid.unwrap(), p.trials.unwrap(), p.degree.unwrap(), seed_of(p))?;
    r.check("best_ratio", rep.best_ratio >= 1.0 - 1e-9, rep.best_ratio, "≥ 1 − 1e-9")?;
    r.check("circle_identity", rep.identity_max_deviation <= 1e-10, rep.identity_max_deviation, "E|α+βw| = E||α|+|β|w| within 1e-10")?;
    r.push_case(rep)
}

/// Resolves `config`, runs it, and writes the JSON/CSV outputs it names.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let config = config.resolve()?;
    let start = std::time::Instant::now();
    let mut report = ExperimentReport::new(config.clone());
    let p = &config.parameters;
    match config.experiment {
        ExperimentKind::QIdentity => q_identity(p, &mut report)?,
        ExperimentKind::MultinomialIdentity => multinomial_identity(p, &mut report)?,
        ExperimentKind::ZinnSweep => zinn_sweep(p, &mut report)?,
        ExperimentKind::GrowthL1 => growth(p, &mut report)?,
        ExperimentKind::H1Equivalence => h1_equivalence(p, &mut report)?,
        ExperimentKind::PmOnH1tm => pm_on_h1tm(p, &mut report)?,
        ExperimentKind::KhintchineSweep => khintchine(p, &mut report)?,
        ExperimentKind::BohrRoundtrip => bohr(p, &mut report)?,
        ExperimentKind::NoncontractionSearch => noncontraction(p, &mut report)?,
    }
    if p.record_timing == Some(true) {
        report.wall_clock_ms = Some(start.elapsed().as_millis());
    }
    if let Some(path) = &p.output_path {
        report.write_json(path)?;
    }
    if let Some(path) = &p.csv_path {
        report.write_csv(std::fs::File::create(path)?)?;
    }
    Ok(report)
}

/// `P_m(f^{⊗m}) = (P_1 f)^{⊗m}` for the mean-zero function `f` with the given values.
pub fn tensor_power_identity(values: &[f64], m: usize) -> Result<bool> {
    let space = ProductSpace::uniform(values.len(), 1, ScalarMode::Real)?.shared();
    let f = TensorFunction::new(space, values.to_vec())?;
    Ok(tensor_power_projection_check(&f, m, &[L1])?.identity_holds)
}
