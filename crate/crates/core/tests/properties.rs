mod common;

use num_complex::Complex64;
use proptest::prelude::*;

use hoeffding::decoupling::{lambda_recursion, zinn_left, zinn_right, EvalMode};
use hoeffding::hoeffding::{hoeffding_component, hoeffding_decompose, project_multiplicity};
use hoeffding::martingale::{double_difference_four_term, double_family, family_differences, h1_norm, linear_family, mlast_family};
use hoeffding::sample::{random_adapted_tuple, random_complex, random_independent_tuple, random_rational, random_real, substream};
use hoeffding::torus::{bohr_drop, bohr_lift, inverse_spectrum, project_mlast, spectrum, torus_space, DirichletPolynomial};
use hoeffding::walsh::{khintchine_ratio, walsh_hadamard_transform, walsh_inverse};
use hoeffding::{CoordSubset, Exponent, FiniteFactor, ProductSpace, ScalarMode, TensorFunction};

use common::{rational_space, real_space};

fn skewed_space(weights: &[f64], n: usize) -> std::sync::Arc<ProductSpace> {
    let total: f64 = weights.iter().sum();
    let f = FiniteFactor::new(weights.iter().map(|w| w / total).collect()).unwrap();
    ProductSpace::power(&f, n, ScalarMode::Real).unwrap().shared()
}

fn subset(mask: u32, n: usize) -> CoordSubset {
    let members: Vec<usize> = (1..=n).filter(|c| mask >> (c - 1) & 1 == 1).collect();
    CoordSubset::new(&members).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conditional_expectation_is_idempotent_and_towers(
        seed in any::<u64>(),
        w in prop::collection::vec(0.05f64..1.0, 2..4),
        n in 1usize..4,
        a in any::<u32>(),
        b in any::<u32>(),
    ) {
        let s = skewed_space(&w, n);
        let f = random_real(s.clone(), &mut substream(seed, 0)).unwrap();
        let (a, b) = (subset(a, n), subset(b, n));
        let ea = f.conditional_expectation(a).unwrap();
        prop_assert!(ea.conditional_expectation(a).unwrap().max_abs_diff(&ea).unwrap() < 1e-12);
        let tower = ea.conditional_expectation(b).unwrap();
        let direct = f.conditional_expectation(a.intersection(b)).unwrap();
        prop_assert!(tower.max_abs_diff(&direct).unwrap() < 1e-12);
        prop_assert!(common::max_diff(ea.values(), &common::cond_exp(&f, a)) < 1e-12);
    }

    #[test]
    fn lp_norms_are_monotone(seed in any::<u64>(), n in 1usize..4, p in 1.0f64..6.0, dp in 0.0f64..4.0) {
        let f = random_real(real_space(3, n), &mut substream(seed, 0)).unwrap();
        let lo = f.lp_norm(Exponent::Finite(p)).unwrap();
        let hi = f.lp_norm(Exponent::Finite(p + dp)).unwrap();
        prop_assert!(lo <= hi * (1.0 + 1e-12));
        prop_assert!(hi <= f.lp_norm(Exponent::Sup).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn tensor_norms_multiply(seed in any::<u64>(), n1 in 1usize..3, n2 in 1usize..3, p in 1.0f64..4.0) {
        let mut rng = substream(seed, 0);
        let f = random_real(real_space(2, n1), &mut rng).unwrap();
        let g = random_real(real_space(3, n2), &mut rng).unwrap();
        let fg = f.tensor_product(&g).unwrap();
        for e in [Exponent::Finite(p), Exponent::Sup] {
            let want = f.lp_norm(e).unwrap() * g.lp_norm(e).unwrap();
            prop_assert!((fg.lp_norm(e).unwrap() - want).abs() <= 1e-10 * want.max(1.0));
        }
    }

    #[test]
    fn components_are_complete_and_orthogonal(seed in any::<u64>(), w in prop::collection::vec(0.05f64..1.0, 2..4), n in 1usize..4) {
        let s = skewed_space(&w, n);
        let f = random_real(s.clone(), &mut substream(seed, 0)).unwrap();
        let comps = hoeffding_decompose(&f).unwrap();
        prop_assert!(comps.reassemble().unwrap().max_abs_diff(&f).unwrap() < 1e-10);
        let all: Vec<_> = s.all_coords().subsets().collect();
        for (i, a) in all.iter().enumerate() {
            for b in &all[i + 1..] {
                prop_assert!(comps.get(*a).unwrap().inner_product(comps.get(*b).unwrap()).unwrap().abs() < 1e-10);
            }
            prop_assert!(common::max_diff(comps.get(*a).unwrap().values(), common::component(&f, *a).values()) < 1e-10);
        }
    }

    #[test]
    fn multiplicity_projections_are_orthogonal_idempotents(seed in any::<u64>(), n in 1usize..5, m1 in 0usize..5, m2 in 0usize..5) {
        prop_assume!(m1 <= n && m2 <= n);
        let f = random_rational(rational_space(2, n), 5, &mut substream(seed, 0)).unwrap();
        let pm2 = project_multiplicity(&f, m2).unwrap();
        let both = project_multiplicity(&pm2, m1).unwrap();
        if m1 == m2 {
            prop_assert_eq!(both, pm2);
        } else {
            prop_assert!(both.values().iter().all(num_traits::Zero::is_zero));
        }
    }

    #[test]
    fn conditional_expectation_sums_components(seed in any::<u64>(), n in 1usize..4, a in any::<u32>()) {
        let f = random_rational(rational_space(3, n), 4, &mut substream(seed, 0)).unwrap();
        let a = subset(a, n);
        let mut sum = TensorFunction::zeros(f.space().clone()).unwrap();
        for b in a.subsets() {
            sum.add_assign(&hoeffding_component(&f, b).unwrap()).unwrap();
        }
        prop_assert_eq!(sum, f.conditional_expectation(a).unwrap());
    }

    #[test]
    fn walsh_transform_inverts_and_preserves_energy(seed in any::<u64>(), n in 1usize..7) {
        let s = rational_space(2, n);
        let f = random_rational(s.clone(), 9, &mut substream(seed, 0)).unwrap();
        let spec = walsh_hadamard_transform(&f).unwrap();
        prop_assert_eq!(walsh_inverse(&spec, s).unwrap(), f.clone());
        let fr = random_real(real_space(2, n), &mut substream(seed, 1)).unwrap();
        let spec = walsh_hadamard_transform(&fr).unwrap();
        let energy: f64 = spec.coeffs.iter().map(|c| c * c).sum();
        prop_assert!((energy - fr.inner_product(&fr).unwrap()).abs() < 1e-10 * energy.max(1.0));
    }

    #[test]
    fn khintchine_ratio_in_range(coeffs in prop::collection::vec(-5.0f64..5.0, 1..10)) {
        prop_assume!(coeffs.iter().any(|c| c.abs() > 1e-6));
        let r = khintchine_ratio(&coeffs).unwrap();
        prop_assert!(r >= std::f64::consts::FRAC_1_SQRT_2 - 1e-12 && r <= 1.0 + 1e-12);
    }

    #[test]
    fn dft_round_trip_and_plancherel(seed in any::<u64>(), k in 2usize..7, n in 1usize..4) {
        let s = torus_space(k, n, ScalarMode::Complex).unwrap().shared();
        let f = random_complex(s.clone(), &mut substream(seed, 0)).unwrap();
        let spec = spectrum(&f).unwrap();
        let energy = f.inner_product(&f).unwrap().re;
        prop_assert!((spec.energy() - energy).abs() < 1e-10 * energy.max(1.0));
        prop_assert!(inverse_spectrum(&spec, s).unwrap().max_abs_diff(&f).unwrap() < 1e-10);
    }

    #[test]
    fn mlast_projections_compose(seed in any::<u64>(), n in 1usize..4, m1 in 1usize..4, m2 in 1usize..4) {
        let s = torus_space(5, n, ScalarMode::Complex).unwrap().shared();
        let f = random_complex(s, &mut substream(seed, 0)).unwrap();
        let both = project_mlast(&project_mlast(&f, m1).unwrap(), m2).unwrap();
        let direct = project_mlast(&f, m1.max(m2)).unwrap();
        prop_assert!(both.max_abs_diff(&direct).unwrap() < 1e-10);
    }

    #[test]
    fn bohr_lift_is_an_isometry(terms in prop::collection::btree_map(1u64..5000, (-3.0f64..3.0, -3.0f64..3.0), 1..20)) {
        let d = DirichletPolynomial::from_terms(terms.into_iter().map(|(n, (re, im))| (n, Complex64::new(re, im)))).unwrap();
        let lift = bohr_lift(&d);
        prop_assert!((lift.energy() - d.energy()).abs() < 1e-12 * d.energy().max(1.0));
        prop_assert_eq!(bohr_drop(&lift).unwrap(), d);
    }

    #[test]
    fn family_differences_sum_to_identity(seed in any::<u64>(), n in 1usize..5, m in 1usize..4, which in 0usize..3) {
        let f = random_rational(rational_space(2, n), 6, &mut substream(seed, 0)).unwrap();
        let fam = match which {
            0 => linear_family(n),
            1 => double_family(n),
            _ => mlast_family(n, m).unwrap(),
        };
        let diffs = family_differences(&f, &fam).unwrap();
        let mut sum = TensorFunction::zeros(f.space().clone()).unwrap();
        for part in &diffs.parts {
            sum.add_assign(part).unwrap();
        }
        prop_assert_eq!(sum, f);
    }

    #[test]
    fn diagonal_double_difference_is_single_component(seed in any::<u64>(), n in 1usize..5, a in 1usize..5) {
        prop_assume!(a <= n);
        let f = random_rational(rational_space(3, n), 4, &mut substream(seed, 0)).unwrap();
        let want = hoeffding_component(&f, CoordSubset::singleton(a)).unwrap();
        prop_assert_eq!(double_difference_four_term(&f, a, a).unwrap(), want);
    }

    #[test]
    fn zinn_hard_bound(seed in any::<u64>(), k in 2usize..4, n in 1usize..4) {
        let t = random_adapted_tuple(real_space(k, n), &mut substream(seed, 0)).unwrap();
        let right = zinn_right(&t, EvalMode::Exact).unwrap().0;
        prop_assert!(zinn_left(&t).unwrap() <= 2.0 * right * (1.0 + 1e-12) + 1e-12);
        let (_, lr) = lambda_recursion(&t).unwrap();
        prop_assert!(lr.lower_ok && lr.upper_ok && lr.monotone_ok && lr.measurable_ok);
    }

    #[test]
    fn lambda_sandwich_for_independent_tuples(seed in any::<u64>(), k in 2usize..4, n in 1usize..5) {
        let t = random_independent_tuple(real_space(k, n), &mut substream(seed, 0)).unwrap();
        let (_, lr) = lambda_recursion(&t).unwrap();
        prop_assert!(lr.independent && lr.sandwich.is_some() && lr.sandwich_ok);
    }
}

#[test]
fn h1_linear_dominates_l1() {
    let mut worst = (f64::MAX, 0, 0, 0);
    for t in 0..200u64 {
        let (k, n) = (2 + (t % 2) as usize, 1 + (t / 2 % 4) as usize);
        let f = random_real(real_space(k, n), &mut substream(21, t)).unwrap();
        let gap = h1_norm(&f, &linear_family(n)).unwrap() - f.lp_norm(Exponent::Finite(1.0)).unwrap();
        if gap < worst.0 {
            worst = (gap, t, k, n);
        }
    }
    let (gap, t, k, n) = worst;
    assert!(gap >= -1e-10, "h1 − L1 = {gap:.6} for trial {t} on Z_{k}^{n}");
}
