mod common;

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use num_traits::Zero;
use serde_json::Value;

use hoeffding::harness::{growth_l1, run_experiment, ExperimentConfig, ExperimentKind, ExperimentReport};
use hoeffding::hoeffding::{
    apply_q_operator, binomial, hoeffding_decompose, project_multiplicity, tensor_power_projection_check, verify_multinomial_identity,
    verify_q_identity,
};
use hoeffding::martingale::{double_family, family_differences, linear_family, mlast_family, reversed_family, validate_family, DifferenceFamily};
use hoeffding::sample::{random_rational, random_real, random_torus_polynomial, substream, FrequencyMask};
use hoeffding::scalar::{format_rational, rational};
use hoeffding::torus::{frequency_support, spectrum, symmetric, torus_space};
use hoeffding::walsh::{khintchine_ratio, walsh_hadamard_transform};
use hoeffding::{CoordOp, CoordSubset, Exponent, Rational, ScalarMode, TensorFunction};

use common::{component, max_diff, naive_dft, rational_space, real_space, walsh_coefficient, walsh_function};

type Outcome = Result<String, String>;

const SEED: u64 = 7;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: hoeffding::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// Number of `|A| = n` meeting `{1, …, m}` in exactly one point, over `C(N, n)`.
fn q_coefficient_by_count(big_n: usize, n: usize, m: usize) -> Rational {
    let b = (1u64 << m) - 1;
    let hits = (0u64..1 << big_n).filter(|a| a.count_ones() as usize == n && (a & b).count_ones() == 1).count();
    Rational::new(hits.into(), binomial(big_n, n))
}

fn mean_zero_rational(k: usize, seed: u64) -> TensorFunction<Rational> {
    let f = random_rational(rational_space(k, 1), 6, &mut substream(seed, 0)).unwrap();
    let m = f.expectation();
    f.map(|v| v - m.clone()).unwrap()
}

fn criterion_1() -> Outcome {
    let mut detail = Vec::new();
    for (big_n, n, m, want) in [(4, 2, 2, "2/3"), (6, 2, 3, "3/5"), (6, 3, 2, "3/5")] {
        let rep = lib(verify_q_identity(big_n, n, m, &rational_space(2, big_n)))?;
        ensure(rep.operator_match, || format!("Q identity fails for ({big_n},{n},{m})"))?;
        ensure(rep.coefficient == want, || format!("({big_n},{n},{m}) coefficient {} != {want}", rep.coefficient))?;
        let counted = format_rational(&q_coefficient_by_count(big_n, n, m));
        ensure(counted == want, || format!("({big_n},{n},{m}) counted coefficient {counted} != {want}"))?;
        detail.push(format!("({big_n},{n},{m})→{}", rep.coefficient));
    }
    let space = rational_space(2, 6);
    let stated = rational(9, 20);
    let e = TensorFunction::from_fn(space.clone(), |x| if x.iter().all(|v| *v == 0) { rational(1, 1) } else { Rational::zero() }).unwrap();
    let stated_matches = lib(apply_q_operator(&e, 3, 2))? == lib(project_multiplicity(&e, 2))?.scale(&stated);
    ensure(!stated_matches, || "9/20 unexpectedly satisfies the (6,3,2) identity".into())?;
    detail.push("9/20·P_2 rejected for (6,3,2)".into());

    for (n, m, want) in [(2, 2, 4u64), (3, 2, 12)] {
        let rep = lib(verify_multinomial_identity(n, m, &rational_space(2, n * m)))?;
        ensure(rep.matched && rep.operator_match && rep.count_per_b == Some(want), || {
            format!("multinomial ({n},{m}): count {:?}, want {want}", rep.count_per_b)
        })?;
    }
    detail.push("multinomial counts 4, 12".into());

    for k in [2, 3] {
        for m in 1..=3 {
            for s in 0..3 {
                let f = mean_zero_rational(k, 100 * k as u64 + 10 * m as u64 + s);
                let rep = lib(tensor_power_projection_check(&f, m, &[Exponent::Finite(1.0)]))?;
                ensure(rep.identity_holds, || format!("tensor power identity fails on Z_{k}, m={m}"))?;
                let power = lib(f.tensor_power(m))?;
                let oracle = common::multiplicity(&power, m);
                let rhs = lib(lib(project_multiplicity(&f, 1))?.tensor_power(m))?;
                ensure(oracle == rhs, || format!("oracle P_m(f^⊗m) differs on Z_{k}, m={m}"))?;
            }
        }
    }
    detail.push("tensor powers exact on Z_2, Z_3, m ≤ 3".into());
    Ok(detail.join("; "))
}

fn criterion_2() -> Outcome {
    let space = real_space(3, 4);
    let mut worst_sum: f64 = 0.0;
    let mut worst_orth: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for t in 0..50 {
        let f = lib(random_real(space.clone(), &mut substream(SEED, t)))?;
        let comps = lib(hoeffding_decompose(&f))?;
        let scale = f.sup_modulus().max(1.0);
        worst_sum = worst_sum.max(lib(lib(comps.reassemble())?.max_abs_diff(&f))? / scale);
        let parts: Vec<(CoordSubset, &TensorFunction<f64>)> = comps.iter().collect();
        let energy = lib(f.inner_product(&f))?;
        for (i, (a, pa)) in parts.iter().enumerate() {
            worst_oracle = worst_oracle.max(max_diff(pa.values(), component(&f, *a).values()) / scale);
            for (_, pb) in &parts[i + 1..] {
                worst_orth = worst_orth.max(lib(pa.inner_product(pb))?.abs() / energy);
            }
        }
    }
    ensure(worst_sum <= 1e-10, || format!("Σ P_A f deviates by {worst_sum:e}"))?;
    ensure(worst_orth <= 1e-10, || format!("orthogonality defect {worst_orth:e}"))?;
    ensure(worst_oracle <= 1e-10, || format!("components differ from inclusion-exclusion by {worst_oracle:e}"))?;

    for n in 1..=6 {
        let space = rational_space(2, n);
        let f = lib(random_rational(space.clone(), 5, &mut substream(SEED, 100 + n as u64)))?;
        let spec = lib(walsh_hadamard_transform(&f))?;
        let comps = lib(hoeffding_decompose(&f))?;
        for a in space.all_coords().subsets() {
            let c = walsh_coefficient(&f, a);
            ensure(*spec.coeff(a) == c, || format!("Walsh coefficient mismatch at {a:?}, N={n}"))?;
            let want = walsh_function::<Rational>(&space, a).scale(&c);
            ensure(comps.get(a) == Some(&want), || format!("P_A ≠ ĉ(A) w_A at {a:?}, N={n}"))?;
        }
    }

    let tspace = lib(torus_space(8, 3, ScalarMode::Complex))?.shared();
    let f = lib(random_torus_polynomial(tspace.clone(), FrequencyMask::Band, 3, &mut substream(SEED, 200)))?;
    let reference = naive_dft(&f, 8);
    let mut worst_spec: f64 = 0.0;
    for a in tspace.all_coords().subsets() {
        let pa = lib(hoeffding::hoeffding::hoeffding_component(&f, a))?;
        let s = lib(spectrum(&pa))?;
        for (res, c) in &reference {
            let freq: Vec<i64> = res.iter().map(|j| symmetric(*j, 8)).collect();
            let want = if frequency_support(&freq) == a { *c } else { Complex64::zero() };
            worst_spec = worst_spec.max((lib(s.coeff(&freq))? - want).norm());
        }
    }
    ensure(worst_spec <= 1e-10, || format!("spectral support defect {worst_spec:e}"))?;
    Ok(format!(
        "sum {worst_sum:.1e}, orthogonality {worst_orth:.1e}, oracle {worst_oracle:.1e}, Walsh exact N ≤ 6, spectral {worst_spec:.1e}"
    ))
}

fn families(n: usize) -> Vec<(String, DifferenceFamily)> {
    let mut out = vec![
        ("linear".to_string(), linear_family(n)),
        ("reversed".to_string(), reversed_family(n)),
        ("double".to_string(), double_family(n)),
    ];
    for m in 1..=3.min(n) {
        out.push((format!("mlast-{m}"), mlast_family(n, m).unwrap()));
    }
    out
}

fn criterion_3() -> Outcome {
    let mut validated = 0;
    for n in 1..=6 {
        for (name, fam) in families(n) {
            ensure(lib(validate_family(&fam))?, || format!("{name} family invalid at N={n}"))?;
            validated += 1;
        }
    }
    let mut checked = 0;
    for n in 1..=5 {
        let space = rational_space(2, n);
        let f = lib(random_rational(space.clone(), 4, &mut substream(SEED, 300 + n as u64)))?;
        let oracle: Vec<TensorFunction<Rational>> = space.all_coords().subsets().map(|a| component(&f, a)).collect();
        for (name, fam) in families(n) {
            let diffs = lib(family_differences(&f, &fam))?;
            ensure(lib(diffs.reassemble())? == f, || format!("Σ Δ_i ≠ id for {name}, N={n}"))?;
            for (item, delta) in fam.items.iter().zip(&diffs.parts) {
                let mut sum = lib(TensorFunction::zeros(space.clone()))?;
                for b in item.t.difference(item.boundary).subsets() {
                    sum.add_assign(&oracle[b.union(item.boundary).mask() as usize]).unwrap();
                }
                ensure(&sum == delta, || format!("expansion fails for {name}, N={n}, item {item:?}"))?;
                checked += 1;
            }
        }
        for m in 1..=3.min(n) {
            let fam = lib(mlast_family(n, m))?;
            let projections: Vec<TensorFunction<Rational>> = (0..=m).map(|mp| project_multiplicity(&f, mp).unwrap()).collect();
            for item in &fam.items {
                let a = item.boundary;
                let ops = item.ops(n);
                let delta_f = lib(f.apply_ops(&ops))?;
                for (mp, pf) in projections.iter().enumerate().take(m) {
                    let lhs = lib(pf.apply_ops(&ops))?;
                    let want = if a.len() == mp { delta_f.clone() } else { lib(TensorFunction::zeros(space.clone()))? };
                    ensure(lhs == want, || format!("Δ_A P_{mp} relation fails, m={m}, A={a:?}, N={n}"))?;
                    checked += 1;
                }
                if a.len() == m {
                    let lhs = lib(projections[m].apply_ops(&ops))?;
                    let head = CoordSubset::interval(1, a.first().unwrap() - 1);
                    let rhs = lib(delta_f.apply_on(head, CoordOp::Expect))?;
                    ensure(lhs == rhs, || format!("Δ_A P_m ≠ E^[1,minA−1] Δ_A, m={m}, A={a:?}, N={n}"))?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{validated} families valid; {checked} exact operator relations"))
}

fn run(kind: ExperimentKind, seed: u64) -> Result<ExperimentReport, String> {
    lib(run_experiment(&ExperimentConfig::new(kind).with_seed(seed)))
}

fn require_checks(report: &ExperimentReport) -> Result<(), String> {
    match report.checks.iter().find(|c| !c.passed) {
        Some(c) => Err(format!("{}: observed {} against {}", c.name, c.observed, c.bound)),
        None => Ok(()),
    }
}

fn observed(report: &ExperimentReport, name: &str) -> Value {
    report.get_check(name).map(|c| c.observed.clone()).unwrap_or(Value::Null)
}

fn criterion_4() -> Outcome {
    let r = run(ExperimentKind::ZinnSweep, SEED)?;
    require_checks(&r)?;
    let adapted = r.cases().iter().filter(|c| c["kind"] == "adapted").count();
    let independent = r.cases().iter().filter(|c| c["kind"] == "independent").count();
    ensure(adapted == 100 && independent == 100, || format!("{adapted} adapted, {independent} independent tuples"))?;
    Ok(format!(
        "0 hard-bound failures over {adapted} tuples; sandwich exact on {independent}; max zinn_right/zinn_left = {}",
        observed(&r, "reverse_envelope")
    ))
}

fn criterion_5() -> Outcome {
    let oracle = [(1.0f64, 1.0f64), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)].iter().map(|(a, b)| (a + b).abs()).sum::<f64>() / 4.0;
    let lib_value = lib(khintchine_ratio(&[1.0, 1.0]))? * SQRT_2;
    ensure(oracle == 1.0 && (lib_value - 1.0).abs() <= 1e-12, || format!("E|r1+r2| = {lib_value}"))?;

    let r = run(ExperimentKind::KhintchineSweep, SEED)?;
    require_checks(&r)?;
    let min = r.summary["ratio"].min;
    ensure((min - FRAC_1_SQRT_2).abs() <= 1e-9, || format!("Khintchine min {min}"))?;

    let canonical: Vec<usize> = (2..=16).step_by(2).collect();
    let rows = lib(growth_l1(&canonical, &[0.0, 2.0]))?;
    ensure((rows[0].ratio - 1.0).abs() <= 1e-12, || format!("ratio(2) = {}", rows[0].ratio))?;
    ensure((rows[1].ratio - 1.5).abs() <= 1e-12, || format!("ratio(4) = {}", rows[1].ratio))?;
    ensure(rows.windows(2).all(|w| w[1].ratio > w[0].ratio), || "canonical growth table not strictly increasing".into())?;
    let report = run(ExperimentKind::GrowthL1, SEED)?;
    require_checks(&report)?;
    let odd = lib(growth_l1(&[3, 15], &[0.0, 2.0]))?;
    Ok(format!(
        "E|r1+r2| = 1; Khintchine min {min:.12}; growth {:?}; ratio(3) = {}, ratio(15) = {} (equal to ratio(4), ratio(16))",
        rows.iter().map(|r| r.ratio).collect::<Vec<_>>(),
        odd[0].ratio,
        odd[1].ratio
    ))
}

fn criterion_6() -> Outcome {
    let h = run(ExperimentKind::H1Equivalence, SEED)?;
    require_checks(&h)?;
    let p = run(ExperimentKind::PmOnH1tm, SEED)?;
    require_checks(&p)?;
    let worst_bounded = p
        .checks
        .iter()
        .filter(|c| c.name.starts_with("bounded"))
        .filter_map(|c| c.observed.as_f64())
        .fold(0.0, f64::max);
    let env = |name: &str| {
        let s = &h.summary[name];
        format!("[{:.4}, {:.4}]", s.min, s.max)
    };
    Ok(format!(
        "H¹_lin/L¹ {}; H¹[T₂]/L¹ {}; max ‖P_m' f‖/‖f‖ {worst_bounded:.4}; counterexample (n=2, n=6): m=1 {}, m=2 {}",
        env("h1_linear_over_l1"),
        env("h1_t2_over_l1"),
        observed(&p, "unbounded_m1"),
        observed(&p, "unbounded_m2")
    ))
}

fn criterion_7() -> Outcome {
    let r = run(ExperimentKind::BohrRoundtrip, SEED)?;
    require_checks(&r)?;
    let p = &r.config.parameters;
    Ok(format!(
        "round trip exact for n ≤ {}; commutation exact for support ≤ {}, m ≤ {}",
        p.max_index.unwrap(),
        p.projection_support.unwrap(),
        p.m.unwrap()
    ))
}

fn criterion_8() -> Outcome {
    for kind in ExperimentKind::ALL {
        let a = run(kind, 11)?.to_json_string().map_err(|e| e.to_string())?;
        let b = run(kind, 11)?.to_json_string().map_err(|e| e.to_string())?;
        ensure(a == b, || format!("{kind} reports differ between runs"))?;
    }
    Ok(format!("{} experiments byte-identical across reruns", ExperimentKind::ALL.len()))
}

fn main() -> ExitCode {
    rayon::ThreadPoolBuilder::new().num_threads(1).build_global().expect("single-threaded pool");
    let criteria: [(&str, &str, u64, fn() -> Outcome); 8] = [
        ("1", "exact operator identities", 60, criterion_1),
        ("2", "decomposition suite", 120, criterion_2),
        ("3", "difference-family suite", 120, criterion_3),
        ("4", "decoupling bounds", 180, criterion_4),
        ("5", "numeric anchors", 60, criterion_5),
        ("6", "norm-equivalence envelopes", 300, criterion_6),
        ("7", "Bohr lift", 30, criterion_7),
        ("8", "reproducibility", 300, criterion_8),
    ];
    let mut failures = 0;
    for (id, name, budget, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(d) if elapsed > Duration::from_secs(budget) => Err(format!("{d} (over the {budget}s budget)")),
            other => other,
        };
        let secs = elapsed.as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS criterion {id} ({name}, {secs:.2}s): {d}"),
            Err(e) => {
                failures += 1;
                println!("FAIL criterion {id} ({name}, {secs:.2}s): {e}");
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
