use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hoeffding::decoupling::{decouple, lambda_recursion, EvalMode};
use hoeffding::harness::{run_experiment, ExperimentConfig, ExperimentKind, FamilySpec};
use hoeffding::hoeffding::{
    hoeffding_component, hoeffding_decompose, project_multiplicity_on, tensor_power_projection_check,
    verify_multinomial_identity, verify_q_identity,
};
use hoeffding::json::{
    components_to_json, dirichlet_from_json, dirichlet_to_json, function_to_json, tuple_from_json, AnyFunction,
    NormReport,
};
use hoeffding::martingale::{bmo_norm, h1_norm, hp_norm, validate_family, DifferenceFamily};
use hoeffding::torus::{bohr_drop, bohr_lift, dirichlet_prime_projection, lift_to_torus, project_mlast, BohrLift};
use hoeffding::{CoordSubset, Error, Exponent, ProductSpace, Result, ScalarMode, TensorFunction};

#[derive(Parser, Debug)]
#[command(name = "hoeffding", version, about = "Hoeffding decompositions, Hardy norms and decoupling on finite product spaces")]
struct Cli {
    /// Master seed for every stochastic path.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Arithmetic for inputs and identity checks.
    #[arg(long, global = true, value_enum)]
    scalar: Option<ScalarArg>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ScalarArg {
    Float,
    Rational,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Linear,
    Reversed,
    Double,
    Mlast,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum NormKind {
    Lp,
    H1,
    Hp,
    Bmo,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Every Hoeffding component P_A f.
    Decompose { input: PathBuf },
    /// P_m f, P_A f, or the m-last spectral projection of a torus function.
    Project {
        input: PathBuf,
        /// Multiplicity m.
        #[arg(long)]
        m: Option<usize>,
        /// Restrict the multiplicity projection to these coordinates.
        #[arg(long, value_delimiter = ',')]
        coords: Option<Vec<usize>>,
        /// A single component P_A with A given as a comma list.
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["m", "coords", "mlast"])]
        subset: Option<Vec<usize>>,
        /// Keep torus frequencies whose last m nonzero entries are positive.
        #[arg(long, conflicts_with_all = ["m", "coords"])]
        mlast: Option<usize>,
    },
    /// Lp, H¹, H^p or BMO norm.
    Norm {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "lp")]
        kind: NormKind,
        /// Exponent (`inf` for sup).
        #[arg(long, default_value = "1")]
        p: String,
        #[arg(long, value_enum, default_value = "linear")]
        family: FamilyArg,
        /// m for the m-last family.
        #[arg(long, default_value_t = 1)]
        family_m: usize,
        /// Family JSON overriding --family.
        #[arg(long)]
        family_file: Option<PathBuf>,
    },
    /// Exact identity checks.
    Verify {
        #[command(subcommand)]
        what: Verify,
    },
    /// Undecoupled and decoupled functionals of an adapted tuple.
    Decouple {
        input: PathBuf,
        /// Monte Carlo trials; exact enumeration when absent.
        #[arg(long)]
        trials: Option<usize>,
        /// Also run the λ-recursion chain.
        #[arg(long)]
        lambda: bool,
    },
    /// Run an experiment from a config file or by name with defaults.
    Experiment {
        config: Option<PathBuf>,
        #[arg(long, conflicts_with = "config")]
        name: Option<String>,
        /// Also write one CSV row per case.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Record wall-clock time in the report.
        #[arg(long)]
        timing: bool,
    },
    /// Dirichlet polynomials and their torus lift.
    Bohr {
        #[command(subcommand)]
        what: Bohr,
    },
}

#[derive(Subcommand, Debug)]
enum Verify {
    /// Q_m = m·C(N−m, n−1)/C(N, n) · P_m on Z_2^N.
    QIdentity {
        #[arg(long = "N")]
        big_n: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
    },
    /// Ordered-partition count identity on Z_2^{nm}.
    Multinomial {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
    },
    /// P_m(f^{⊗m}) = (P_1 f)^{⊗m} for a mean-zero function.
    TensorPower {
        input: PathBuf,
        #[arg(long)]
        m: usize,
    },
    /// Difference-family covering condition.
    Family { input: PathBuf },
}

#[derive(Subcommand, Debug)]
enum Bohr {
    /// Prime-exponent coefficients of a Dirichlet polynomial.
    Lift { input: PathBuf },
    /// Keep n with at most m distinct prime factors.
    Project {
        input: PathBuf,
        #[arg(long)]
        m: usize,
    },
    /// Evaluate the lift on Z_K^P.
    Torus {
        input: PathBuf,
        #[arg(long = "K")]
        k: usize,
    },
    /// Check drop(lift(d)) = d.
    Roundtrip { input: PathBuf },
}

struct Outcome {
    value: Value,
    passed: bool,
}

impl Outcome {
    fn ok(value: Value) -> Self {
        Self { value, passed: true }
    }
}

fn read_json(path: &Path) -> Result<Value> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

fn as_real(f: &TensorFunction<hoeffding::Rational>) -> Result<TensorFunction<f64>> {
    let space = ProductSpace::new(f.space().factors().to_vec(), ScalarMode::Real)?.shared();
    TensorFunction::new(space, f.values().iter().map(|q| hoeffding::Scalar::to_complex(q).re).collect())
}

fn load_function(path: &Path, scalar: Option<ScalarArg>) -> Result<AnyFunction> {
    let f = AnyFunction::from_json(&read_json(path)?)?;
    match (scalar, f) {
        (Some(ScalarArg::Float), AnyFunction::Rational(q)) => Ok(AnyFunction::Real(as_real(&q)?)),
        (Some(ScalarArg::Rational), f @ (AnyFunction::Real(_) | AnyFunction::Complex(_))) => Err(Error::ScalarMode(format!(
            "input is {} but --scalar rational was requested",
            f.space().mode().as_str()
        ))),
        (_, f) => Ok(f),
    }
}

macro_rules! on_any {
    ($any:expr, $f:ident => $body:expr) => {
        match $any {
            AnyFunction::Real($f) => $body,
            AnyFunction::Complex($f) => $body,
            AnyFunction::Rational($f) => $body,
        }
    };
}

fn subset(coords: &[usize], n: usize) -> Result<CoordSubset> {
    let s = CoordSubset::new(coords)?;
    if s.last().is_some_and(|l| l > n) {
        return Err(Error::CoordOutOfRange { coord: s.last().unwrap(), n });
    }
    Ok(s)
}

fn family(arg: FamilyArg, m: usize, file: Option<&Path>, n: usize) -> Result<(DifferenceFamily, String)> {
    if let Some(path) = file {
        let fam: DifferenceFamily = serde_json::from_value(read_json(path)?)?;
        if fam.n != n {
            return Err(Error::InvalidFamily(format!("family on {} coordinates, function on {n}", fam.n)));
        }
        return Ok((fam, path.display().to_string()));
    }
    let (spec, name) = match arg {
        FamilyArg::Linear => (FamilySpec::Linear, "linear".to_string()),
        FamilyArg::Reversed => (FamilySpec::Reversed, "reversed".to_string()),
        FamilyArg::Double => (FamilySpec::Double, "double".to_string()),
        FamilyArg::Mlast => (FamilySpec::MLast(m), format!("mlast-{m}")),
    };
    Ok((spec.build(n)?, name))
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Decompose { input } => {
            let f = load_function(input, cli.scalar)?;
            on_any!(f, f => Ok(Outcome::ok(components_to_json(&hoeffding_decompose(&f)?))))
        }
        Command::Project { input, m, coords, subset: a, mlast } => {
            let f = load_function(input, cli.scalar)?;
            let n = f.space().n_coords();
            if let Some(ml) = mlast {
                return Ok(Outcome::ok(function_to_json(&project_mlast(&f.to_complex(), *ml)?)));
            }
            if let Some(a) = a {
                let a = subset(a, n)?;
                return on_any!(f, f => Ok(Outcome::ok(function_to_json(&hoeffding_component(&f, a)?))));
            }
            let m = m.ok_or_else(|| Error::InvalidParameter("one of --m, --subset or --mlast is required".into()))?;
            let on = match coords {
                Some(c) => subset(c, n)?,
                None => CoordSubset::full(n),
            };
            on_any!(f, f => Ok(Outcome::ok(function_to_json(&project_multiplicity_on(&f, on, m)?))))
        }
        Command::Norm { input, kind, p, family: fam, family_m, family_file } => {
            let f = load_function(input, cli.scalar)?;
            let n = f.space().n_coords();
            let label_p = p.clone();
            let p: Exponent = p.parse()?;
            let report = match kind {
                NormKind::Lp => NormReport { kind: format!("L{label_p}"), family: None, value: on_any!(&f, f => f.lp_norm(p)?) },
                _ => {
                    let (fam, name) = family(*fam, *family_m, family_file.as_deref(), n)?;
                    let value = match kind {
                        NormKind::H1 => on_any!(&f, f => h1_norm(f, &fam)?),
                        NormKind::Hp => on_any!(&f, f => hp_norm(f, &fam, p)?),
                        _ => on_any!(&f, f => bmo_norm(f, &fam)?),
                    };
                    let label = match kind {
                        NormKind::H1 => "H1".to_string(),
                        NormKind::Hp => format!("H{label_p}"),
                        _ => "BMO".to_string(),
                    };
                    NormReport { kind: label, family: Some(name), value }
                }
            };
            Ok(Outcome::ok(serde_json::to_value(report)?))
        }
        Command::Verify { what } => verify(cli, what),
        Command::Decouple { input, trials, lambda } => {
            let tuple = tuple_from_json::<f64>(&read_json(input)?)?;
            let mode = match trials {
                None => EvalMode::Exact,
                Some(trials) => EvalMode::MonteCarlo {
                    trials: *trials,
                    seed: cli.seed.ok_or_else(|| Error::InvalidParameter("Monte Carlo needs --seed".into()))?,
                },
            };
            let mut value = serde_json::to_value(decouple(&tuple, mode)?)?;
            let mut passed = true;
            if *lambda {
                let (_, rep) = lambda_recursion(&tuple)?;
                passed = rep.lower_ok && rep.upper_ok && rep.sandwich_ok && rep.measurable_ok && rep.monotone_ok;
                value["lambda"] = serde_json::to_value(rep)?;
            }
            Ok(Outcome { value, passed })
        }
        Command::Experiment { config, name, csv, timing } => {
            let mut cfg = match (config, name) {
                (Some(path), _) => ExperimentConfig::from_json_str(&std::fs::read_to_string(path)?)?,
                (None, Some(name)) => ExperimentConfig::new(name.parse::<ExperimentKind>()?),
                (None, None) => return Err(Error::InvalidParameter("give a config file or --name".into())),
            };
            let p = &mut cfg.parameters;
            if cli.seed.is_some() {
                p.seed = cli.seed;
            }
            match cli.scalar {
                Some(ScalarArg::Float) => p.scalar_mode = Some(ScalarMode::Real),
                Some(ScalarArg::Rational) => p.scalar_mode = Some(ScalarMode::Rational),
                None => {}
            }
            if csv.is_some() {
                p.csv_path = csv.clone();
            }
            if *timing {
                p.record_timing = Some(true);
            }
            let out_in_config = p.output_path.is_some() && cli.out.is_none();
            let report = run_experiment(&cfg)?;
            let value = serde_json::to_value(&report)?;
            if out_in_config {
                return Ok(Outcome { value: Value::Null, passed: report.passed });
            }
            Ok(Outcome { value, passed: report.passed })
        }
        Command::Bohr { what } => bohr(what),
    }
}

fn verify(cli: &Cli, what: &Verify) -> Result<Outcome> {
    if cli.scalar == Some(ScalarArg::Float) && !matches!(what, Verify::Family { .. } | Verify::TensorPower { .. }) {
        return Err(Error::ScalarMode("operator identities are verified in rational mode".into()));
    }
    match what {
        Verify::QIdentity { big_n, n, m } => {
            let space = ProductSpace::uniform(2, *big_n, ScalarMode::Rational)?.shared();
            let rep = verify_q_identity(*big_n, *n, *m, &space)?;
            Ok(Outcome { passed: rep.operator_match, value: serde_json::to_value(rep)? })
        }
        Verify::Multinomial { n, m } => {
            let space = ProductSpace::uniform(2, n * m, ScalarMode::Rational)?.shared();
            let rep = verify_multinomial_identity(*n, *m, &space)?;
            Ok(Outcome { passed: rep.matched && rep.operator_match, value: serde_json::to_value(rep)? })
        }
        Verify::TensorPower { input, m } => {
            let f = load_function(input, cli.scalar)?;
            let exps = [Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Sup];
            let rep = on_any!(&f, f => tensor_power_projection_check(f, *m, &exps)?);
            Ok(Outcome { passed: rep.identity_holds, value: serde_json::to_value(rep)? })
        }
        Verify::Family { input } => {
            let fam: DifferenceFamily = serde_json::from_value(read_json(input)?)?;
            let valid = validate_family(&fam)?;
            Ok(Outcome { passed: valid, value: json!({"N": fam.n, "items": fam.len(), "valid": valid}) })
        }
    }
}

fn lift_json(lift: &BohrLift) -> Value {
    let len = lift.n_primes();
    let entries: Vec<Value> = lift
        .coeffs
        .iter()
        .map(|(freq, c)| json!({"freq": BohrLift::dense(freq, len), "coeff": [c.re, c.im]}))
        .collect();
    Value::Array(entries)
}

fn bohr(what: &Bohr) -> Result<Outcome> {
    match what {
        Bohr::Lift { input } => Ok(Outcome::ok(lift_json(&bohr_lift(&dirichlet_from_json(&read_json(input)?)?)))),
        Bohr::Project { input, m } => {
            let d = dirichlet_from_json(&read_json(input)?)?;
            Ok(Outcome::ok(dirichlet_to_json(&dirichlet_prime_projection(&d, *m))))
        }
        Bohr::Torus { input, k } => {
            let d = dirichlet_from_json(&read_json(input)?)?;
            Ok(Outcome::ok(function_to_json(&lift_to_torus(&d, *k)?)))
        }
        Bohr::Roundtrip { input } => {
            let d = dirichlet_from_json(&read_json(input)?)?;
            let back = bohr_drop(&bohr_lift(&d))?;
            let exact = back == d;
            Ok(Outcome { passed: exact, value: json!({"terms": d.len(), "roundtrip_exact": exact}) })
        }
    }
}

fn emit(value: &Value, out: Option<&Path>) -> Result<()> {
    if value.is_null() {
        return Ok(());
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = run(&cli).and_then(|o| {
        emit(&o.value, cli.out.as_deref())?;
        Ok(o.passed)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
