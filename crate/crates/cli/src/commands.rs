use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use prefest::analysis::{check_assumptions, gap_matrices, hellinger_sq, hellinger_sq_pair, restricted_bc};
use prefest::estimators::{estimate, EstimationInput};
use prefest::harness::{fit_rate, run_experiment_with, ExperimentConfig, HarnessError, ResultTable, RunOptions};
use prefest::models::SigmaSpec;
use prefest::{BoxBounds, Channel, Dataset, EstimatorKind, FamilySpec, Matrix, ModelFamily, RandomSource, Vector};

use crate::{Command, FamilyArgs, FamilyName};

pub enum CliError {
    /// Bad flags, config or input: exit 2.
    Input(String),
    /// Nothing useful could be produced: exit 3.
    Failure(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Failure(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Failure(m) => m,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

fn parse_vector(s: &str, what: &str) -> CliResult<Vector> {
    let v: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match v {
        Ok(v) if !v.is_empty() => Ok(Vector::from_vec(v)),
        _ => Err(CliError::Input(format!("{what}: expected comma-separated numbers, got {s:?}"))),
    }
}

fn build_family(args: &FamilyArgs) -> CliResult<ModelFamily> {
    let only = |ok: bool, flag: &str| {
        if ok {
            Ok(())
        } else {
            Err(CliError::Input(format!("--{flag} does not apply to family {:?}", args.family)))
        }
    };
    let spec = match args.family {
        FamilyName::Gaussian => {
            only(args.b.is_none(), "b")?;
            let sigma = match &args.sigma {
                Some(s) => SigmaSpec::parse_flag(s).map_err(input)?,
                None => SigmaSpec::default(),
            };
            FamilySpec::Gaussian {
                d: args.d.unwrap_or(1),
                sigma,
            }
        }
        FamilyName::Laplace => {
            only(args.sigma.is_none(), "sigma")?;
            only(args.d.is_none_or(|d| d == 1), "d")?;
            FamilySpec::Laplace { b: args.b.unwrap_or(1.0) }
        }
        FamilyName::Rayleigh => {
            only(args.sigma.is_none(), "sigma")?;
            only(args.b.is_none(), "b")?;
            only(args.d.is_none_or(|d| d == 1), "d")?;
            FamilySpec::Rayleigh
        }
    };
    spec.build().map_err(input)
}

fn default_theta(family: &ModelFamily, value: f64) -> Vector {
    match family {
        ModelFamily::Rayleigh => Vector::from_element(1, -0.5),
        _ => Vector::from_element(family.dim(), value),
    }
}

fn theta_or_default(family: &ModelFamily, s: &Option<String>, default: f64) -> CliResult<Vector> {
    let theta = match s {
        Some(s) => parse_vector(s, "theta")?,
        None => default_theta(family, default),
    };
    family.check_param(&theta).map_err(input)?;
    Ok(theta)
}

fn emit(out: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", p.display()))),
    }
}

fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v}")
    }
}

fn join(v: &Vector) -> String {
    v.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(";")
}

pub fn run(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Simulate {
            config,
            out,
            jobs,
            timing,
        } => simulate(&config, out, jobs, timing),
        Command::Rates { input, estimator, tail } => rates(&input, &estimator, tail),
        Command::Matrices {
            family,
            theta,
            samples,
            seed,
            normalized,
            out,
        } => matrices(&family, &theta, samples, seed, normalized, &out),
        Command::Divergences {
            family,
            theta1,
            theta2,
            out,
        } => divergences(&family, &theta1, &theta2, &out),
        Command::CheckAssumptions {
            family,
            theta,
            random_directions,
            samples,
            seed,
            out,
        } => assumptions(&family, &theta, random_directions, samples, seed, &out),
        Command::Estimate {
            family,
            data,
            estimator,
            channel,
            theta_star,
            bounds,
            seed,
            out,
        } => estimate_cmd(&family, &data, &estimator, &channel, &theta_star, &bounds, seed, &out),
    }
}

fn simulate(config: &Path, out: Option<PathBuf>, jobs: usize, timing: bool) -> CliResult<()> {
    let text = if config == Path::new("-") {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::Input(format!("cannot read config from stdin: {e}")))?;
        s
    } else {
        std::fs::read_to_string(config)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", config.display())))?
    };
    let cfg = ExperimentConfig::from_json_str(&text).map_err(input)?;
    let out = out
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| CliError::Input("no output path: pass --out or set \"output\" in the config".into()))?;
    if jobs == 0 {
        return Err(CliError::Input("--jobs must be at least 1".into()));
    }
    let table = run_experiment_with(
        &cfg,
        &RunOptions {
            jobs: Some(jobs),
            timing,
        },
    )
    .map_err(|e| CliError::Failure(e.to_string()))?;
    let written = table
        .write_files(&out, cfg.reports_l2())
        .map_err(|e| CliError::Failure(e.to_string()))?;
    for f in table.failures.iter().take(10) {
        eprintln!("warning: {f}");
    }
    let a = table.audits;
    eprintln!(
        "{} rows, {} failed; dominance violations {}/{}; feasibility violations {}/{}; wrote {}",
        table.rows.len(),
        table.failure_count(),
        a.dominance_violations,
        a.dominance_checks,
        a.feasibility_violations,
        a.feasibility_checks,
        written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ")
    );
    if table.failure_count() == table.rows.len() {
        return Err(CliError::Failure("every estimator call failed".into()));
    }
    Ok(())
}

fn rates(path: &Path, estimator: &str, tail: f64) -> CliResult<()> {
    let file = File::open(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let table = ResultTable::read_csv(BufReader::new(file)).map_err(input)?;
    let names = if estimator == "all" {
        table.estimators()
    } else {
        vec![estimator.to_string()]
    };
    let mut text = String::from("estimator,slope\n");
    for name in names {
        let slope = fit_rate(&table, &name, tail).map_err(|e| match e {
            HarnessError::InsufficientData { .. } => CliError::Input(format!("{name}: {e}")),
            other => input(other),
        })?;
        writeln!(text, "{name},{slope:.6}").expect("string write");
    }
    print!("{text}");
    Ok(())
}

fn matrices(
    args: &FamilyArgs,
    theta: &Option<String>,
    samples: usize,
    seed: u64,
    normalized: bool,
    out: &Option<PathBuf>,
) -> CliResult<()> {
    let family = build_family(args)?;
    let theta = theta_or_default(&family, theta, 0.0)?;
    let g = gap_matrices(&family, &theta, samples, seed).map_err(input)?;
    let (sp, lle, r, se): (Matrix, Matrix, Matrix, f64) = if normalized {
        g.normalized(&family).map_err(input)?
    } else {
        (g.delta_sp, g.delta_lle, g.r_lle, g.standard_error)
    };
    let mut text = String::from("matrix,i,j,value,se\n");
    for (name, m) in [("delta_sp", &sp), ("delta_lle", &lle), ("r_lle", &r)] {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                writeln!(text, "{name},{i},{j},{},{}", fmt_num(m[(i, j)]), fmt_num(se)).expect("string write");
            }
        }
    }
    emit(out, &text)
}

fn divergences(args: &FamilyArgs, t1: &str, t2: &str, out: &Option<PathBuf>) -> CliResult<()> {
    let family = build_family(args)?;
    let t1 = parse_vector(t1, "theta1")?;
    let t2 = parse_vector(t2, "theta2")?;
    let h = hellinger_sq(&family, &t1, &t2).map_err(input)?;
    let hp = hellinger_sq_pair(&family, &t1, &t2).map_err(input)?;
    let r = restricted_bc(&family, &t1, &t2).map_err(input)?;
    let dist = family.family_norm(&(&t1 - &t2)).map_err(input)?;
    let mut text = String::from("quantity,value\n");
    for (k, v) in [
        ("distance", dist),
        ("hellinger_sq", h),
        ("hellinger_sq_pair", hp),
        ("restricted_bc", r),
    ] {
        writeln!(text, "{k},{}", fmt_num(v)).expect("string write");
    }
    emit(out, &text)
}

fn assumptions(
    args: &FamilyArgs,
    theta: &Option<String>,
    random_directions: usize,
    samples: usize,
    seed: u64,
    out: &Option<PathBuf>,
) -> CliResult<()> {
    let family = build_family(args)?;
    let theta = theta_or_default(&family, theta, 1.0)?;
    let d = family.dim();
    let mut dirs: Vec<Vector> = (0..d)
        .map(|i| {
            let mut e = Vector::zeros(d);
            e[i] = if matches!(family, ModelFamily::Rayleigh) { -1.0 } else { 1.0 };
            e
        })
        .collect();
    let mut rng = RandomSource::derive(seed, u64::MAX);
    dirs.extend((0..random_directions).map(|_| rng.unit_sphere(d)));
    let rep = check_assumptions(&family, &theta, &dirs, samples, seed).map_err(input)?;
    let opt = |v: Option<f64>| v.map_or("NaN".to_string(), fmt_num);
    let mut text = String::from("direction,p_informative,p_se,p_expected,density_near_zero,slope_at_zero\n");
    for c in &rep.checks {
        writeln!(
            text,
            "{},{},{},{},{},{}",
            join(&c.direction),
            fmt_num(c.p_informative),
            fmt_num(c.p_standard_error),
            opt(c.p_expected),
            fmt_num(c.density_near_zero),
            opt(c.slope_at_zero)
        )
        .expect("string write");
    }
    writeln!(
        text,
        "# equivalence_violations: {}/{}",
        rep.equivalence_violations, rep.equivalence_probes
    )
    .expect("string write");
    emit(out, &text)
}

#[allow(clippy::too_many_arguments)]
fn estimate_cmd(
    args: &FamilyArgs,
    data: &Path,
    estimators: &[String],
    channel: &str,
    theta_star: &Option<String>,
    bounds: &Option<String>,
    seed: u64,
    out: &Option<PathBuf>,
) -> CliResult<()> {
    let family = build_family(args)?;
    let d = family.dim();
    let channel: Channel = channel.parse().map_err(CliError::Input)?;
    let kinds: Vec<EstimatorKind> = estimators
        .iter()
        .map(|s| s.parse().map_err(CliError::Input))
        .collect::<CliResult<_>>()?;
    let file = File::open(data).map_err(|e| CliError::Input(format!("cannot read {}: {e}", data.display())))?;
    let dataset = Dataset::read_csv(BufReader::new(file), d, channel).map_err(CliError::Input)?;
    let bounds = match bounds {
        None => family.default_bounds(),
        Some(s) => {
            let v = parse_vector(s, "box")?;
            if v.len() != 2 {
                return Err(CliError::Input("--box takes lo,hi".into()));
            }
            BoxBounds::uniform(d, v[0], v[1]).map_err(input)?
        }
    };
    let truth = match theta_star {
        Some(s) => {
            let t = parse_vector(s, "theta-star")?;
            family.check_param(&t).map_err(input)?;
            Some(t)
        }
        None => None,
    };
    let mut inp = EstimationInput::new(&family, &dataset.triplets, &bounds);
    if let Some(t) = &truth {
        inp = inp.with_truth(t);
    }
    let mut header = String::from("estimator");
    for k in 1..=d {
        write!(header, ",theta{k}").expect("string write");
    }
    let mut text = header + ",error,iterations,feasible\n";
    let mut ok = 0;
    for (j, kind) in kinds.iter().enumerate() {
        let mut rng = RandomSource::derive(seed, j as u64);
        match estimate(*kind, &inp, &mut rng) {
            Ok(rec) => {
                ok += 1;
                let err = truth
                    .as_ref()
                    .and_then(|t| family.family_norm(&(&rec.theta - t)).ok())
                    .unwrap_or(f64::NAN);
                let mut line = kind.to_string();
                for v in rec.theta.iter() {
                    write!(line, ",{}", fmt_num(*v)).expect("string write");
                }
                let feasible = rec.feasible.map_or(String::new(), |f| f.to_string());
                writeln!(text, "{line},{},{},{feasible}", fmt_num(err), rec.iterations).expect("string write");
            }
            Err(e) => {
                eprintln!("warning: {kind}: {e}");
                let nan = vec!["NaN"; d].join(",");
                writeln!(text, "{kind},{nan},NaN,0,").expect("string write");
            }
        }
    }
    emit(out, &text)?;
    if ok == 0 {
        return Err(CliError::Failure("every estimator failed".into()));
    }
    Ok(())
}
