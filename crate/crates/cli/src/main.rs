//! `defstat`: conditional independence tests, confidence intervals and
//! Monte Carlo studies from the command line.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure.

mod output;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use defstat::ci::{confidence_interval, debiased_interval, wbeta_region, Interval};
use defstat::data::{load_dataset, load_matrix, load_regression, load_vector, Dataset};
use defstat::error::Error;
use defstat::family::GlmFamily;
use defstat::glm::t_glm;
use defstat::highdim::{t_db, t_def, t_glm_def, t_w_def, WeightSpec};
use defstat::lasso::LambdaRule;
use defstat::ols::{t_ols, t_ols_exact};
use defstat::result::{Method, Reference, TestResult};
use defstat::sim::{center_and_scale, parse_scenario, run_monte_carlo, DesignSource, Scenario, SimMethod, SimOptions};

use output::{finite, to_json, SCHEMA, SCHEMA_VERSION};

#[derive(Parser)]
#[command(
    name = "defstat",
    version,
    about = "Double-estimation-friendly conditional independence tests"
)]
struct Cli {
    /// Print the JSON schema of all outputs and exit.
    #[arg(long)]
    schema: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Test X ⫫ Y | Z on a CSV dataset.
    Test(TestArgs),
    /// Confidence interval for the coefficient of the exposure.
    Ci(CiArgs),
    /// Confidence interval for wᵀβ in the linear model of the response on the design.
    WbetaCi(WbetaArgs),
    /// Monte Carlo study of a built-in scenario.
    Simulate(SimArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Universal,
    Quantile,
}

#[derive(Args, Clone)]
struct LambdaArgs {
    /// Penalty level rule for the square-root Lasso fits.
    #[arg(long, value_enum, default_value = "universal")]
    lambda_rule: RuleArg,
    /// Multiplier A in A·√(2 ln p / n).
    #[arg(long, default_value_t = 1.05)]
    lambda_a: f64,
    /// Fixed penalty level; overrides the rule.
    #[arg(long)]
    lambda: Option<f64>,
}

impl LambdaArgs {
    fn rule(&self) -> LambdaRule {
        match (self.lambda, self.lambda_rule) {
            (Some(l), _) => LambdaRule::Fixed(l),
            (None, RuleArg::Universal) => LambdaRule::Universal { a: self.lambda_a },
            (None, RuleArg::Quantile) => LambdaRule::Quantile,
        }
    }

    fn tag(&self) -> String {
        match self.rule() {
            LambdaRule::Universal { a } => format!("universal(a={a})"),
            LambdaRule::Quantile => "quantile".into(),
            LambdaRule::Fixed(l) => format!("fixed({l})"),
        }
    }
}

#[derive(Args)]
struct DataArgs {
    /// CSV with a header row; columns other than response and exposure are controls.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "y")]
    response: String,
    #[arg(long, default_value = "x")]
    exposure: String,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "t-def")]
    method: Method,
    #[arg(long, default_value = "gaussian")]
    family_y: GlmFamily,
    #[arg(long, default_value = "gaussian")]
    family_x: GlmFamily,
    /// Single-column CSV of response weights for t-w-def.
    #[arg(long)]
    weights_y: Option<PathBuf>,
    /// Single-column CSV of exposure weights for t-w-def.
    #[arg(long)]
    weights_x: Option<PathBuf>,
    #[command(flatten)]
    lambda: LambdaArgs,
}

#[derive(Args)]
struct CiArgs {
    #[command(flatten)]
    data: DataArgs,
    /// t-def inverts the test; t-db gives the debiased Lasso Wald interval.
    #[arg(long, default_value = "t-def")]
    method: Method,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    lambda: LambdaArgs,
}

#[derive(Args)]
struct WbetaArgs {
    /// CSV with the response column; all other columns form the design.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "y")]
    response: String,
    /// Single-column CSV with one entry per design column.
    #[arg(long)]
    w_file: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    lambda: LambdaArgs,
}

#[derive(Args)]
struct SimArgs {
    /// example1-null, example1-alt, poisson-misspec, partial-linear-{a,b,c}[-null],
    /// logistic-hd-null, logistic-hd-alt, toeplitz-confint, sparse-linear
    #[arg(long)]
    scenario: String,
    /// A test method, or ci-def / ci-db for interval coverage.
    #[arg(long)]
    method: SimMethod,
    #[arg(long, alias = "replicates", default_value_t = 500)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    /// Misspecification level for poisson-misspec.
    #[arg(long, default_value_t = 4.0)]
    sigma: f64,
    /// Support size for sparse-linear.
    #[arg(long, default_value_t = 3)]
    sparsity: usize,
    /// Toeplitz correlation of the random designs.
    #[arg(long, default_value_t = 0.9)]
    rho: f64,
    /// CSV design to use instead of the built-in one; centred and scaled on load.
    #[arg(long)]
    design: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long)]
    family_y: Option<GlmFamily>,
    #[arg(long)]
    family_x: Option<GlmFamily>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    lambda: LambdaArgs,
}

#[derive(Serialize)]
struct TestOut {
    schema_version: &'static str,
    kind: &'static str,
    method: Method,
    statistic: Option<f64>,
    p_value: Option<f64>,
    reference: &'static str,
    n: usize,
    p: usize,
    diagnostics: BTreeMap<String, Option<f64>>,
}

impl TestOut {
    fn new(r: TestResult, n: usize, p: usize) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: "test",
            method: r.method,
            statistic: finite(r.statistic),
            p_value: finite(r.p_value),
            reference: match r.reference {
                Reference::Normal => "normal",
                Reference::StudentT { .. } => "student-t",
            },
            n,
            p,
            diagnostics: r.diagnostics.into_iter().map(|(k, v)| (k, finite(v))).collect(),
        }
    }
}

#[derive(Serialize)]
struct IntervalOut {
    schema_version: &'static str,
    kind: &'static str,
    method: Method,
    lower: f64,
    upper: f64,
    alpha: f64,
    evaluations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    bracket_expansions: Option<usize>,
    disconnected_flag: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_star: Option<f64>,
    lambda: f64,
    n: usize,
    p: usize,
}

impl IntervalOut {
    fn from_interval(kind: &'static str, iv: &Interval, lambda: f64, n: usize, p: usize) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind,
            method: Method::TDef,
            lower: iv.lower,
            upper: iv.upper,
            alpha: iv.alpha,
            evaluations: iv.evaluations,
            bracket_expansions: Some(iv.bracket_expansions),
            disconnected_flag: iv.disconnected_flag,
            t_star: finite(iv.t_star),
            lambda,
            n,
            p,
        }
    }
}

#[derive(Serialize)]
struct SummaryOut {
    schema_version: &'static str,
    kind: &'static str,
    scenario: String,
    method: String,
    replicates: usize,
    completed: usize,
    failures: usize,
    rejection_rate_05: Option<f64>,
    coverage: Option<f64>,
    ks_vs_uniform: Option<f64>,
    seed: u64,
    n: usize,
    p: usize,
    lambda_rule: String,
}

#[derive(Serialize)]
struct ErrorOut {
    schema_version: &'static str,
    kind: &'static str,
    error: String,
    message: String,
    exit_code: u8,
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    let e = ErrorOut {
        schema_version: SCHEMA_VERSION,
        kind: "error",
        error: kind.to_owned(),
        message,
        exit_code: code,
    };
    eprintln!("{}", to_json(&e));
    ExitCode::from(code)
}

fn lambda_for(rule: LambdaRule, n: usize, p: usize) -> Result<f64, Error> {
    rule.lambda(n, p.max(2))
}

fn run_test(a: &TestArgs) -> Result<String, Error> {
    let ds = load_dataset(&a.data.data, &a.data.response, &a.data.exposure)?;
    let (n, p) = (ds.n(), ds.p());
    let rule = a.lambda.rule();
    let r = match a.method {
        Method::TOls => t_ols(&ds)?,
        Method::TOlsExact => t_ols_exact(&ds)?,
        Method::TGlm => t_glm(&ds, a.family_y)?,
        Method::TDef => {
            let l = lambda_for(rule, n, p)?;
            t_def(&ds, l, l)?.with("lambda", l)
        }
        Method::TDb => {
            let l = lambda_for(rule, n, p)?;
            t_db(&ds, l, l)?.with("lambda", l)
        }
        Method::TWDef => {
            let w = match (&a.weights_y, &a.weights_x) {
                (None, None) => WeightSpec::unit(n),
                (Some(wy), Some(wx)) => WeightSpec::new(load_vector(wy)?, load_vector(wx)?)?,
                _ => {
                    return Err(Error::Invalid(
                        "give both --weights-y and --weights-x, or neither".into(),
                    ))
                }
            };
            let l = lambda_for(rule, n, p)?;
            t_w_def(ds.y(), ds.x(), ds.z(), &w, l)?.with("lambda", l)
        }
        Method::TGlmDef => {
            let l = lambda_for(rule, n, p)?;
            t_glm_def(&ds, a.family_y, a.family_x, l)?.with("lambda", l)
        }
    };
    Ok(to_json(&TestOut::new(r, n, p)))
}

fn check_alpha(alpha: f64) -> Result<(), Error> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Invalid(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn run_ci(a: &CiArgs) -> Result<String, Error> {
    check_alpha(a.alpha)?;
    let ds: Dataset = load_dataset(&a.data.data, &a.data.response, &a.data.exposure)?;
    let (n, p) = (ds.n(), ds.p());
    let l = lambda_for(a.lambda.rule(), n, p)?;
    let out = match a.method {
        Method::TDef => IntervalOut::from_interval("ci", &confidence_interval(&ds, a.alpha, l, l)?, l, n, p),
        Method::TDb => {
            let (lower, upper) = debiased_interval(&ds, a.alpha, l, l)?;
            IntervalOut {
                schema_version: SCHEMA_VERSION,
                kind: "ci",
                method: Method::TDb,
                lower,
                upper,
                alpha: a.alpha,
                evaluations: 0,
                bracket_expansions: None,
                disconnected_flag: false,
                t_star: None,
                lambda: l,
                n,
                p,
            }
        }
        m => return Err(Error::Invalid(format!("ci supports t-def and t-db, not {m}"))),
    };
    Ok(to_json(&out))
}

fn run_wbeta(a: &WbetaArgs) -> Result<String, Error> {
    check_alpha(a.alpha)?;
    let (y, z, _) = load_regression(&a.data, &a.response)?;
    let w = load_vector(&a.w_file)?;
    let (n, p) = z.shape();
    // one design direction is spent on the contrast
    let l = lambda_for(a.lambda.rule(), n, p.saturating_sub(1))?;
    let iv = wbeta_region(&y, &z, &w, a.alpha, l)?;
    Ok(to_json(&IntervalOut::from_interval("wbeta-ci", &iv, l, n, p)))
}

fn write_file(dir: &Path, name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<(), Error>) -> Result<(), Error> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    fs::write(dir.join(name), buf)?;
    Ok(())
}

fn run_simulate(a: &SimArgs) -> Result<String, Error> {
    let kind = parse_scenario(&a.scenario, a.sigma, a.sparsity)?;
    let mut sc = Scenario::new(kind, a.seed);
    if let Some(path) = &a.design {
        let m = center_and_scale(&load_matrix(path)?)?;
        let (n, p) = (a.n.unwrap_or(sc.n), a.p.unwrap_or(m.ncols()));
        sc = sc.with_size(n, p).with_design(DesignSource::Csv(Arc::new(m)));
    } else {
        let (n, p) = (a.n.unwrap_or(sc.n), a.p.unwrap_or(sc.p));
        sc = sc.with_size(n, p);
        if matches!(sc.design, DesignSource::Toeplitz { .. }) {
            sc = sc.with_design(DesignSource::Toeplitz { rho: a.rho });
        }
    }
    let low_dim = matches!(
        a.method,
        SimMethod::Test(Method::TOls | Method::TOlsExact | Method::TGlm)
    );
    if low_dim && sc.n <= sc.p + 2 {
        return Err(Error::Invalid(format!(
            "{} needs n > p + 2, got n = {}, p = {}",
            a.method, sc.n, sc.p
        )));
    }
    let mut opts = SimOptions::new(a.method, a.reps);
    opts.alpha = a.alpha;
    opts.lambda = a.lambda.rule();
    if a.family_y.is_some() || a.family_x.is_some() {
        let (fy, fx) = kind.default_families();
        opts.families = Some((a.family_y.unwrap_or(fy), a.family_x.unwrap_or(fx)));
    }
    let summary = match a.threads {
        Some(0) => return Err(Error::Invalid("--threads must be positive".into())),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?
            .install(|| run_monte_carlo(&sc, &opts))?,
        None => run_monte_carlo(&sc, &opts)?,
    };

    fs::create_dir_all(&a.out)?;
    write_file(&a.out, "pvalues.csv", |b| summary.write_pvalues(b))?;
    write_file(&a.out, "ecdf.csv", |b| summary.write_ecdf(b))?;
    write_file(&a.out, "coverage.csv", |b| summary.write_coverage(b))?;
    let interval = a.method.is_interval();
    let out = SummaryOut {
        schema_version: SCHEMA_VERSION,
        kind: "simulate",
        scenario: summary.scenario.clone(),
        method: summary.method.clone(),
        replicates: summary.replicates,
        completed: summary.records.len(),
        failures: summary.failures.len(),
        rejection_rate_05: if interval {
            None
        } else {
            finite(summary.rejection_rate(0.05))
        },
        coverage: summary.coverage(),
        ks_vs_uniform: if interval {
            None
        } else {
            finite(summary.ks_vs_uniform())
        },
        seed: a.seed,
        n: sc.n,
        p: sc.p,
        lambda_rule: a.lambda.tag(),
    };
    let json = to_json(&out);
    fs::write(a.out.join("summary.json"), format!("{json}\n"))?;
    Ok(json)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or_default().trim_start_matches("error: ");
            return fail("usage", first.to_owned(), 2);
        }
    };
    if cli.schema {
        print!("{SCHEMA}");
        return ExitCode::SUCCESS;
    }
    let result = match &cli.command {
        Some(Command::Test(a)) => run_test(a),
        Some(Command::Ci(a)) => run_ci(a),
        Some(Command::WbetaCi(a)) => run_wbeta(a),
        Some(Command::Simulate(a)) => run_simulate(a),
        None => return fail("usage", "no subcommand given; try --help".into(), 2),
    };
    match result {
        Ok(json) => {
            println!("{json}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = if e.is_validation() { 2 } else { 3 };
            fail(e.kind(), e.to_string(), code)
        }
    }
}
