//! Monte Carlo harness: scenarios, the replicate runner and CSV output.

pub mod generators;

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::ci::{confidence_interval, debiased_interval};
use crate::data::{read_matrix, Dataset};
use crate::error::{Error, Result};
use crate::family::GlmFamily;
use crate::glm::t_glm;
use crate::highdim::{t_db, t_def, t_glm_def, t_w_def, WeightSpec};
use crate::lasso::LambdaRule;
use crate::linalg::{prepend_column, Matrix};
use crate::ols::{t_ols, t_ols_exact};
use crate::result::{Method, TestResult};
use crate::rng::SimRng;
use crate::stats;

use generators::Nuisance;

/// Largest tolerated fraction of failed replicates.
pub const MAX_FAILURE_FRACTION: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioKind {
    Example1 {
        alt: bool,
    },
    PoissonMisspec {
        sigma: f64,
    },
    /// `theta = None` draws θ ~ U[0, 2] per replicate.
    PartialLinear {
        nuisance: Nuisance,
        theta: Option<f64>,
    },
    LogisticHd {
        alt: bool,
    },
    ToeplitzConfint,
    SparseLinear {
        s: usize,
    },
}

impl ScenarioKind {
    /// Default (n, p) for each scenario.
    pub fn default_size(&self) -> (usize, usize) {
        match self {
            ScenarioKind::Example1 { .. } | ScenarioKind::PoissonMisspec { .. } => (442, 10),
            ScenarioKind::PartialLinear { .. } => (100, 200),
            ScenarioKind::LogisticHd { .. } => (250, 100),
            ScenarioKind::ToeplitzConfint => (200, 500),
            ScenarioKind::SparseLinear { .. } => (100, 300),
        }
    }

    /// Whether the design is drawn once for the whole run.
    fn fixed_design(&self) -> bool {
        matches!(
            self,
            ScenarioKind::Example1 { .. } | ScenarioKind::PoissonMisspec { .. }
        )
    }

    pub fn tag(&self) -> String {
        match self {
            ScenarioKind::Example1 { alt: false } => "example1-null".into(),
            ScenarioKind::Example1 { alt: true } => "example1-alt".into(),
            ScenarioKind::PoissonMisspec { .. } => "poisson-misspec".into(),
            ScenarioKind::PartialLinear { nuisance, theta: None } => format!("partial-linear-{}", nuisance.tag()),
            ScenarioKind::PartialLinear {
                nuisance,
                theta: Some(_),
            } => format!("partial-linear-{}-fixed", nuisance.tag()),
            ScenarioKind::LogisticHd { alt: false } => "logistic-hd-null".into(),
            ScenarioKind::LogisticHd { alt: true } => "logistic-hd-alt".into(),
            ScenarioKind::ToeplitzConfint => "toeplitz-confint".into(),
            ScenarioKind::SparseLinear { .. } => "sparse-linear".into(),
        }
    }

    /// Families for `t-glm` and `t-glm-def` matching the response types.
    pub fn default_families(&self) -> (GlmFamily, GlmFamily) {
        match self {
            ScenarioKind::PoissonMisspec { .. } => (GlmFamily::PoissonLog, GlmFamily::GaussianIdentity),
            ScenarioKind::LogisticHd { .. } => (GlmFamily::BinomialLogit, GlmFamily::BinomialLogit),
            _ => (GlmFamily::GaussianIdentity, GlmFamily::GaussianIdentity),
        }
    }
}

/// Parses a scenario tag. `partial-linear-c-null` fixes θ = 0; `sigma` and `s`
/// parametrise `poisson-misspec` and `sparse-linear`.
pub fn parse_scenario(tag: &str, sigma: f64, sparsity: usize) -> Result<ScenarioKind> {
    let pl = |c: &str| -> Result<Nuisance> {
        match c {
            "a" => Ok(Nuisance::Linear),
            "b" => Ok(Nuisance::SlightlyNonlinear),
            "c" => Ok(Nuisance::HighlyNonlinear),
            _ => Err(Error::Invalid(format!("unknown partial-linear setting `{c}`"))),
        }
    };
    Ok(match tag {
        "example1-null" => ScenarioKind::Example1 { alt: false },
        "example1-alt" => ScenarioKind::Example1 { alt: true },
        "poisson-misspec" => ScenarioKind::PoissonMisspec { sigma },
        "logistic-hd-null" => ScenarioKind::LogisticHd { alt: false },
        "logistic-hd-alt" => ScenarioKind::LogisticHd { alt: true },
        "toeplitz-confint" => ScenarioKind::ToeplitzConfint,
        "sparse-linear" => ScenarioKind::SparseLinear { s: sparsity },
        t if t.starts_with("partial-linear-") => {
            let rest = &t["partial-linear-".len()..];
            match rest.split_once('-') {
                Some((c, "null")) => ScenarioKind::PartialLinear {
                    nuisance: pl(c)?,
                    theta: Some(0.0),
                },
                None => ScenarioKind::PartialLinear {
                    nuisance: pl(rest)?,
                    theta: None,
                },
                _ => return Err(Error::Invalid(format!("unknown scenario `{tag}`"))),
            }
        }
        _ => return Err(Error::Invalid(format!("unknown scenario `{tag}`"))),
    })
}

#[derive(Debug, Clone)]
pub enum DesignSource {
    Toeplitz {
        rho: f64,
    },
    /// Rows are used as-is for fixed designs and resampled for random ones.
    /// Columns should already be centred and scaled.
    Csv(Arc<Matrix>),
}

impl Default for DesignSource {
    fn default() -> Self {
        DesignSource::Toeplitz { rho: 0.9 }
    }
}

const DIABETES_CSV: &str = include_str!("../../data/diabetes.csv");

/// The 442 × 10 diabetes covariates (age, sex, bmi, bp, s1–s6) in their
/// usual published form: centred, each column with unit Euclidean norm.
pub fn diabetes_design() -> Matrix {
    let raw = read_matrix(DIABETES_CSV.as_bytes()).expect("embedded CSV parses");
    center_and_scale(&raw).expect("embedded CSV has no constant column") / (raw.nrows() as f64).sqrt()
}

/// Centres each column and scales it to unit empirical variance.
pub fn center_and_scale(m: &Matrix) -> Result<Matrix> {
    let n = m.nrows() as f64;
    let mut out = m.clone();
    for j in 0..m.ncols() {
        let mut c = out.column_mut(j);
        let mean = c.sum() / n;
        c.add_scalar_mut(-mean);
        let sd = (c.norm_squared() / n).sqrt();
        if sd == 0.0 {
            return Err(Error::DegenerateColumn(format!("design column {}", j + 1)));
        }
        c.scale_mut(1.0 / sd);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    pub design: DesignSource,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, seed: u64) -> Self {
        let (n, p) = kind.default_size();
        let design = if kind.fixed_design() {
            DesignSource::Csv(Arc::new(diabetes_design()))
        } else {
            DesignSource::default()
        };
        Self {
            kind,
            n,
            p,
            seed,
            design,
        }
    }

    /// A fixed-design scenario falls back to a Toeplitz design when `p`
    /// no longer matches its CSV.
    pub fn with_size(mut self, n: usize, p: usize) -> Self {
        self.n = n;
        self.p = p;
        if matches!(&self.design, DesignSource::Csv(m) if m.ncols() != p) {
            self.design = DesignSource::default();
        }
        self
    }

    pub fn with_design(mut self, design: DesignSource) -> Self {
        self.design = design;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p == 0 {
            return Err(Error::Invalid(format!("invalid size n = {}, p = {}", self.n, self.p)));
        }
        if let ScenarioKind::PoissonMisspec { sigma } = self.kind {
            if !(sigma >= 0.0) || !sigma.is_finite() {
                return Err(Error::Invalid(format!("sigma must be nonnegative, got {sigma}")));
            }
        }
        match &self.design {
            DesignSource::Toeplitz { rho } if !(*rho > -1.0 && *rho < 1.0) => {
                Err(Error::Invalid(format!("rho must lie in (-1, 1), got {rho}")))
            }
            DesignSource::Csv(m) if m.nrows() == 0 || m.ncols() == 0 => Err(Error::Invalid("empty design CSV".into())),
            DesignSource::Csv(m) if m.ncols() != self.p => Err(Error::Invalid(format!(
                "design CSV has {} columns but p = {}",
                m.ncols(),
                self.p
            ))),
            _ => Ok(()),
        }
    }

    fn draw_design(&self, rng: &mut SimRng) -> Result<Matrix> {
        match &self.design {
            DesignSource::Toeplitz { rho } => generators::toeplitz_design(rng, self.n, self.p, *rho),
            DesignSource::Csv(m) if self.kind.fixed_design() && m.nrows() == self.n => Ok((**m).clone()),
            DesignSource::Csv(m) => Ok(generators::bootstrap_rows(rng, m, self.n)),
        }
    }

    /// Scenario-level fixed design, if the scenario has one.
    pub fn fixed_design(&self) -> Result<Option<Matrix>> {
        if !self.kind.fixed_design() {
            return Ok(None);
        }
        self.draw_design(&mut SimRng::new(self.seed)).map(Some)
    }

    /// Replicate `r`: the dataset and the true exposure coefficient.
    pub fn generate(&self, fixed: Option<&Matrix>, r: usize) -> Result<(Dataset, f64)> {
        let mut rng = SimRng::replicate(self.seed, r);
        match self.kind {
            ScenarioKind::Example1 { alt } => {
                let z = fixed.ok_or_else(|| Error::Generator("missing fixed design".into()))?;
                let ds = generators::gen_example1(z, &mut rng, alt)?;
                Ok((
                    with_intercept(ds.y().to_vec(), ds.x().to_vec(), z)?,
                    if alt { 1.0 } else { 0.0 },
                ))
            }
            ScenarioKind::PoissonMisspec { sigma } => {
                let z = fixed.ok_or_else(|| Error::Generator("missing fixed design".into()))?;
                let x = generators::example1_exposure(z, &mut rng);
                let y = generators::gen_poisson_misspec(z, sigma, &mut rng)?;
                Ok((with_intercept(y, x, z)?, 0.0))
            }
            ScenarioKind::PartialLinear { nuisance, theta } => {
                let w = self.draw_design(&mut rng)?;
                generators::gen_partial_linear(&w, nuisance, theta, &mut rng)
            }
            ScenarioKind::LogisticHd { alt } => {
                let z = self.draw_design(&mut rng)?;
                let ds = generators::gen_logistic_hd(&z, &mut rng, alt)?;
                Ok((ds, if alt { 1.0 } else { 0.0 }))
            }
            ScenarioKind::ToeplitzConfint => {
                let w = self.draw_design(&mut rng)?;
                generators::gen_toeplitz_confint(&w, &mut rng)
            }
            ScenarioKind::SparseLinear { s } => {
                let z = self.draw_design(&mut rng)?;
                Ok((generators::gen_sparse_linear(&z, s, &mut rng)?, 0.0))
            }
        }
    }
}

/// The low-dimensional scenarios model an intercept alongside the controls.
fn with_intercept(y: Vec<f64>, x: Vec<f64>, z: &Matrix) -> Result<Dataset> {
    Dataset::new(y, x, prepend_column(&vec![1.0; z.nrows()], z))
}

/// What each replicate computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMethod {
    Test(Method),
    /// Interval from inverting T_DEF.
    CiDef,
    /// Wald interval from the debiased Lasso.
    CiDb,
}

impl SimMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            SimMethod::Test(m) => m.tag(),
            SimMethod::CiDef => "ci-def",
            SimMethod::CiDb => "ci-db",
        }
    }

    pub fn is_interval(&self) -> bool {
        !matches!(self, SimMethod::Test(_))
    }
}

impl fmt::Display for SimMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SimMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ci-def" => Ok(SimMethod::CiDef),
            "ci-db" => Ok(SimMethod::CiDb),
            other => other.parse().map(SimMethod::Test),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub method: SimMethod,
    pub replicates: usize,
    /// Level of the confidence intervals.
    pub alpha: f64,
    pub lambda: LambdaRule,
    /// Families for the GLM-based methods; scenario defaults when `None`.
    pub families: Option<(GlmFamily, GlmFamily)>,
    /// Run replicates on the rayon pool of the caller.
    pub parallel: bool,
}

impl SimOptions {
    pub fn new(method: SimMethod, replicates: usize) -> Self {
        Self {
            method,
            replicates,
            alpha: 0.05,
            lambda: LambdaRule::default(),
            families: None,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub theta_hat: Option<f64>,
    pub truth: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub covered: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateFailure {
    pub replicate: usize,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct McSummary {
    pub scenario: String,
    pub method: String,
    pub seed: u64,
    pub replicates: usize,
    pub records: Vec<ReplicateRecord>,
    pub failures: Vec<ReplicateFailure>,
}

impl McSummary {
    pub fn p_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.p_value).collect()
    }

    pub fn statistics(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.statistic).collect()
    }

    pub fn rejection_rate(&self, alpha: f64) -> f64 {
        if self.records.is_empty() {
            return f64::NAN;
        }
        self.records.iter().filter(|r| r.p_value <= alpha).count() as f64 / self.records.len() as f64
    }

    pub fn coverage(&self) -> Option<f64> {
        let c: Vec<bool> = self.records.iter().filter_map(|r| r.covered).collect();
        if c.is_empty() {
            None
        } else {
            Some(c.iter().filter(|v| **v).count() as f64 / c.len() as f64)
        }
    }

    pub fn ks_vs_uniform(&self) -> f64 {
        stats::ks_vs_uniform(&self.p_values())
    }

    pub fn theta_hats(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.theta_hat).collect()
    }

    /// `replicate,p_value,statistic`
    pub fn write_pvalues<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# replicate: replicate index; p_value: two-sided p-value; statistic: test statistic"
        )?;
        writeln!(w, "replicate,p_value,statistic")?;
        for r in &self.records {
            writeln!(w, "{},{},{}", r.replicate, fmt_num(r.p_value), fmt_num(r.statistic))?;
        }
        Ok(())
    }

    /// `p_value,ecdf`, sorted by p-value.
    pub fn write_ecdf<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# p_value: sorted p-values; ecdf: empirical CDF at that value")?;
        writeln!(w, "p_value,ecdf")?;
        for (p, f) in stats::ecdf(&self.p_values()) {
            writeln!(w, "{},{}", fmt_num(p), fmt_num(f))?;
        }
        Ok(())
    }

    /// `replicate,lower,upper,truth,covered`; only interval methods have rows.
    pub fn write_coverage<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# replicate: replicate index; lower, upper: interval endpoints; truth: true coefficient; covered: 1 if truth lies in the interval")?;
        writeln!(w, "replicate,lower,upper,truth,covered")?;
        for r in &self.records {
            if let (Some(lo), Some(hi), Some(c)) = (r.lower, r.upper, r.covered) {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    r.replicate,
                    fmt_num(lo),
                    fmt_num(hi),
                    fmt_num(r.truth),
                    c as u8
                )?;
            }
        }
        Ok(())
    }
}

/// 17 significant digits, so files round-trip exactly.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn interval_record(r: usize, truth: f64, lo: f64, hi: f64, theta_hat: Option<f64>) -> ReplicateRecord {
    let covered = lo <= truth && truth <= hi;
    ReplicateRecord {
        replicate: r,
        statistic: f64::NAN,
        // no test behind an interval; store 1 − covered as a rejection indicator
        p_value: if covered { 1.0 } else { 0.0 },
        theta_hat,
        truth,
        lower: Some(lo),
        upper: Some(hi),
        covered: Some(covered),
    }
}

fn test_record(r: usize, truth: f64, t: &TestResult) -> ReplicateRecord {
    ReplicateRecord {
        replicate: r,
        statistic: t.statistic,
        p_value: t.p_value,
        theta_hat: t.diag("theta_hat"),
        truth,
        lower: None,
        upper: None,
        covered: None,
    }
}

/// Runs one method on one dataset.
pub fn apply_method(
    ds: &Dataset,
    method: SimMethod,
    opts: &SimOptions,
    families: (GlmFamily, GlmFamily),
) -> Result<TestOrInterval> {
    let (n, p) = (ds.n(), ds.p());
    let lambda = || opts.lambda.lambda(n, p.max(2));
    Ok(match method {
        SimMethod::Test(Method::TOls) => TestOrInterval::Test(t_ols(ds)?),
        SimMethod::Test(Method::TOlsExact) => TestOrInterval::Test(t_ols_exact(ds)?),
        SimMethod::Test(Method::TGlm) => TestOrInterval::Test(t_glm(ds, families.0)?),
        SimMethod::Test(Method::TDef) => {
            let l = lambda()?;
            TestOrInterval::Test(t_def(ds, l, l)?)
        }
        SimMethod::Test(Method::TDb) => {
            let l = lambda()?;
            TestOrInterval::Test(t_db(ds, l, l)?)
        }
        SimMethod::Test(Method::TWDef) => {
            TestOrInterval::Test(t_w_def(ds.y(), ds.x(), ds.z(), &WeightSpec::unit(n), lambda()?)?)
        }
        SimMethod::Test(Method::TGlmDef) => TestOrInterval::Test(t_glm_def(ds, families.0, families.1, lambda()?)?),
        SimMethod::CiDef => {
            let l = lambda()?;
            let iv = confidence_interval(ds, opts.alpha, l, l)?;
            TestOrInterval::Interval(iv.lower, iv.upper, Some(iv.t_star))
        }
        SimMethod::CiDb => {
            let l = lambda()?;
            let (lo, hi) = debiased_interval(ds, opts.alpha, l, l)?;
            TestOrInterval::Interval(lo, hi, Some(0.5 * (lo + hi)))
        }
    })
}

pub enum TestOrInterval {
    Test(TestResult),
    Interval(f64, f64, Option<f64>),
}

fn run_replicate(
    scenario: &Scenario,
    fixed: Option<&Matrix>,
    opts: &SimOptions,
    r: usize,
) -> std::result::Result<ReplicateRecord, ReplicateFailure> {
    let fail = |e: Error| ReplicateFailure {
        replicate: r,
        kind: e.kind().to_owned(),
        message: e.to_string(),
    };
    let (ds, truth) = scenario.generate(fixed, r).map_err(fail)?;
    let families = opts.families.unwrap_or_else(|| scenario.kind.default_families());
    match apply_method(&ds, opts.method, opts, families).map_err(fail)? {
        TestOrInterval::Test(t) => Ok(test_record(r, truth, &t)),
        TestOrInterval::Interval(lo, hi, est) => Ok(interval_record(r, truth, lo, hi, est)),
    }
}

/// Runs `opts.replicates` independent replicates. Failed replicates are
/// recorded and excluded; more than 2% failures is an error.
pub fn run_monte_carlo(scenario: &Scenario, opts: &SimOptions) -> Result<McSummary> {
    scenario.validate()?;
    if opts.replicates == 0 {
        return Err(Error::Invalid("need at least one replicate".into()));
    }
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(Error::Invalid(format!("alpha must lie in (0, 1), got {}", opts.alpha)));
    }
    // surface parameter errors before spending any replicates
    opts.lambda.lambda(scenario.n, scenario.p.max(2))?;
    let fixed = scenario.fixed_design()?;
    let outcomes = run_all(scenario, fixed.as_ref(), opts);
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => records.push(r),
            Err(f) => failures.push(f),
        }
    }
    let total = opts.replicates;
    if failures.len() as f64 > MAX_FAILURE_FRACTION * total as f64 {
        return Err(Error::TooManyFailures {
            failed: failures.len(),
            total,
        });
    }
    Ok(McSummary {
        scenario: scenario.kind.tag(),
        method: opts.method.tag().to_owned(),
        seed: scenario.seed,
        replicates: total,
        records,
        failures,
    })
}

type Outcome = std::result::Result<ReplicateRecord, ReplicateFailure>;

#[cfg(feature = "parallel")]
fn run_all(scenario: &Scenario, fixed: Option<&Matrix>, opts: &SimOptions) -> Vec<Outcome> {
    use rayon::prelude::*;
    if opts.parallel {
        (0..opts.replicates)
            .into_par_iter()
            .map(|r| run_replicate(scenario, fixed, opts, r))
            .collect()
    } else {
        (0..opts.replicates)
            .map(|r| run_replicate(scenario, fixed, opts, r))
            .collect()
    }
}

#[cfg(not(feature = "parallel"))]
fn run_all(scenario: &Scenario, fixed: Option<&Matrix>, opts: &SimOptions) -> Vec<Outcome> {
    (0..opts.replicates)
        .map(|r| run_replicate(scenario, fixed, opts, r))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_replicate() {
        let sc = Scenario::new(ScenarioKind::Example1 { alt: false }, 3).with_size(60, 4);
        let s = run_monte_carlo(&sc, &SimOptions::new(SimMethod::Test(Method::TOls), 1)).unwrap();
        assert_eq!(s.records.len(), 1);
        let r = s.rejection_rate(0.05);
        assert!(r == 0.0 || r == 1.0);
    }

    #[test]
    fn deterministic_and_order_free() {
        let sc = Scenario::new(ScenarioKind::SparseLinear { s: 3 }, 11).with_size(50, 40);
        let mut o = SimOptions::new(SimMethod::Test(Method::TDef), 6);
        let a = run_monte_carlo(&sc, &o).unwrap();
        o.parallel = false;
        let b = run_monte_carlo(&sc, &o).unwrap();
        assert_eq!(a.records, b.records);
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        a.write_pvalues(&mut buf_a).unwrap();
        b.write_pvalues(&mut buf_b).unwrap();
        assert_eq!(buf_a, buf_b);
    }

    #[test]
    fn rejection_rate_monotone_in_alpha() {
        let sc = Scenario::new(ScenarioKind::Example1 { alt: true }, 5).with_size(80, 5);
        let s = run_monte_carlo(&sc, &SimOptions::new(SimMethod::Test(Method::TOls), 20)).unwrap();
        let rates: Vec<f64> = [0.2, 0.1, 0.05, 0.01].iter().map(|a| s.rejection_rate(*a)).collect();
        assert!(rates.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn coverage_is_populated_for_intervals() {
        let sc = Scenario::new(ScenarioKind::ToeplitzConfint, 2).with_size(60, 40);
        let s = run_monte_carlo(&sc, &SimOptions::new(SimMethod::CiDef, 3)).unwrap();
        let c = s.coverage().unwrap();
        assert!((0.0..=1.0).contains(&c));
        let mut buf = Vec::new();
        s.write_coverage(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with('#'));
        assert_eq!(text.lines().count(), 2 + 3);
    }

    #[test]
    fn scenario_tags_parse() {
        for t in [
            "example1-null",
            "example1-alt",
            "poisson-misspec",
            "partial-linear-a",
            "partial-linear-c-null",
            "logistic-hd-alt",
            "toeplitz-confint",
            "sparse-linear",
        ] {
            assert!(parse_scenario(t, 4.0, 3).is_ok(), "{t}");
        }
        assert!(parse_scenario("nope", 0.0, 3).unwrap_err().is_validation());
        assert!(parse_scenario("partial-linear-d", 0.0, 3).is_err());
    }

    #[test]
    fn csv_design_is_resampled() {
        let mut rng = SimRng::new(1);
        let src = center_and_scale(&generators::toeplitz_design(&mut rng, 30, 15, 0.5).unwrap()).unwrap();
        let sc = Scenario::new(
            ScenarioKind::PartialLinear {
                nuisance: Nuisance::Linear,
                theta: None,
            },
            4,
        )
        .with_size(40, 15)
        .with_design(DesignSource::Csv(Arc::new(src)));
        let (ds, _) = sc.generate(None, 0).unwrap();
        assert_eq!(ds.n(), 40);
        assert_eq!(ds.p(), 14);
    }
}
