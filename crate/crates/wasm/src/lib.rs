//! Browser bindings: each entry point returns a JSON string for the page to plot.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use defstat::ci::{invert, ShiftedDef};
use defstat::error::Error;
use defstat::family::GlmFamily;
use defstat::glm::t_glm;
use defstat::lasso::LambdaRule;
use defstat::result::Method;
use defstat::sim::{run_monte_carlo, Scenario, ScenarioKind, SimMethod, SimOptions};
use defstat::stats::{ks_vs_normal, two_sided_critical};

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

fn rule(quantile: bool) -> LambdaRule {
    if quantile {
        LambdaRule::Quantile
    } else {
        LambdaRule::default()
    }
}

#[derive(Serialize)]
struct Curve {
    grid: Vec<f64>,
    statistic: Vec<f64>,
    critical: f64,
    lower: f64,
    upper: f64,
    truth: f64,
    evaluations: usize,
}

/// |T_DEF(t)| over a grid of hypothesised coefficients for one simulated
/// dataset, plus the inverted interval.
#[wasm_bindgen]
pub fn confint_curve(seed: u32, n: usize, p: usize, alpha: f64, quantile: bool) -> Result<String, JsError> {
    let sc = Scenario::new(ScenarioKind::ToeplitzConfint, seed as u64).with_size(n, p);
    let (ds, truth) = sc.generate(None, 0).map_err(js)?;
    let lambda = rule(quantile).lambda(ds.n(), ds.p().max(2)).map_err(js)?;
    let mut stat = ShiftedDef::for_dataset(&ds, lambda, lambda).map_err(js)?;
    let iv = invert(&mut stat, alpha).map_err(js)?;
    let mid = 0.5 * (iv.lower + iv.upper);
    let half = 2.5 * iv.width().max(1e-3);
    let grid: Vec<f64> = (0..=100).map(|k| mid - half + 2.0 * half * k as f64 / 100.0).collect();
    let statistic = grid
        .iter()
        .map(|&t| stat.statistic(t))
        .collect::<Result<Vec<_>, _>>()
        .map_err(js)?;
    let out = Curve {
        grid,
        statistic,
        critical: two_sided_critical(alpha),
        lower: iv.lower,
        upper: iv.upper,
        truth,
        evaluations: stat.evaluations(),
    };
    Ok(serde_json::to_string(&out).expect("plain data"))
}

#[derive(Serialize)]
struct Ecdfs {
    corrected: Vec<f64>,
    naive: Vec<f64>,
    quasi: Vec<f64>,
    failures: usize,
}

/// Sorted null p-values of the corrected, naive and quasi-likelihood Wald
/// tests in the misspecified Poisson model.
#[wasm_bindgen]
pub fn poisson_ecdf(sigma: f64, reps: usize, seed: u32) -> Result<String, JsError> {
    let sc = Scenario::new(ScenarioKind::PoissonMisspec { sigma }, seed as u64);
    let fixed = sc.fixed_design().map_err(js)?;
    let mut out = Ecdfs {
        corrected: Vec::with_capacity(reps),
        naive: Vec::with_capacity(reps),
        quasi: Vec::with_capacity(reps),
        failures: 0,
    };
    for r in 0..reps {
        let (ds, _) = sc.generate(fixed.as_ref(), r).map_err(js)?;
        match t_glm(&ds, GlmFamily::PoissonLog) {
            Ok(t) => {
                out.corrected.push(t.p_value);
                out.naive.push(t.diag("naive_p_value").unwrap_or(f64::NAN));
                out.quasi.push(t.diag("quasi_p_value").unwrap_or(f64::NAN));
            }
            Err(_) => out.failures += 1,
        }
    }
    for v in [&mut out.corrected, &mut out.naive, &mut out.quasi] {
        v.sort_by(f64::total_cmp);
    }
    Ok(serde_json::to_string(&out).expect("plain data"))
}

#[derive(Serialize)]
struct Histogram {
    edges: Vec<f64>,
    counts: Vec<usize>,
    ks: f64,
    rejection_rate: f64,
    mean_theta: f64,
}

/// Histogram of T_OLS over replicates of the diabetes-design example.
#[wasm_bindgen]
pub fn tols_histogram(reps: usize, seed: u32, bins: usize, alt: bool) -> Result<String, JsError> {
    let sc = Scenario::new(ScenarioKind::Example1 { alt }, seed as u64);
    let mut opts = SimOptions::new(SimMethod::Test(Method::TOls), reps);
    opts.parallel = false;
    let mc = run_monte_carlo(&sc, &opts).map_err(js)?;
    let stats = mc.statistics();
    let bins = bins.clamp(5, 200);
    let (lo, hi) = stats
        .iter()
        .fold((-4.0f64, 4.0f64), |(a, b), &s| (a.min(s.floor()), b.max(s.ceil())));
    let w = (hi - lo) / bins as f64;
    let mut counts = vec![0; bins];
    for s in &stats {
        counts[(((s - lo) / w) as usize).min(bins - 1)] += 1;
    }
    let theta = mc.theta_hats();
    let out = Histogram {
        edges: (0..=bins).map(|k| lo + w * k as f64).collect(),
        counts,
        ks: ks_vs_normal(&stats),
        rejection_rate: mc.rejection_rate(0.05),
        mean_theta: theta.iter().sum::<f64>() / theta.len().max(1) as f64,
    };
    Ok(serde_json::to_string(&out).expect("plain data"))
}
