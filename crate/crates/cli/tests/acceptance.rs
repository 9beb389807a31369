//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. `ACCEPTANCE_ONLY=3,7` restricts the run.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use defstat::ci::{confidence_interval, wbeta_region};
use defstat::data::{standardize_columns, Dataset};
use defstat::family::GlmFamily;
use defstat::glm::t_glm;
use defstat::highdim::{t_def, w_def_parts};
use defstat::lasso::{
    default_lambda, kkt_certificate, objective, quantile_lambda, solve_sqrt_lasso, LambdaRule, KKT_TOL,
};
use defstat::linalg::Matrix;
use defstat::ols::t_ols;
use defstat::result::Method;
use defstat::rng::SimRng;
use defstat::sim::generators::{gen_heteroscedastic, toeplitz_design, Nuisance};
use defstat::sim::{run_monte_carlo, McSummary, Scenario, ScenarioKind, SimMethod, SimOptions};
use defstat::stats::{ks_vs_normal, mean, sample_sd};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

/// High-dimensional criteria use the quantile penalty level, the rule the
/// reference simulations were run with.
fn mc(kind: ScenarioKind, n: usize, p: usize, seed: u64, method: SimMethod, reps: usize) -> McSummary {
    let sc = Scenario::new(kind, seed).with_size(n, p);
    let mut opts = SimOptions::new(method, reps);
    if !matches!(
        kind,
        ScenarioKind::Example1 { .. } | ScenarioKind::PoissonMisspec { .. }
    ) {
        opts.lambda = LambdaRule::Quantile;
    }
    run_monte_carlo(&sc, &opts).expect("simulation")
}

fn c1_parcor_identity() -> Verdict {
    let mut rng = SimRng::new(101);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let p = 1 + rng.index(10);
        let n = p + 5 + rng.index(150);
        let z = DMatrix::from_fn(n, p, |_, _| rng.normal());
        let x: Vec<f64> = (0..n).map(|i| 0.5 * z[(i, 0)] + rng.normal()).collect();
        let theta = rng.normal() * 0.3;
        let y: Vec<f64> = (0..n).map(|i| theta * x[i] - z[(i, p - 1)] + rng.normal()).collect();
        let ds = Dataset::new(y.clone(), x.clone(), z.clone()).unwrap();
        let stat = t_ols(&ds).unwrap().statistic;

        // partial correlation from QR residuals
        let q = z.clone().qr().q();
        let resid = |v: &[f64]| {
            let v = DVector::from_column_slice(v);
            &v - &q * (q.transpose() * &v)
        };
        let (ry, rx) = (resid(&y), resid(&x));
        let rho = ry.dot(&rx) / (ry.norm() * rx.norm());
        let df = (n - p - 1) as f64;
        let from_rho = df.sqrt() * rho / (1.0 - rho * rho).sqrt();

        // classical t from the full regression
        let d = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { x[i] } else { z[(i, j - 1)] });
        let yv = DVector::from_column_slice(&y);
        let b = d.clone().svd(true, true).solve(&yv, 1e-14).unwrap();
        let res = &yv - &d * &b;
        let s2 = res.norm_squared() / df;
        let gram_inv = (d.transpose() * &d).try_inverse().unwrap();
        let classical = b[0] / (s2 * gram_inv[(0, 0)]).sqrt();

        for other in [from_rho, classical] {
            worst = worst.max((stat - other).abs() / stat.abs().max(other.abs()));
        }
    }
    verdict(worst <= 1e-8, format!("max relative discrepancy {worst:.2e}"))
}

fn c2_example1() -> Verdict {
    let null = mc(
        ScenarioKind::Example1 { alt: false },
        442,
        10,
        2,
        SimMethod::Test(Method::TOls),
        500,
    );
    let ks = ks_vs_normal(&null.statistics());
    let rej = null.rejection_rate(0.05);
    let alt = mc(
        ScenarioKind::Example1 { alt: true },
        442,
        10,
        3,
        SimMethod::Test(Method::TOls),
        500,
    );
    let th = alt.theta_hats();
    let se = sample_sd(&th) / (th.len() as f64).sqrt();
    let m = mean(&th);
    let ok = ks <= 0.08 && (0.028..=0.078).contains(&rej) && (m - 1.0).abs() <= 3.0 * se && null.failures.is_empty();
    verdict(
        ok,
        format!(
            "KS {ks:.4}, rejection {rej:.3}, alt mean theta {m:.4} (3 SE = {:.4})",
            3.0 * se
        ),
    )
}

fn c3_poisson() -> Verdict {
    let mut ok = true;
    let mut detail = Vec::new();
    for sigma in [0.0, 4.0] {
        let sc = Scenario::new(ScenarioKind::PoissonMisspec { sigma }, 30 + sigma as u64).with_size(442, 10);
        let fixed = sc.fixed_design().unwrap();
        let out: Vec<(f64, f64)> = (0..500)
            .into_par_iter()
            .map(|r| {
                let (ds, _) = sc.generate(fixed.as_ref(), r).unwrap();
                let t = t_glm(&ds, GlmFamily::PoissonLog).unwrap();
                (t.p_value, t.diag("naive_p_value").unwrap())
            })
            .collect();
        let rate =
            |f: &dyn Fn(&(f64, f64)) -> f64| out.iter().filter(|v| f(v) <= 0.05).count() as f64 / out.len() as f64;
        let corrected = rate(&|v| v.0);
        let naive = rate(&|v| v.1);
        ok &= (0.028..=0.078).contains(&corrected);
        if sigma > 0.0 {
            ok &= naive >= corrected + 0.05;
        }
        detail.push(format!("sigma {sigma}: corrected {corrected:.3}, naive {naive:.3}"));
    }
    verdict(ok, detail.join("; "))
}

/// FISTA with adaptive restart and backtracking on ‖y − Xb‖/√n + λ‖b‖₁.
fn fista_oracle(y: &[f64], x: &Matrix, lambda: f64) -> f64 {
    let (n, p) = x.shape();
    let sn = (n as f64).sqrt();
    let yv = DVector::from_column_slice(y);
    let smooth = |b: &DVector<f64>| (&yv - x * b).norm() / sn;
    let full = |b: &DVector<f64>| smooth(b) + lambda * b.iter().map(|v| v.abs()).sum::<f64>();
    let mut b = DVector::zeros(p);
    let mut v = b.clone();
    let mut tk = 1.0f64;
    let mut step = 1.0;
    let mut best = full(&b);
    for _ in 0..200_000 {
        let r = &yv - x * &v;
        let rn = r.norm();
        let grad = -(x.transpose() * &r) / (sn * rn);
        let f0 = rn / sn;
        let cand = loop {
            let c = (&v - step * &grad).map(|u| u.signum() * (u.abs() - step * lambda).max(0.0));
            let d = &c - &v;
            if smooth(&c) <= f0 + grad.dot(&d) + d.norm_squared() / (2.0 * step) {
                break c;
            }
            step *= 0.5;
        };
        let obj = full(&cand);
        let moved = (&cand - &b).amax();
        if obj > best {
            // restart momentum
            tk = 1.0;
            v = b.clone();
            step *= 1.2;
            continue;
        }
        let tn = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
        v = &cand + ((tk - 1.0) / tn) * (&cand - &b);
        b = cand;
        tk = tn;
        best = obj;
        step *= 1.05;
        if moved < 1e-14 {
            break;
        }
    }
    best
}

fn c4_sqrt_lasso() -> Verdict {
    let results: Vec<(f64, f64, f64)> = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = SimRng::stream(404, seed);
            let n = 30 + rng.index(51);
            let p = 20 + rng.index(181);
            let (x, _) = standardize_columns(&Matrix::from_fn(n, p, |_, _| rng.normal())).unwrap();
            let y: Vec<f64> = (0..n)
                .map(|i| (0..4).map(|j| x[(i, j)] * (1.0 - 0.4 * j as f64)).sum::<f64>() + rng.normal())
                .collect();
            let lambda = default_lambda(n, p, 1.05).unwrap() * rng.uniform_range(0.6, 1.2);
            let fit = solve_sqrt_lasso(&y, &x, lambda, None).unwrap();
            let kkt = kkt_certificate(&fit, &x).unwrap().max(fit.kkt_slack);
            let gap = (objective(&y, &x, lambda, &fit.coefficients) - fista_oracle(&y, &x, lambda)).abs();
            let mut equi: f64 = 0.0;
            for c in [0.2, 3.7] {
                let yc: Vec<f64> = y.iter().map(|v| c * v).collect();
                let fc = solve_sqrt_lasso(&yc, &x, lambda, None).unwrap();
                let scale = fit.coefficients.iter().fold(1.0f64, |a, v| a.max(c * v.abs()));
                for (a, b) in fc.coefficients.iter().zip(&fit.coefficients) {
                    equi = equi.max((a - c * b).abs() / scale);
                }
                equi = equi.max((fc.sigma_hat - c * fit.sigma_hat).abs() / (c * fit.sigma_hat));
            }
            (kkt, gap, equi)
        })
        .collect();
    let kkt = results.iter().map(|r| r.0).fold(f64::MIN, f64::max);
    let gap = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let equi = results.iter().map(|r| r.2).fold(0.0, f64::max);
    verdict(
        kkt <= KKT_TOL && gap <= 1e-6 && equi <= 1e-8,
        format!("max KKT {kkt:.2e}, max oracle gap {gap:.2e}, max equivariance error {equi:.2e}"),
    )
}

fn c5_sparse_linear() -> Verdict {
    let kind = ScenarioKind::SparseLinear { s: 3 };
    let s = mc(kind, 100, 300, 5, SimMethod::Test(Method::TDef), 500);
    let rej = s.rejection_rate(0.05);
    let sc = Scenario::new(kind, 5).with_size(100, 300);
    let l = quantile_lambda(100, 300).unwrap();
    let sym = (0..100)
        .into_par_iter()
        .map(|r| {
            let (ds, _) = sc.generate(None, r).unwrap();
            let a = t_def(&ds, l, l).unwrap().statistic;
            let b = t_def(&ds.swapped(), l, l).unwrap().statistic;
            (a - b).abs()
        })
        .reduce(|| 0.0, f64::max);
    verdict(
        (0.02..=0.09).contains(&rej) && sym <= 1e-10,
        format!("rejection {rej:.3}, max symmetry gap {sym:.1e}"),
    )
}

fn c6_def_vs_db() -> Verdict {
    let kind = ScenarioKind::PartialLinear {
        nuisance: Nuisance::HighlyNonlinear,
        theta: Some(0.0),
    };
    let def = mc(kind, 100, 200, 6, SimMethod::Test(Method::TDef), 300).rejection_rate(0.05);
    let db = mc(kind, 100, 200, 6, SimMethod::Test(Method::TDb), 300).rejection_rate(0.05);
    verdict(
        def <= 0.10 && db > def,
        format!("t_def rejection {def:.3}, t_db rejection {db:.3}"),
    )
}

fn c7_coverage() -> Verdict {
    let kind = ScenarioKind::PartialLinear {
        nuisance: Nuisance::Linear,
        theta: None,
    };
    let def = mc(kind, 100, 200, 7, SimMethod::CiDef, 300).coverage().unwrap();
    let db = mc(kind, 100, 200, 7, SimMethod::CiDb, 300).coverage().unwrap();
    let fig = mc(ScenarioKind::ToeplitzConfint, 200, 500, 8, SimMethod::CiDef, 100)
        .coverage()
        .unwrap();
    verdict(
        def >= 0.90 && def >= db && fig >= 0.90,
        format!("partial-linear-a: DEF {def:.3}, debiased {db:.3}; toeplitz n=200 p=500: DEF {fig:.3}"),
    )
}

fn c8_glm_def() -> Verdict {
    let m = SimMethod::Test(Method::TGlmDef);
    let null = mc(ScenarioKind::LogisticHd { alt: false }, 250, 100, 9, m, 250).rejection_rate(0.05);
    let alt = mc(ScenarioKind::LogisticHd { alt: true }, 250, 100, 10, m, 250).rejection_rate(0.05);
    verdict(
        null <= 0.10 && alt >= null + 0.15,
        format!("null rejection {null:.3}, alternative rejection {alt:.3}"),
    )
}

fn c9_orthogonalisation_bound() -> Verdict {
    let (n, p) = (200, 100);
    let lambda = quantile_lambda(n, p).unwrap();
    let held: Vec<bool> = (0..200)
        .into_par_iter()
        .map(|r| {
            let mut rng = SimRng::replicate(909, r);
            let z = toeplitz_design(&mut rng, n, p, 0.5).unwrap();
            let (ds, w, beta) = gen_heteroscedastic(&z, 3, &mut rng).unwrap();
            let parts = w_def_parts(ds.y(), ds.x(), ds.z(), &w, lambda).unwrap();
            let err: f64 = (0..p)
                .map(|j| (beta[j] / parts.scale_y[j] - parts.first_y.coefficients[j]).abs())
                .sum();
            let orth: f64 = parts.orth_y.coefficients.iter().map(|v| v.abs()).sum();
            orth <= 10.0 * err
        })
        .collect();
    let frac = held.iter().filter(|h| **h).count() as f64 / held.len() as f64;
    verdict(frac >= 0.95, format!("bound holds in {frac:.3} of replicates"))
}

fn c10_wbeta() -> Verdict {
    let (n, p) = (100, 200);
    let lambda = quantile_lambda(n, p).unwrap();
    let data = |r: usize| {
        let mut rng = SimRng::replicate(1010, r);
        let z = toeplitz_design(&mut rng, n, p, 0.5).unwrap();
        let y: Vec<f64> = (0..n)
            .map(|i| z[(i, 0)] - 0.5 * z[(i, 1)] + 0.7 * z[(i, 2)] + rng.normal())
            .collect();
        let w: Vec<f64> = (0..p).map(|_| 1.0 + 0.5 * rng.normal()).collect();
        (z, y, w)
    };
    let covered: Vec<bool> = (0..300)
        .into_par_iter()
        .map(|r| {
            let (z, y, w) = data(r);
            let truth = w[0] - 0.5 * w[1] + 0.7 * w[2];
            wbeta_region(&y, &z, &w, 0.05, lambda).unwrap().contains(truth)
        })
        .collect();
    let cov = covered.iter().filter(|c| **c).count() as f64 / covered.len() as f64;
    let l1 = quantile_lambda(n, p - 1).unwrap();
    let agree = (0..20)
        .into_par_iter()
        .map(|r| {
            let (z, y, _) = data(r);
            let j = 1;
            let mut e = vec![0.0; p];
            e[j] = 1.0;
            let a = wbeta_region(&y, &z, &e, 0.05, l1).unwrap();
            let rest = Matrix::from_fn(n, p - 1, |i, k| z[(i, if k < j { k } else { k + 1 })]);
            let ds = Dataset::new(y, z.column(j).iter().copied().collect(), rest).unwrap();
            let b = confidence_interval(&ds, 0.05, l1, l1).unwrap();
            ((a.lower - b.lower).abs().max((a.upper - b.upper).abs())) / b.width()
        })
        .reduce(|| 0.0, f64::max);
    verdict(
        cov >= 0.90 && agree <= 1e-3,
        format!("coverage {cov:.3}; e_j endpoint gap {agree:.1e} of width"),
    )
}

fn simulate(out: &Path, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_defstat"))
        .arg("simulate")
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn c11_determinism() -> Verdict {
    let runs: [&[&str]; 3] = [
        &[
            "--scenario",
            "example1-null",
            "--method",
            "t-ols",
            "--replicates",
            "40",
            "--seed",
            "7",
        ],
        &[
            "--scenario",
            "sparse-linear",
            "--method",
            "t-def",
            "--replicates",
            "12",
            "--seed",
            "8",
            "--n",
            "60",
            "--p",
            "80",
            "--threads",
            "2",
        ],
        &[
            "--scenario",
            "toeplitz-confint",
            "--method",
            "ci-def",
            "--replicates",
            "4",
            "--seed",
            "9",
            "--n",
            "60",
            "--p",
            "50",
        ],
    ];
    let mut bad = Vec::new();
    for args in runs {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        if !simulate(a.path(), args) || !simulate(b.path(), args) {
            bad.push(format!("{} failed to run", args[1]));
            continue;
        }
        let mut names: Vec<_> = std::fs::read_dir(a.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        if names.is_empty() {
            bad.push(format!("{} wrote nothing", args[1]));
        }
        for f in names {
            let x = std::fs::read(a.path().join(&f)).unwrap();
            let y = std::fs::read(b.path().join(&f)).unwrap_or_default();
            if x != y {
                bad.push(format!("{}:{}", args[1], f.to_string_lossy()));
            }
        }
    }
    verdict(
        bad.is_empty(),
        if bad.is_empty() {
            "all output files byte-identical".into()
        } else {
            bad.join(", ")
        },
    )
}

type Criterion = (usize, &'static str, f64, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 11] = [
        (
            1,
            "t_ols equals partial-correlation transform and classical t",
            10.0,
            c1_parcor_identity,
        ),
        (2, "example1-null calibration", 60.0, c2_example1),
        (3, "poisson sandwich correction", 120.0, c3_poisson),
        (4, "square-root lasso correctness", 60.0, c4_sqrt_lasso),
        (5, "t_def calibration and symmetry", 300.0, c5_sparse_linear),
        (6, "t_def robust where t_db is not", 600.0, c6_def_vs_db),
        (7, "confidence interval coverage", 1200.0, c7_coverage),
        (8, "t_glm_def level and power", 1800.0, c8_glm_def),
        (9, "orthogonalisation l1 bound", 300.0, c9_orthogonalisation_bound),
        (10, "contrast region coverage", 900.0, c10_wbeta),
        (11, "simulate determinism", f64::INFINITY, c11_determinism),
    ];
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut failed = 0;
    for (id, name, limit, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let v = run();
        let secs = start.elapsed().as_secs_f64();
        let pass = v.pass && secs < limit;
        failed += !pass as usize;
        println!(
            "{} criterion {id:>2} {name}: {} [{secs:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
