//! High-dimensional tests built from square-root Lasso residuals.
//!
//! `t_def` correlates the residuals of `y` on `z` and of `x` on `z`. Each
//! residual vector is nearly orthogonal to every column of `z` (its KKT
//! condition), which bounds the bias from whichever regression is
//! misspecified, provided the other one is a sparse linear model.

use crate::data::{standardize_columns, Dataset};
use crate::error::{Error, Result};
use crate::family::GlmFamily;
use crate::glm::GlmFit;
use crate::lasso::{solve_lasso, solve_sqrt_lasso, solve_sqrt_lasso_weighted, LassoFit};
use crate::linalg::{col, dot, hstack, mat_vec_sparse, norm2, prepend_column, scale_rows, Matrix};
use crate::result::{Method, TestResult};

/// `√n·aᵀb/(‖a‖‖b‖)`, or `None` when either vector is zero.
pub fn scaled_correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    let (na, nb) = (norm2(a), norm2(b));
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    let n = a.len() as f64;
    Some((n.sqrt() * dot(a, b) / (na * nb)).clamp(-n.sqrt(), n.sqrt()))
}

fn lasso_diagnostics(r: TestResult, suffix: &str, fit: &LassoFit) -> TestResult {
    r.with(&format!("lambda_{suffix}"), fit.lambda)
        .with(&format!("sigma_hat_{suffix}"), fit.sigma_hat)
        .with(
            &format!("kkt_slack_{suffix}"),
            if fit.degenerate { 0.0 } else { fit.kkt_slack },
        )
        .with(&format!("active_{suffix}"), fit.active().count() as f64)
}

/// Both nuisance regressions of the DEF statistic.
#[derive(Debug, Clone)]
pub struct DefFits {
    pub y: LassoFit,
    pub x: LassoFit,
}

impl DefFits {
    pub fn statistic(&self) -> Option<f64> {
        scaled_correlation(&self.y.residuals, &self.x.residuals)
    }
}

/// Scaled copy of `z` with unit mean-square columns.
pub fn scaled_controls(z: &Matrix) -> Result<Matrix> {
    standardize_columns(z).map(|(m, _)| m)
}

fn def_result(fits: &DefFits) -> TestResult {
    let (stat, degenerate) = match fits.statistic() {
        Some(s) => (s, false),
        None => (0.0, true),
    };
    let r = TestResult::normal(Method::TDef, stat).with("degenerate", degenerate as u8 as f64);
    let r = lasso_diagnostics(r, "y", &fits.y);
    lasso_diagnostics(r, "x", &fits.x)
}

/// T_DEF with the residual regressions run on an already scaled `z`.
pub fn t_def_scaled(
    y: &[f64],
    x: &[f64],
    z_scaled: &Matrix,
    lambda_x: f64,
    lambda_y: f64,
) -> Result<(TestResult, DefFits)> {
    let fits = DefFits {
        y: solve_sqrt_lasso(y, z_scaled, lambda_y, None)?,
        x: solve_sqrt_lasso(x, z_scaled, lambda_x, None)?,
    };
    Ok((def_result(&fits), fits))
}

pub fn result_from_fits(fits: &DefFits) -> TestResult {
    def_result(fits)
}

/// T_DEF = √n·(Y − Zβ̂^Y)ᵀ(X − Zβ̂^X)/(‖Y − Zβ̂^Y‖‖X − Zβ̂^X‖) with
/// square-root Lasso fits of `y` and `x` on `z`. A zero residual vector gives
/// statistic 0 and sets the `degenerate` diagnostic.
pub fn t_def(ds: &Dataset, lambda_x: f64, lambda_y: f64) -> Result<TestResult> {
    if ds.n() < 2 {
        return Err(Error::Invalid("need at least 2 observations".into()));
    }
    let z = scaled_controls(ds.z())?;
    t_def_scaled(ds.y(), ds.x(), &z, lambda_x, lambda_y).map(|(r, _)| r)
}

/// Fits behind the debiased Lasso statistic.
#[derive(Debug, Clone)]
pub struct DbFits {
    /// Square-root Lasso of `y` on `[x | z]` with `x` unpenalised.
    pub augmented: LassoFit,
    pub x: LassoFit,
    pub theta_hat: f64,
}

impl DbFits {
    /// Y − Zβ̂^Y
    pub fn partial_residual(&self, x: &[f64]) -> Vec<f64> {
        self.augmented
            .residuals
            .iter()
            .zip(x)
            .map(|(r, xi)| r + self.theta_hat * xi)
            .collect()
    }

    /// One-step estimate Rᵀ(Y − Zβ̂^Y)/RᵀX and its standard error σ̂‖R‖/|RᵀX|.
    pub fn debiased(&self, x: &[f64]) -> Option<(f64, f64)> {
        let r = &self.x.residuals;
        let rx = dot(r, x);
        if rx == 0.0 {
            return None;
        }
        let est = dot(r, &self.partial_residual(x)) / rx;
        let sigma = norm2(&self.augmented.residuals) / (x.len() as f64).sqrt();
        Some((est, sigma * norm2(r) / rx.abs()))
    }
}

pub fn db_fits_scaled(y: &[f64], x: &[f64], z_scaled: &Matrix, lambda_x: f64, lambda_y: f64) -> Result<DbFits> {
    let design = prepend_column(x, z_scaled);
    let mut factors = vec![1.0; design.ncols()];
    factors[0] = 0.0;
    let augmented = solve_sqrt_lasso_weighted(y, &design, lambda_y, &factors, None)?;
    let x_fit = solve_sqrt_lasso(x, z_scaled, lambda_x, None)?;
    Ok(DbFits {
        theta_hat: augmented.coefficients[0],
        augmented,
        x: x_fit,
    })
}

/// Debiased Lasso statistic: numerator (Y − Zβ̂^Y)ᵀR and denominator
/// ‖Y − θ̂X − Zβ̂^Y‖‖R‖, with (θ̂, β̂^Y) from the square-root Lasso of `y` on
/// `(x, z)` leaving `x` unpenalised and `R` the residual of `x` on `z`.
pub fn t_db(ds: &Dataset, lambda_x: f64, lambda_y: f64) -> Result<TestResult> {
    if ds.n() < 2 {
        return Err(Error::Invalid("need at least 2 observations".into()));
    }
    let z = scaled_controls(ds.z())?;
    let fits = db_fits_scaled(ds.y(), ds.x(), &z, lambda_x, lambda_y)?;
    Ok(db_result(&fits, ds.x()))
}

pub fn db_result(fits: &DbFits, x: &[f64]) -> TestResult {
    let num = dot(&fits.partial_residual(x), &fits.x.residuals);
    let den = norm2(&fits.augmented.residuals) * norm2(&fits.x.residuals);
    let n = x.len() as f64;
    let (stat, degenerate) = if den == 0.0 {
        (0.0, true)
    } else {
        (n.sqrt() * num / den, false)
    };
    let r = TestResult::normal(Method::TDb, stat)
        .with("degenerate", degenerate as u8 as f64)
        .with("theta_hat", fits.theta_hat);
    let r = match fits.debiased(x) {
        Some((est, se)) => r.with("theta_debiased", est).with("theta_debiased_se", se),
        None => r,
    };
    let r = lasso_diagnostics(r, "y", &fits.augmented);
    lasso_diagnostics(r, "x", &fits.x)
}

/// Diagonal observation weights for the heteroscedastic statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSpec {
    d_y: Vec<f64>,
    d_x: Vec<f64>,
}

impl WeightSpec {
    pub fn new(d_y: Vec<f64>, d_x: Vec<f64>) -> Result<Self> {
        if d_y.len() != d_x.len() {
            return Err(Error::Invalid("weight vectors differ in length".into()));
        }
        for (name, d) in [("d_y", &d_y), ("d_x", &d_x)] {
            if let Some(i) = d.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::Invalid(format!(
                    "{name}[{i}] = {} is not a positive finite weight",
                    d[i]
                )));
            }
        }
        Ok(Self { d_y, d_x })
    }

    pub fn unit(n: usize) -> Self {
        Self {
            d_y: vec![1.0; n],
            d_x: vec![1.0; n],
        }
    }

    pub fn d_y(&self) -> &[f64] {
        &self.d_y
    }

    pub fn d_x(&self) -> &[f64] {
        &self.d_x
    }
}

/// Intermediate quantities of the heteroscedastic statistic.
#[derive(Debug, Clone)]
pub struct WDefParts {
    /// D^Y Z Λ^Y
    pub design_y: Matrix,
    /// D^X Z Λ^X
    pub design_x: Matrix,
    /// Diagonal of Λ^Y.
    pub scale_y: Vec<f64>,
    pub scale_x: Vec<f64>,
    pub first_y: LassoFit,
    pub first_x: LassoFit,
    /// Regression of D^Y Ỹ on [D^Y Z Λ^Y | D^X Z Λ^X]; coefficients are (β̃^Y, η̃^Y).
    pub orth_y: LassoFit,
    /// Regression of D^X X̃ on [D^X Z Λ^X | D^Y Z Λ^Y]; coefficients are (β̃^X, η̃^X).
    pub orth_x: LassoFit,
}

impl WDefParts {
    pub fn r_y(&self) -> &[f64] {
        &self.orth_y.residuals
    }

    pub fn r_x(&self) -> &[f64] {
        &self.orth_x.residuals
    }
}

fn check_lengths(y: &[f64], x: &[f64], z: &Matrix, n_w: usize) -> Result<()> {
    let n = z.nrows();
    if y.len() != n || x.len() != n || n_w != n {
        return Err(Error::Invalid(
            "y, x, weights and z must have the same number of rows".into(),
        ));
    }
    if n < 2 {
        return Err(Error::Invalid("need at least 2 observations".into()));
    }
    Ok(())
}

/// Runs the weighted first-stage fits and the two augmented orthogonalisation
/// regressions. R^Y and R^X are the full residuals of the latter.
pub fn w_def_parts(y: &[f64], x: &[f64], z: &Matrix, w: &WeightSpec, lambda: f64) -> Result<WDefParts> {
    check_lengths(y, x, z, w.d_y.len())?;
    let (design_y, scale_y) = standardize_columns(&scale_rows(z, &w.d_y))?;
    let (design_x, scale_x) = standardize_columns(&scale_rows(z, &w.d_x))?;
    let dy: Vec<f64> = y.iter().zip(&w.d_y).map(|(a, b)| a * b).collect();
    let dx: Vec<f64> = x.iter().zip(&w.d_x).map(|(a, b)| a * b).collect();
    let first_y = solve_sqrt_lasso(&dy, &design_y, lambda, None)?;
    let first_x = solve_sqrt_lasso(&dx, &design_x, lambda, None)?;
    // D^Y Ỹ is exactly the first-stage residual
    let orth_y = solve_sqrt_lasso(&first_y.residuals, &hstack(&design_y, &design_x), lambda, None)?;
    let orth_x = solve_sqrt_lasso(&first_x.residuals, &hstack(&design_x, &design_y), lambda, None)?;
    Ok(WDefParts {
        design_y,
        design_x,
        scale_y,
        scale_x,
        first_y,
        first_x,
        orth_y,
        orth_x,
    })
}

fn w_def_result(method: Method, parts: &WDefParts) -> TestResult {
    let (stat, degenerate) = match scaled_correlation(parts.r_x(), parts.r_y()) {
        Some(s) => (s, false),
        None => (0.0, true),
    };
    let r = TestResult::normal(method, stat).with("degenerate", degenerate as u8 as f64);
    let r = lasso_diagnostics(r, "y", &parts.first_y);
    let r = lasso_diagnostics(r, "x", &parts.first_x);
    let r = lasso_diagnostics(r, "orth_y", &parts.orth_y);
    lasso_diagnostics(r, "orth_x", &parts.orth_x)
}

/// Heteroscedastic statistic √n·(R^X)ᵀR^Y/(‖R^X‖‖R^Y‖) with known diagonal
/// weights and one penalty level shared by all four regressions.
pub fn t_w_def(y: &[f64], x: &[f64], z: &Matrix, w: &WeightSpec, lambda: f64) -> Result<TestResult> {
    let parts = w_def_parts(y, x, z, w, lambda)?;
    Ok(w_def_result(Method::TWDef, &parts))
}

const MAX_PGLM_ITER: usize = 100;

/// Certificate for `−(1/n)ℓ(β) + λ‖β‖₁`: max over inactive columns of
/// `|scoreⱼ|/n − λ` and over active columns of `|scoreⱼ/n − λ sign(βⱼ)|`.
pub fn penalized_kkt(fit: &GlmFit, response: &[f64], design: &Matrix, lambda: f64) -> f64 {
    let n = design.nrows() as f64;
    let u: Vec<f64> = fit
        .eta
        .iter()
        .zip(response)
        .map(|(&e, &y)| fit.family.score(e, y))
        .collect();
    let mut worst = f64::NEG_INFINITY;
    for (j, b) in fit.coefficients.iter().enumerate() {
        let g = dot(col(design, j), &u) / n;
        let v = if *b == 0.0 {
            g.abs() - lambda
        } else {
            (g - lambda * b.signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}

fn penalized_objective(family: GlmFamily, eta: &[f64], y: &[f64], b: &[f64], lambda: f64) -> f64 {
    let n = y.len() as f64;
    -eta.iter().zip(y).map(|(&e, &v)| family.log_lik(e, v)).sum::<f64>() / n + lambda * crate::linalg::l1(b)
}

/// ℓ₁-penalised GLM `−(1/n)ℓ(β) + λ‖β‖₁` by proximal Newton: each step solves
/// the weighted least-squares Lasso of the IRLS working response, followed by
/// step halving on the penalised objective.
pub fn fit_penalized_glm(response: &[f64], design: &Matrix, family: GlmFamily, lambda: f64) -> Result<GlmFit> {
    let (n_rows, p) = design.shape();
    if response.len() != n_rows {
        return Err(Error::Invalid("response length does not match design rows".into()));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Invalid(format!("lambda must be positive, got {lambda}")));
    }
    family.check_support(response)?;
    let mut b = vec![0.0; p];
    let mut eta = vec![0.0; n_rows];
    let mut obj = penalized_objective(family, &eta, response, &b, lambda);
    let mut trace = vec![-obj];
    for iter in 0..MAX_PGLM_ITER {
        let w: Vec<f64> = eta
            .iter()
            .zip(response)
            .map(|(&e, &y)| -family.score_derivative(e, y))
            .collect();
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularHessian);
        }
        let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
        // working response relative to the current fit: z = η + U/w
        let work: Vec<f64> = (0..n_rows)
            .map(|i| {
                let u = family.score(eta[i], response[i]);
                if sw[i] > 0.0 {
                    sw[i] * eta[i] + u / sw[i]
                } else {
                    0.0
                }
            })
            .collect();
        let wd = scale_rows(design, &sw);
        let (target, _) = solve_lasso(&work, &wd, lambda, None, Some(&b))?;
        let dir: Vec<f64> = target.iter().zip(&b).map(|(t, c)| t - c).collect();
        let step_norm = dir.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=crate::glm::MAX_HALVINGS {
            let cand: Vec<f64> = b.iter().zip(&dir).map(|(c, d)| c + scale * d).collect();
            let cand_eta = mat_vec_sparse(design, &cand);
            let cand_obj = penalized_objective(family, &cand_eta, response, &cand, lambda);
            if cand_obj.is_finite() && cand_obj <= obj + 1e-13 * obj.abs().max(1.0) {
                b = cand;
                eta = cand_eta;
                obj = cand_obj.min(obj);
                trace.push(-obj);
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        let b_inf = b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if family == GlmFamily::BinomialLogit && b_inf > crate::glm::SEPARATION_BOUND {
            return Err(Error::Separation(b_inf));
        }
        if step_norm <= 1e-10 * (1.0 + b_inf) || !accepted {
            let mut fit = GlmFit {
                coefficients: b,
                eta,
                family,
                score_norm: 0.0,
                iterations: iter + 1,
                converged: true,
                log_lik: -obj * n_rows as f64,
                log_lik_trace: trace,
                clamped: 0,
            };
            fit.clamped = fit.eta.iter().filter(|&&e| family.clamps(e)).count();
            fit.score_norm = penalized_kkt(&fit, response, design, lambda).max(0.0);
            if !accepted && fit.score_norm > 1e-6 {
                break;
            }
            return Ok(fit);
        }
    }
    Err(Error::NoConvergence {
        what: "penalised IRLS",
        iterations: MAX_PGLM_ITER,
    })
}

/// Penalty level for the penalised GLM fits: the square-root Lasso level times
/// the sample standard deviation of the response, which puts it on the scale
/// of the score `Σᵢ zᵢ(yᵢ − μᵢ)/n`.
pub fn glm_lambda(lambda: f64, response: &[f64]) -> f64 {
    let n = response.len() as f64;
    let mean = response.iter().sum::<f64>() / n;
    let sd = (response.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    lambda * sd.max(f64::MIN_POSITIVE)
}

/// Adjusted response (Y − μ)/μ′ and weights μ′/√V(μ) at a fitted predictor.
pub fn adjusted_response(family: GlmFamily, response: &[f64], eta: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut adj = Vec::with_capacity(response.len());
    let mut d = Vec::with_capacity(response.len());
    for (i, (&y, &e)) in response.iter().zip(eta).enumerate() {
        let mu = family.mean(e);
        let dmu = family.mean_derivative(e);
        if dmu.abs() < 1e-10 {
            return Err(Error::MeanDerivativeUnderflow(i));
        }
        adj.push((y - mu) / dmu);
        d.push(dmu / family.variance(mu).sqrt());
    }
    Ok((adj, d))
}

/// Generalised-linear DEF statistic: penalised GLM fits of `y` and `x` on the
/// scaled `z`, then the heteroscedastic statistic on the adjusted responses
/// with weights μ′/√V. `lambda` is the square-root Lasso level; the GLM fits
/// use [`glm_lambda`].
pub fn t_glm_def(ds: &Dataset, family_y: GlmFamily, family_x: GlmFamily, lambda: f64) -> Result<TestResult> {
    let z = scaled_controls(ds.z())?;
    let fit_y = fit_penalized_glm(ds.y(), &z, family_y, glm_lambda(lambda, ds.y()))?;
    let fit_x = fit_penalized_glm(ds.x(), &z, family_x, glm_lambda(lambda, ds.x()))?;
    let (adj_y, d_y) = adjusted_response(family_y, ds.y(), &fit_y.eta)?;
    let (adj_x, d_x) = adjusted_response(family_x, ds.x(), &fit_x.eta)?;
    let w = WeightSpec::new(d_y, d_x)?;
    let parts = w_def_parts(&adj_y, &adj_x, ds.z(), &w, lambda)?;
    let dev = |fit: &GlmFit, fam: GlmFamily, y: &[f64]| {
        2.0 * y
            .iter()
            .zip(&fit.eta)
            .map(|(&v, &e)| saturated_log_lik(fam, v) - fam.log_lik(e, v))
            .sum::<f64>()
    };
    Ok(w_def_result(Method::TGlmDef, &parts)
        .with("deviance_y", dev(&fit_y, family_y, ds.y()))
        .with("deviance_x", dev(&fit_x, family_x, ds.x()))
        .with("glm_iterations_y", fit_y.iterations as f64)
        .with("glm_iterations_x", fit_x.iterations as f64)
        .with("glm_kkt_y", fit_y.score_norm)
        .with("glm_kkt_x", fit_x.score_norm))
}

fn saturated_log_lik(family: GlmFamily, y: f64) -> f64 {
    match family {
        GlmFamily::GaussianIdentity => -0.0,
        GlmFamily::BinomialLogit => 0.0,
        GlmFamily::PoissonLog => {
            if y > 0.0 {
                y * y.ln() - y
            } else {
                0.0
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lasso::default_lambda;
    use crate::rng::SimRng;

    fn sparse_data(seed: u64, n: usize, p: usize) -> Dataset {
        let mut rng = SimRng::new(seed);
        let z = Matrix::from_fn(n, p, |_, _| rng.normal());
        let x: Vec<f64> = (0..n).map(|i| z[(i, 0)] - 0.5 * z[(i, 1)] + rng.normal()).collect();
        let y: Vec<f64> = (0..n).map(|i| 0.8 * z[(i, 2)] + z[(i, 0)] + rng.normal()).collect();
        Dataset::new(y, x, z).unwrap()
    }

    #[test]
    fn zero_residual_gives_zero_statistic() {
        let ds = sparse_data(1, 30, 40);
        let y: Vec<f64> = ds.z().column(0).iter().map(|v| 3.0 * v).collect();
        let ds = ds.with_response(y).unwrap();
        let r = t_def(&ds, 0.3, 0.01).unwrap();
        if r.degenerate() {
            assert_eq!(r.statistic, 0.0);
        }
        assert!(r.statistic.abs() <= 30f64.sqrt());
    }

    #[test]
    fn symmetric_in_x_and_y() {
        let ds = sparse_data(2, 60, 80);
        let l = default_lambda(60, 80, 1.05).unwrap();
        let a = t_def(&ds, l, l).unwrap();
        let b = t_def(&ds.swapped(), l, l).unwrap();
        assert!((a.statistic - b.statistic).abs() < 1e-10);
    }

    #[test]
    fn scale_and_sign_invariance() {
        let ds = sparse_data(3, 50, 70);
        let base = t_def(&ds, 0.4, 0.4).unwrap().statistic;
        let y2: Vec<f64> = ds.y().iter().map(|v| 12.5 * v).collect();
        let scaled = t_def(&ds.with_response(y2).unwrap(), 0.4, 0.4).unwrap().statistic;
        assert!((base - scaled).abs() < 1e-8);
        let neg: Vec<f64> = ds.y().iter().map(|v| -v).collect();
        let flipped = t_def(&ds.with_response(neg).unwrap(), 0.4, 0.4).unwrap().statistic;
        assert!((base + flipped).abs() < 1e-9);
    }

    #[test]
    fn db_with_huge_penalty_is_marginal() {
        let ds = sparse_data(4, 40, 30);
        let r = t_db(&ds, 100.0, 100.0).unwrap();
        let (x, y) = (ds.x(), ds.y());
        let theta = dot(x, y) / dot(x, x);
        let resid: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - theta * b).collect();
        let expect = 40f64.sqrt() * dot(x, y) / (norm2(&resid) * norm2(x));
        assert!((r.statistic - expect).abs() < 1e-8, "{} {expect}", r.statistic);
        assert!((r.diag("theta_hat").unwrap() - theta).abs() < 1e-8);
    }

    #[test]
    fn db_statistic_is_debiased_ratio() {
        let ds = sparse_data(5, 60, 50);
        let r = t_db(&ds, 0.4, 0.4).unwrap();
        let ratio = r.diag("theta_debiased").unwrap() / r.diag("theta_debiased_se").unwrap();
        assert!((ratio - r.statistic).abs() < 1e-9);
    }

    #[test]
    fn unit_weight_statistic_is_close_to_def() {
        let ds = sparse_data(6, 100, 60);
        let l = default_lambda(100, 60, 1.05).unwrap();
        let a = t_def(&ds, l, l).unwrap().statistic;
        let b = t_w_def(ds.y(), ds.x(), ds.z(), &WeightSpec::unit(100), l)
            .unwrap()
            .statistic;
        assert!((a - b).abs() < 0.2, "{a} {b}");
    }

    #[test]
    fn orthogonalised_residuals_satisfy_both_kkt_families() {
        let ds = sparse_data(7, 80, 40);
        let mut rng = SimRng::new(70);
        let w = WeightSpec::new(
            (0..80).map(|_| 0.5 + rng.uniform()).collect(),
            (0..80).map(|_| 0.5 + rng.uniform()).collect(),
        )
        .unwrap();
        let parts = w_def_parts(ds.y(), ds.x(), ds.z(), &w, 0.3).unwrap();
        for (r, a, b) in [
            (parts.r_x(), &parts.design_x, &parts.design_y),
            (parts.r_y(), &parts.design_y, &parts.design_x),
        ] {
            let s = 80f64.sqrt() * norm2(r);
            for j in 0..40 {
                assert!(dot(col(a, j), r).abs() / s <= 0.3 * (1.0 + 1e-6) + 1e-9);
                assert!(dot(col(b, j), r).abs() / s <= 0.3 * (1.0 + 1e-6) + 1e-9);
            }
        }
    }

    #[test]
    fn rejects_nonpositive_weights() {
        assert!(WeightSpec::new(vec![1.0, 0.0], vec![1.0, 1.0])
            .unwrap_err()
            .is_validation());
    }

    #[test]
    fn penalized_glm_zero_above_max_score() {
        let ds = sparse_data(8, 50, 20);
        let z = scaled_controls(ds.z()).unwrap();
        let y: Vec<f64> = ds.y().iter().map(|v| (*v > 0.0) as u8 as f64).collect();
        let fit = fit_penalized_glm(&y, &z, GlmFamily::BinomialLogit, 10.0).unwrap();
        assert!(fit.coefficients.iter().all(|b| *b == 0.0));
    }

    #[test]
    fn penalized_gaussian_is_lasso() {
        let ds = sparse_data(9, 60, 30);
        let z = scaled_controls(ds.z()).unwrap();
        let fit = fit_penalized_glm(ds.y(), &z, GlmFamily::GaussianIdentity, 0.1).unwrap();
        let (b, _) = solve_lasso(ds.y(), &z, 0.1, None, None).unwrap();
        for (u, v) in fit.coefficients.iter().zip(&b) {
            assert!((u - v).abs() < 1e-7);
        }
    }

    #[test]
    fn penalized_logistic_kkt() {
        let mut rng = SimRng::new(10);
        let z = scaled_controls(&Matrix::from_fn(50, 20, |_, _| rng.normal())).unwrap();
        let y: Vec<f64> = (0..50)
            .map(|i| rng.bernoulli(crate::family::logistic(z[(i, 0)] - z[(i, 1)])) as u8 as f64)
            .collect();
        let fit = fit_penalized_glm(&y, &z, GlmFamily::BinomialLogit, 0.05).unwrap();
        assert!(penalized_kkt(&fit, &y, &z, 0.05) <= 1e-6);
        assert!(fit.coefficients.iter().any(|b| *b != 0.0));
    }

    #[test]
    fn glm_def_gaussian_reduces_to_weighted_def() {
        let ds = sparse_data(11, 70, 30);
        let l = 0.35;
        let r = t_glm_def(&ds, GlmFamily::GaussianIdentity, GlmFamily::GaussianIdentity, l).unwrap();
        let z = scaled_controls(ds.z()).unwrap();
        let fy = fit_penalized_glm(ds.y(), &z, GlmFamily::GaussianIdentity, glm_lambda(l, ds.y())).unwrap();
        let fx = fit_penalized_glm(ds.x(), &z, GlmFamily::GaussianIdentity, glm_lambda(l, ds.x())).unwrap();
        let ry: Vec<f64> = ds.y().iter().zip(&fy.eta).map(|(a, b)| a - b).collect();
        let rx: Vec<f64> = ds.x().iter().zip(&fx.eta).map(|(a, b)| a - b).collect();
        let w = t_w_def(&ry, &rx, ds.z(), &WeightSpec::unit(70), l).unwrap();
        assert_eq!(r.statistic.to_bits(), w.statistic.to_bits());
    }
}
