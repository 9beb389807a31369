//! Square-root Lasso.
//!
//! Minimises `‖y − Xb‖₂/√n + λ Σⱼ fⱼ|bⱼ|` by alternating coordinate descent on
//! the ordinary Lasso with penalty `λσ̂` and the update `σ̂ = ‖y − Xb‖₂/√n`.
//! Both problems share their stationarity conditions at the fixed point, so
//! the result is certified against the square-root KKT conditions directly.

use crate::error::{Error, Result};
use crate::linalg::{axpy, col, dot, hstack, l1, mat_vec_sparse, norm2, Matrix};
use crate::stats::normal_quantile;

pub const MAX_OUTER: usize = 500;
const MAX_SWEEPS: usize = 100_000;
const SIGMA_RTOL: f64 = 1e-10;
const COEF_TOL: f64 = 1e-10;
const FULL_SWEEP_EVERY: usize = 10;
pub const KKT_TOL: f64 = 1e-6;

/// `A √(2 ln p / n)`.
pub fn default_lambda(n: usize, p: usize, a: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Invalid("n must be positive".into()));
    }
    if p < 2 {
        return Err(Error::Invalid(format!(
            "p = {p}: need at least 2 columns for the default penalty"
        )));
    }
    if !(a > 1.0) || !a.is_finite() {
        return Err(Error::Invalid(format!("penalty multiplier must exceed 1, got {a}")));
    }
    Ok(a * (2.0 * (p as f64).ln() / n as f64).sqrt())
}

/// Quantile-based level `√(2/n)·L` where `L` solves `L = −Φ⁻¹(min((L⁴ + 2L²)/p, 0.99))`
/// by damped fixed-point iteration.
pub fn quantile_lambda(n: usize, p: usize) -> Result<f64> {
    if n == 0 || p == 0 {
        return Err(Error::Invalid("n and p must be positive".into()));
    }
    let mut l = 0.1f64;
    if p == 1 {
        l = 0.5;
    } else {
        let mut old = 0.0f64;
        let mut guard = 0;
        while (l - old).abs() > 1e-3 {
            let k = l.powi(4) + 2.0 * l * l;
            old = l;
            l = -normal_quantile((k / p as f64).min(0.99));
            l = 0.5 * (l + old);
            guard += 1;
            if guard > 10_000 {
                return Err(Error::NoConvergence {
                    what: "quantile penalty level",
                    iterations: guard,
                });
            }
        }
    }
    Ok((2.0 / n as f64).sqrt() * l)
}

/// How the penalty level is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaRule {
    /// `A √(2 ln p / n)`
    Universal {
        a: f64,
    },
    Quantile,
    Fixed(f64),
}

impl Default for LambdaRule {
    fn default() -> Self {
        LambdaRule::Universal { a: 1.05 }
    }
}

impl LambdaRule {
    pub fn lambda(&self, n: usize, p: usize) -> Result<f64> {
        match *self {
            LambdaRule::Universal { a } => default_lambda(n, p, a),
            LambdaRule::Quantile => quantile_lambda(n, p),
            LambdaRule::Fixed(l) if l > 0.0 && l.is_finite() => Ok(l),
            LambdaRule::Fixed(l) => Err(Error::Invalid(format!("lambda must be positive, got {l}"))),
        }
    }

    /// Numeric code recorded in diagnostics.
    pub fn code(&self) -> f64 {
        match self {
            LambdaRule::Universal { .. } => 0.0,
            LambdaRule::Quantile => 1.0,
            LambdaRule::Fixed(_) => 2.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LassoFit {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub sigma_hat: f64,
    pub lambda: f64,
    /// Per-column penalty multipliers (0 leaves a column unpenalised).
    pub penalty_factors: Vec<f64>,
    pub kkt_slack: f64,
    /// Total coordinate-descent sweeps.
    pub iterations: usize,
    pub degenerate: bool,
}

impl LassoFit {
    pub fn objective(&self) -> f64 {
        let n = self.residuals.len() as f64;
        norm2(&self.residuals) / n.sqrt() + self.lambda * weighted_l1(&self.coefficients, &self.penalty_factors)
    }

    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, _)| j)
    }
}

fn weighted_l1(b: &[f64], f: &[f64]) -> f64 {
    b.iter().zip(f).map(|(b, f)| f * b.abs()).sum()
}

/// Square-root Lasso objective at an arbitrary coefficient vector.
pub fn objective(response: &[f64], design: &Matrix, lambda: f64, coefficients: &[f64]) -> f64 {
    let fitted = mat_vec_sparse(design, coefficients);
    let r: Vec<f64> = response.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    norm2(&r) / (response.len() as f64).sqrt() + lambda * l1(coefficients)
}

#[inline]
fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Coordinate descent for `(1/2n)‖r‖² + Σⱼ penⱼ|bⱼ|`, updating `b` and the
/// residual `r = y − Xb` in place. `colsq[j] = ‖xⱼ‖²/n`. Returns sweeps used.
fn coordinate_descent(
    design: &Matrix,
    colsq: &[f64],
    pen: &[f64],
    b: &mut [f64],
    r: &mut [f64],
    tol: f64,
) -> Result<usize> {
    let n = design.nrows() as f64;
    let p = design.ncols();
    let mut sweeps = 0;
    let mut active_only = false;
    let mut since_full = 0;
    loop {
        let mut max_change = 0.0f64;
        for j in 0..p {
            if colsq[j] == 0.0 || (active_only && b[j] == 0.0) {
                continue;
            }
            let xj = col(design, j);
            let old = b[j];
            let z = dot(xj, r) / n + colsq[j] * old;
            let new = soft(z, pen[j]) / colsq[j];
            if new != old {
                axpy(old - new, xj, r);
                b[j] = new;
                max_change = max_change.max((new - old).abs() * colsq[j].sqrt());
            }
        }
        sweeps += 1;
        if sweeps > MAX_SWEEPS {
            return Err(Error::NoConvergence {
                what: "coordinate descent",
                iterations: sweeps,
            });
        }
        if active_only {
            since_full += 1;
            if max_change < tol || since_full >= FULL_SWEEP_EVERY {
                active_only = false;
            }
        } else if max_change < tol {
            return Ok(sweeps);
        } else {
            active_only = true;
            since_full = 0;
        }
    }
}

fn validate(response: &[f64], design: &Matrix, lambda: f64, factors: &[f64]) -> Result<()> {
    if response.len() != design.nrows() {
        return Err(Error::Invalid("response length does not match design rows".into()));
    }
    if response.is_empty() {
        return Err(Error::Invalid("empty response".into()));
    }
    if !response.iter().all(|v| v.is_finite()) || !design.iter().all(|v| v.is_finite()) {
        return Err(Error::Invalid("non-finite value in lasso input".into()));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Invalid(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    if factors.len() != design.ncols() || !factors.iter().all(|f| *f >= 0.0 && f.is_finite()) {
        return Err(Error::Invalid(
            "penalty factors must be nonnegative, one per column".into(),
        ));
    }
    Ok(())
}

/// Ordinary Lasso `(1/2n)‖y − Xb‖² + penalty Σⱼ fⱼ|bⱼ|` by coordinate descent.
pub fn solve_lasso(
    response: &[f64],
    design: &Matrix,
    penalty: f64,
    factors: Option<&[f64]>,
    warm_start: Option<&[f64]>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = design.ncols();
    let ones = vec![1.0; p];
    let f = factors.unwrap_or(&ones);
    validate(response, design, penalty.max(f64::MIN_POSITIVE), f)?;
    let n = design.nrows() as f64;
    let colsq: Vec<f64> = (0..p).map(|j| dot(col(design, j), col(design, j)) / n).collect();
    let mut b = start(warm_start, &colsq, p)?;
    let fitted = mat_vec_sparse(design, &b);
    let mut r: Vec<f64> = response.iter().zip(&fitted).map(|(y, v)| y - v).collect();
    let pen: Vec<f64> = f.iter().map(|fj| fj * penalty).collect();
    let tol = COEF_TOL * (norm2(response) / n.sqrt()).max(f64::MIN_POSITIVE);
    coordinate_descent(design, &colsq, &pen, &mut b, &mut r, tol)?;
    Ok((b, r))
}

fn start(warm: Option<&[f64]>, colsq: &[f64], p: usize) -> Result<Vec<f64>> {
    match warm {
        Some(w) if w.len() == p => Ok(w
            .iter()
            .zip(colsq)
            .map(|(b, c)| if *c == 0.0 { 0.0 } else { *b })
            .collect()),
        Some(w) => Err(Error::Invalid(format!(
            "warm start has length {}, expected {p}",
            w.len()
        ))),
        None => Ok(vec![0.0; p]),
    }
}

/// Square-root Lasso with unit penalty factors.
pub fn solve_sqrt_lasso(
    response: &[f64],
    design: &Matrix,
    lambda: f64,
    warm_start: Option<&[f64]>,
) -> Result<LassoFit> {
    solve_sqrt_lasso_weighted(response, design, lambda, &vec![1.0; design.ncols()], warm_start)
}

/// Square-root Lasso with per-column penalty factors.
pub fn solve_sqrt_lasso_weighted(
    response: &[f64],
    design: &Matrix,
    lambda: f64,
    factors: &[f64],
    warm_start: Option<&[f64]>,
) -> Result<LassoFit> {
    validate(response, design, lambda, factors)?;
    let (n_rows, p) = design.shape();
    let n = n_rows as f64;
    let y_scale = norm2(response) / n.sqrt();
    let floor = 1e-12 * y_scale;
    let colsq: Vec<f64> = (0..p).map(|j| dot(col(design, j), col(design, j)) / n).collect();

    let mut b = start(warm_start, &colsq, p)?;
    let fitted = mat_vec_sparse(design, &b);
    let mut r: Vec<f64> = response.iter().zip(&fitted).map(|(y, v)| y - v).collect();
    let mut sigma = norm2(&r) / n.sqrt();
    if warm_start.is_some() && sigma <= floor {
        // a perfect-fit warm start gives no usable penalty level
        b.iter_mut().for_each(|v| *v = 0.0);
        r.copy_from_slice(response);
        sigma = y_scale;
    }
    let tol = COEF_TOL * y_scale.max(f64::MIN_POSITIVE);
    let mut sweeps = 0;
    let mut pen = vec![0.0; p];

    let finish = |b: Vec<f64>, r: Vec<f64>, sigma: f64, sweeps: usize, degenerate: bool| {
        let mut fit = LassoFit {
            coefficients: b,
            residuals: r,
            sigma_hat: sigma,
            lambda,
            penalty_factors: factors.to_vec(),
            kkt_slack: f64::NAN,
            iterations: sweeps,
            degenerate,
        };
        if !degenerate {
            fit.kkt_slack = kkt_certificate(&fit, design).unwrap_or(f64::NAN);
        }
        fit
    };

    for _ in 0..MAX_OUTER {
        if sigma <= floor {
            return Ok(finish(b, r, sigma, sweeps, true));
        }
        for (pj, fj) in pen.iter_mut().zip(factors) {
            *pj = lambda * sigma * fj;
        }
        sweeps += coordinate_descent(design, &colsq, &pen, &mut b, &mut r, tol)?;
        let next = norm2(&r) / n.sqrt();
        let change = (next - sigma).abs();
        sigma = next;
        if change <= SIGMA_RTOL * sigma {
            let degenerate = sigma <= floor;
            return Ok(finish(b, r, sigma, sweeps, degenerate));
        }
    }
    Err(Error::NoConvergence {
        what: "square-root lasso",
        iterations: MAX_OUTER,
    })
}

/// Square-root Lasso on `[a | b]` with all coefficients penalised.
pub fn solve_augmented(response: &[f64], design_a: &Matrix, design_b: &Matrix, lambda: f64) -> Result<LassoFit> {
    if design_a.nrows() != design_b.nrows() {
        return Err(Error::Invalid(
            "augmented blocks must have the same number of rows".into(),
        ));
    }
    solve_sqrt_lasso(response, &hstack(design_a, design_b), lambda, None)
}

/// Largest violation of the square-root Lasso stationarity conditions.
///
/// With `gⱼ = xⱼᵀr/(√n‖r‖₂)`: inactive columns contribute `|gⱼ| − λfⱼ`, active
/// columns `|gⱼ − λfⱼ sign(bⱼ)|`.
pub fn kkt_certificate(fit: &LassoFit, design: &Matrix) -> Result<f64> {
    let rn = norm2(&fit.residuals);
    if fit.degenerate || rn == 0.0 {
        return Err(Error::DegenerateFit);
    }
    let scale = (design.nrows() as f64).sqrt() * rn;
    let mut worst = f64::NEG_INFINITY;
    for j in 0..design.ncols() {
        let g = dot(col(design, j), &fit.residuals) / scale;
        let bound = fit.lambda * fit.penalty_factors[j];
        let b = fit.coefficients[j];
        let v = if b == 0.0 {
            g.abs() - bound
        } else {
            (g - bound * b.signum()).abs()
        };
        worst = worst.max(v);
    }
    Ok(if design.ncols() == 0 { 0.0 } else { worst })
}
