//! Confidence regions by inverting DEF-type statistics.
//!
//! For the exposure coefficient the region is `{t : |T_DEF(y − t·x, x)| ≤ z}`;
//! for a contrast `wᵀβ` it is the analogous set built on the reparametrised
//! design `Z(I − P)`. Endpoints are found by bracketing and bisection, with
//! every square-root Lasso solve warm-started from the closest `t` already
//! evaluated.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::highdim::{db_fits_scaled, scaled_controls, scaled_correlation};
use crate::lasso::{solve_sqrt_lasso, solve_sqrt_lasso_weighted, LassoFit};
use crate::linalg::{col, dot, norm2, Matrix, Vector};
use crate::ols::fit_ols;
use crate::result::{Method, TestResult};
use crate::stats::two_sided_critical;

pub const MAX_DOUBLINGS: usize = 60;
const STAT_TOL: f64 = 1e-4;
const WIDTH_RTOL: f64 = 1e-4;
const SCAN_POINTS: usize = 17;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
    /// Statistic evaluations used, including the connectivity scan.
    pub evaluations: usize,
    pub bracket_expansions: usize,
    pub disconnected_flag: bool,
    /// Point of smallest |T| found while bracketing.
    pub t_star: f64,
}

impl Interval {
    pub fn contains(&self, t: f64) -> bool {
        self.lower <= t && t <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `T(y − t·x, x)` for a fixed control design, with the fit of `x` cached and
/// the fits of the shifted response warm-started.
#[derive(Debug, Clone)]
pub struct ShiftedDef {
    y: Vec<f64>,
    x: Vec<f64>,
    design: Matrix,
    factors: Vec<f64>,
    lambda_y: f64,
    x_fit: LassoFit,
    cache: Vec<(f64, Vec<f64>)>,
    evaluations: usize,
    warm: bool,
}

impl ShiftedDef {
    fn build(
        y: Vec<f64>,
        x: Vec<f64>,
        design: Matrix,
        factors: Vec<f64>,
        lambda_x: f64,
        lambda_y: f64,
    ) -> Result<Self> {
        let x_fit = solve_sqrt_lasso_weighted(&x, &design, lambda_x, &factors, None)?;
        if x_fit.degenerate {
            return Err(Error::DegenerateResidual("exposure"));
        }
        Ok(Self {
            y,
            x,
            design,
            factors,
            lambda_y,
            x_fit,
            cache: Vec::new(),
            evaluations: 0,
            warm: true,
        })
    }

    /// Exposure coefficient of `ds` with controls scaled to unit mean square.
    pub fn for_dataset(ds: &Dataset, lambda_x: f64, lambda_y: f64) -> Result<Self> {
        let z = scaled_controls(ds.z())?;
        let p = z.ncols();
        Self::build(ds.y().to_vec(), ds.x().to_vec(), z, vec![1.0; p], lambda_x, lambda_y)
    }

    /// Contrast `wᵀβ` in the linear model for `y` on `z`. The exposure becomes
    /// `Zw/‖w‖²` and the controls `Z(I − wwᵀ/‖w‖²)`; each control column is
    /// penalised in proportion to its root mean square so the fit matches one
    /// on scaled columns.
    pub fn for_contrast(y: &[f64], z: &Matrix, w: &[f64], lambda: f64) -> Result<Self> {
        let (n, p) = z.shape();
        if y.len() != n {
            return Err(Error::Invalid("response length does not match design rows".into()));
        }
        if w.len() != p {
            return Err(Error::Invalid(format!("contrast has length {}, expected {p}", w.len())));
        }
        if !w.iter().all(|v| v.is_finite()) {
            return Err(Error::Invalid("contrast has non-finite entries".into()));
        }
        let ww = dot(w, w);
        if ww == 0.0 {
            return Err(Error::Invalid("contrast vector is zero".into()));
        }
        let zw = z * Vector::from_column_slice(w);
        let v: Vec<f64> = zw.iter().map(|a| a / ww).collect();
        let mut design = z.clone();
        for j in 0..p {
            if w[j] != 0.0 {
                let c = w[j];
                for (m, vi) in design.column_mut(j).iter_mut().zip(&v) {
                    *m -= vi * c;
                }
            }
        }
        let nf = n as f64;
        let factors: Vec<f64> = (0..p).map(|j| norm2(col(&design, j)) / nf.sqrt()).collect();
        Self::build(y.to_vec(), v, design, factors, lambda, lambda)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn set_warm_start(&mut self, on: bool) {
        self.warm = on;
    }

    pub fn x_fit(&self) -> &LassoFit {
        &self.x_fit
    }

    pub fn exposure(&self) -> &[f64] {
        &self.x
    }

    pub fn shifted_response(&self, t: f64) -> Vec<f64> {
        self.y.iter().zip(&self.x).map(|(y, x)| y - t * x).collect()
    }

    fn nearest(&self, t: f64) -> Option<&[f64]> {
        self.cache
            .iter()
            .min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))
            .map(|(_, c)| c.as_slice())
    }

    /// Square-root Lasso fit of the shifted response.
    pub fn fit_at(&mut self, t: f64) -> Result<LassoFit> {
        let yt = self.shifted_response(t);
        let warm = if self.warm {
            self.nearest(t).map(|c| c.to_vec())
        } else {
            None
        };
        let fit = solve_sqrt_lasso_weighted(&yt, &self.design, self.lambda_y, &self.factors, warm.as_deref())?;
        self.evaluations += 1;
        if self.warm {
            self.cache.push((t, fit.coefficients.clone()));
        }
        Ok(fit)
    }

    /// Statistic and fit at `t`; zero (with the degenerate flag) when a residual vanishes.
    pub fn evaluate(&mut self, t: f64) -> Result<(f64, bool, LassoFit)> {
        let fit = self.fit_at(t)?;
        Ok(match scaled_correlation(&fit.residuals, &self.x_fit.residuals) {
            Some(s) => (s, false, fit),
            None => (0.0, true, fit),
        })
    }

    pub fn statistic(&mut self, t: f64) -> Result<f64> {
        self.evaluate(t).map(|(s, _, _)| s)
    }

    /// Starting point: least squares of `y` on `x` and the `min(p, n/4)`
    /// controls most correlated with `x`; zero if that fit is unavailable.
    pub fn initial_estimate(&self) -> f64 {
        let (n, p) = self.design.shape();
        let k = p.min(n / 4);
        let nx = norm2(&self.x);
        let mut scored: Vec<(usize, f64)> = (0..p)
            .map(|j| {
                let c = col(&self.design, j);
                let nc = norm2(c);
                let s = if nc > 0.0 && nx > 0.0 {
                    (dot(c, &self.x) / (nc * nx)).abs()
                } else {
                    -1.0
                };
                (j, s)
            })
            .filter(|(_, s)| *s >= 0.0)
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut k = k.min(scored.len());
        while k > 0 && scored[k - 1].1 > 1.0 - 1e-8 {
            k -= 1;
        }
        let mut d = Matrix::zeros(n, k + 1);
        d.column_mut(0).copy_from_slice(&self.x);
        for (c, (j, _)) in scored.iter().take(k).enumerate() {
            d.column_mut(c + 1).copy_from_slice(col(&self.design, *j));
        }
        match fit_ols(&self.y, &d) {
            Ok(f) if f.coefficients[0].is_finite() => f.coefficients[0],
            _ => 0.0,
        }
    }
}

/// T_DEF evaluated at `y − t·x`. `warm` seeds the fit of the shifted response.
pub fn t_def_at(ds: &Dataset, t: f64, lambda_x: f64, lambda_y: f64, warm: Option<&[f64]>) -> Result<f64> {
    let z = scaled_controls(ds.z())?;
    let yt: Vec<f64> = ds.y().iter().zip(ds.x()).map(|(y, x)| y - t * x).collect();
    let fy = solve_sqrt_lasso(&yt, &z, lambda_y, warm)?;
    let fx = solve_sqrt_lasso(ds.x(), &z, lambda_x, None)?;
    Ok(scaled_correlation(&fy.residuals, &fx.residuals).unwrap_or(0.0))
}

/// Finds the acceptance interval `{t : |T(t)| ≤ z}` around the point of
/// smallest |T|.
pub fn invert(stat: &mut ShiftedDef, alpha: f64) -> Result<Interval> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let z = two_sided_critical(alpha);
    let t0 = stat.initial_estimate();
    let (s0, _, fit0) = stat.evaluate(t0)?;
    let sd_x = stat.x_fit().sigma_hat;
    let n = stat.n() as f64;
    let mut h0 = 4.0 * fit0.sigma_hat / (n.sqrt() * sd_x);
    if !(h0.is_finite() && h0 > 0.0) {
        h0 = 4.0 / n.sqrt() * (1.0 + t0.abs());
    }
    let mut expansions = 0;

    // locate a point inside the region
    let (t_star, s_star) = if s0.abs() <= z {
        (t0, s0)
    } else {
        // T decreases as t passes the estimate, so move towards sign(T)
        let dir = s0.signum();
        let (mut a, mut sa) = (t0, s0);
        let mut h = h0;
        let mut found = None;
        for _ in 0..MAX_DOUBLINGS {
            expansions += 1;
            let b = a + dir * h;
            let sb = stat.statistic(b)?;
            if sb.abs() <= z {
                found = Some((b, sb));
                break;
            }
            if sb.signum() != sa.signum() {
                // crossed zero while jumping over the region; bisect on the sign change
                found = Some(bisect_inside(stat, (a, sa), (b, sb), z)?);
                break;
            }
            a = b;
            sa = sb;
            h *= 2.0;
        }
        found.ok_or(Error::NoCrossing {
            critical: z,
            doublings: MAX_DOUBLINGS,
        })?
    };

    let (upper, outer_hi, e_hi) = endpoint(stat, t_star, s_star, h0, 1.0, z)?;
    let (lower, outer_lo, e_lo) = endpoint(stat, t_star, s_star, h0, -1.0, z)?;
    expansions += e_hi + e_lo;

    let mut disconnected = false;
    for i in 0..SCAN_POINTS {
        let t = outer_lo + (outer_hi - outer_lo) * i as f64 / (SCAN_POINTS - 1) as f64;
        let s = stat.statistic(t)?.abs();
        let inside = lower <= t && t <= upper;
        if (!inside && s < z - 1e-3) || (inside && s > z + 1e-3) {
            disconnected = true;
        }
    }
    Ok(Interval {
        lower,
        upper,
        alpha,
        evaluations: stat.evaluations(),
        bracket_expansions: expansions,
        disconnected_flag: disconnected,
        t_star,
    })
}

/// Bisects a sign change of T until a point with |T| ≤ z turns up.
fn bisect_inside(stat: &mut ShiftedDef, mut a: (f64, f64), mut b: (f64, f64), z: f64) -> Result<(f64, f64)> {
    for _ in 0..MAX_BISECTIONS {
        let m = 0.5 * (a.0 + b.0);
        let sm = stat.statistic(m)?;
        if sm.abs() <= z {
            return Ok((m, sm));
        }
        if sm.signum() == a.1.signum() {
            a = (m, sm);
        } else {
            b = (m, sm);
        }
        if (b.0 - a.0).abs() <= f64::EPSILON * (a.0.abs() + b.0.abs()) {
            break;
        }
    }
    Err(Error::NoConvergence {
        what: "confidence region search (region appears empty)",
        iterations: MAX_BISECTIONS,
    })
}

/// Walks from `t_star` in direction `dir` with doubling steps until |T| > z,
/// then bisects `|T| − z`. Returns (endpoint, outer bracket point, expansions).
fn endpoint(stat: &mut ShiftedDef, t_star: f64, s_star: f64, h0: f64, dir: f64, z: f64) -> Result<(f64, f64, usize)> {
    let mut inside = (t_star, s_star.abs() - z);
    let mut h = h0;
    let mut expansions = 0;
    let mut outside = None;
    for _ in 0..MAX_DOUBLINGS {
        expansions += 1;
        let t = inside.0 + dir * h;
        let f = stat.statistic(t)?.abs() - z;
        if f > 0.0 {
            outside = Some((t, f));
            break;
        }
        inside = (t, f);
        h *= 2.0;
    }
    let mut outside = outside.ok_or(Error::NoCrossing {
        critical: z,
        doublings: MAX_DOUBLINGS,
    })?;
    let outer = outside.0;
    let width_tol = WIDTH_RTOL * h0;
    for _ in 0..MAX_BISECTIONS {
        if inside.1.abs() <= STAT_TOL {
            return Ok((inside.0, outer, expansions));
        }
        if outside.1.abs() <= STAT_TOL {
            return Ok((outside.0, outer, expansions));
        }
        if (outside.0 - inside.0).abs() < width_tol {
            break;
        }
        let m = 0.5 * (inside.0 + outside.0);
        let f = stat.statistic(m)?.abs() - z;
        if f > 0.0 {
            outside = (m, f);
        } else {
            inside = (m, f);
        }
    }
    let best = if inside.1.abs() <= outside.1.abs() {
        inside.0
    } else {
        outside.0
    };
    Ok((best, outer, expansions))
}

/// Interval for the exposure coefficient by inverting T_DEF.
pub fn confidence_interval(ds: &Dataset, alpha: f64, lambda_x: f64, lambda_y: f64) -> Result<Interval> {
    let mut stat = ShiftedDef::for_dataset(ds, lambda_x, lambda_y)?;
    invert(&mut stat, alpha)
}

/// Same as [`confidence_interval`] with every solve started from zero.
pub fn confidence_interval_cold(ds: &Dataset, alpha: f64, lambda_x: f64, lambda_y: f64) -> Result<Interval> {
    let mut stat = ShiftedDef::for_dataset(ds, lambda_x, lambda_y)?;
    stat.set_warm_start(false);
    invert(&mut stat, alpha)
}

/// Wald interval from the one-step debiased Lasso estimate.
pub fn debiased_interval(ds: &Dataset, alpha: f64, lambda_x: f64, lambda_y: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let z = scaled_controls(ds.z())?;
    let fits = db_fits_scaled(ds.y(), ds.x(), &z, lambda_x, lambda_y)?;
    let (est, se) = fits.debiased(ds.x()).ok_or(Error::DegenerateResidual("exposure"))?;
    let c = two_sided_critical(alpha);
    Ok((est - c * se, est + c * se))
}

/// Test of `wᵀβ = t` in the linear model for `y` on `z`.
pub fn wbeta_test(y: &[f64], z: &Matrix, w: &[f64], t: f64, lambda: f64) -> Result<TestResult> {
    let mut stat = ShiftedDef::for_contrast(y, z, w, lambda)?;
    let (s, degenerate, fit) = stat.evaluate(t)?;
    Ok(TestResult::normal(Method::TDef, s)
        .with("degenerate", degenerate as u8 as f64)
        .with("t", t)
        .with("lambda", lambda)
        .with("sigma_hat_y", fit.sigma_hat)
        .with("sigma_hat_x", stat.x_fit().sigma_hat)
        .with("kkt_slack_y", if fit.degenerate { 0.0 } else { fit.kkt_slack })
        .with("kkt_slack_x", stat.x_fit().kkt_slack))
}

/// Confidence region for `wᵀβ`.
pub fn wbeta_region(y: &[f64], z: &Matrix, w: &[f64], alpha: f64, lambda: f64) -> Result<Interval> {
    let mut stat = ShiftedDef::for_contrast(y, z, w, lambda)?;
    invert(&mut stat, alpha)
}
