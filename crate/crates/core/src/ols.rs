//! Low-dimensional least squares, partial correlation and the t-test for the
//! exposure coefficient.
//!
//! The t-statistic for the exposure in an OLS regression of `y` on `(x, z)` is
//! a monotone transform of the partial correlation between `x` and `y` given
//! `z`. Because the partial correlation is symmetric in `x` and `y`, the test
//! stays calibrated under conditional independence whenever either the
//! regression of `y` or that of `x` on `z` is linear.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, prepend_column, Matrix, Vector};
use crate::result::{Method, TestResult};

/// Singular values below this fraction of the largest one count as zero.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    /// ‖residuals‖² / (n − k) for a design with k columns.
    pub sigma_tilde_sq: f64,
    pub projection_rank: usize,
    /// (DᵀD)⁻¹ for the design D.
    pub cov_unscaled: Matrix,
}

impl OlsFit {
    /// Classical t-statistic for coefficient `j`.
    pub fn t_statistic(&self, j: usize) -> f64 {
        self.coefficients[j] / (self.cov_unscaled[(j, j)] * self.sigma_tilde_sq).sqrt()
    }
}

/// Least squares via the singular value decomposition.
pub fn fit_ols(response: &[f64], design: &Matrix) -> Result<OlsFit> {
    let (n, k) = design.shape();
    if response.len() != n {
        return Err(Error::Invalid("response length does not match design rows".into()));
    }
    if n <= k {
        return Err(Error::Invalid(format!("need n > columns, got n = {n}, columns = {k}")));
    }
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > RANK_TOL * smax).count();
    if k == 0 || rank < k {
        return Err(Error::RankDeficient { rank, cols: k });
    }
    let u = svd.u.as_ref().expect("u computed");
    let v_t = svd.v_t.as_ref().expect("v_t computed");
    let y = Vector::from_column_slice(response);
    // b = V Σ⁻¹ Uᵀ y
    let mut uty = u.tr_mul(&y);
    for (c, s) in uty.iter_mut().zip(svd.singular_values.iter()) {
        *c /= s;
    }
    let b = v_t.tr_mul(&uty);
    let fitted = design * &b;
    let residuals: Vec<f64> = response.iter().zip(fitted.iter()).map(|(a, f)| a - f).collect();
    let mut v_scaled = v_t.transpose();
    for (j, s) in svd.singular_values.iter().enumerate() {
        v_scaled.column_mut(j).scale_mut(1.0 / (s * s));
    }
    let cov_unscaled = v_scaled * v_t;
    let rss = dot(&residuals, &residuals);
    Ok(OlsFit {
        coefficients: b.iter().copied().collect(),
        residuals,
        sigma_tilde_sq: rss / (n - k) as f64,
        projection_rank: rank,
        cov_unscaled,
    })
}

/// Orthogonal projector onto the column span of `z`, applied as `v ↦ (I − P) v`.
pub struct Residualizer {
    /// Orthonormal basis of span(z), n × rank.
    basis: Option<Matrix>,
}

impl Residualizer {
    pub fn new(z: &Matrix) -> Self {
        if z.ncols() == 0 {
            return Self { basis: None };
        }
        let svd = z.clone().svd(true, false);
        let smax = svd.singular_values.max();
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&j| svd.singular_values[j] > RANK_TOL * smax)
            .collect();
        let u = svd.u.expect("u computed");
        Self {
            basis: Some(u.select_columns(&keep)),
        }
    }

    pub fn residual(&self, v: &[f64]) -> Vec<f64> {
        match &self.basis {
            None => v.to_vec(),
            Some(q) => {
                let vv = Vector::from_column_slice(v);
                let proj = q * q.tr_mul(&vv);
                v.iter().zip(proj.iter()).map(|(a, b)| a - b).collect()
            }
        }
    }
}

struct PartialCorrelation {
    rho: f64,
    theta_hat: f64,
}

fn partial_correlation_parts(ds: &Dataset) -> Result<PartialCorrelation> {
    let proj = Residualizer::new(ds.z());
    let rx = proj.residual(ds.x());
    let ry = proj.residual(ds.y());
    let (nx, ny) = (norm2(&rx), norm2(&ry));
    if nx <= 1e-12 * norm2(ds.x()) || nx == 0.0 {
        return Err(Error::DegenerateResidual("exposure"));
    }
    if ny <= 1e-12 * norm2(ds.y()) || ny == 0.0 {
        return Err(Error::DegenerateResidual("response"));
    }
    // xᵀ(I−P)y written symmetrically so swapping x and y is exact
    let cross = dot(&rx, &ry);
    Ok(PartialCorrelation {
        rho: (cross / (nx * ny)).clamp(-1.0, 1.0),
        theta_hat: cross / (nx * nx),
    })
}

/// Sample partial correlation of `x` and `y` given `z`.
pub fn partial_correlation(ds: &Dataset) -> Result<f64> {
    partial_correlation_parts(ds).map(|p| p.rho)
}

fn t_from_rho(ds: &Dataset) -> Result<(f64, f64, PartialCorrelation)> {
    let (n, p) = (ds.n(), ds.p());
    if n <= p + 1 {
        return Err(Error::Invalid(format!("need n > p + 1, got n = {n}, p = {p}")));
    }
    let pc = partial_correlation_parts(ds)?;
    let one_minus = 1.0 - pc.rho * pc.rho;
    if one_minus <= 1e-14 {
        return Err(Error::InfiniteStatistic);
    }
    let df = (n - p - 1) as f64;
    Ok((df.sqrt() * pc.rho / one_minus.sqrt(), df, pc))
}

/// T_OLS = √(n−p−1)·ρ̂/√(1−ρ̂²) against N(0, 1).
pub fn t_ols(ds: &Dataset) -> Result<TestResult> {
    let (stat, df, pc) = t_from_rho(ds)?;
    Ok(TestResult::normal(Method::TOls, stat)
        .with("rho", pc.rho)
        .with("theta_hat", pc.theta_hat)
        .with("df", df))
}

/// The same statistic against t with n−p−1 degrees of freedom.
pub fn t_ols_exact(ds: &Dataset) -> Result<TestResult> {
    let (stat, df, pc) = t_from_rho(ds)?;
    Ok(TestResult::student_t(Method::TOlsExact, stat, df)
        .with("rho", pc.rho)
        .with("theta_hat", pc.theta_hat))
}

/// `[x | z]`
pub fn augmented_design(ds: &Dataset) -> Matrix {
    prepend_column(ds.x(), ds.z())
}
