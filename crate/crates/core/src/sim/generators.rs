//! Data-generating processes for the simulation scenarios.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::logistic;
use crate::highdim::WeightSpec;
use crate::linalg::{col, Matrix};
use crate::rng::SimRng;

/// `n` rows from N(0, Σ) with `Σⱼₖ = ρ^|j−k|`, via the stationary AR(1) recursion.
pub fn toeplitz_design(rng: &mut SimRng, n: usize, p: usize, rho: f64) -> Result<Matrix> {
    if !(rho > -1.0 && rho < 1.0) {
        return Err(Error::Generator(format!(
            "Toeplitz correlation must lie in (-1, 1), got {rho}"
        )));
    }
    let innov = (1.0 - rho * rho).sqrt();
    let mut m = Matrix::zeros(n, p);
    for i in 0..n {
        let mut prev = 0.0;
        for j in 0..p {
            let e = rng.normal();
            let v = if j == 0 { e } else { rho * prev + innov * e };
            m[(i, j)] = v;
            prev = v;
        }
    }
    Ok(m)
}

/// `n` rows drawn with replacement from `source`.
pub fn bootstrap_rows(rng: &mut SimRng, source: &Matrix, n: usize) -> Matrix {
    let rows: Vec<usize> = (0..n).map(|_| rng.index(source.nrows())).collect();
    Matrix::from_fn(n, source.ncols(), |i, j| source[(rows[i], j)])
}

/// ηᵢ = Σⱼ,ₖ logistic(ZᵢⱼZᵢₖ)
pub fn pairwise_logistic(z: &Matrix) -> Vec<f64> {
    let (n, p) = z.shape();
    (0..n)
        .map(|i| {
            let mut s = 0.0;
            for j in 0..p {
                for k in 0..p {
                    s += logistic(z[(i, j)] * z[(i, k)]);
                }
            }
            s
        })
        .collect()
}

pub fn row_sums(z: &Matrix) -> Vec<f64> {
    (0..z.nrows()).map(|i| z.row(i).sum()).collect()
}

/// Xᵢ = Σⱼ Zᵢⱼ + εᵢ with εᵢ + 1 ~ Exp(1).
pub fn example1_exposure(z: &Matrix, rng: &mut SimRng) -> Vec<f64> {
    row_sums(z).into_iter().map(|s| s + rng.exponential() - 1.0).collect()
}

/// Yᵢ = ηᵢζᵢ with ζᵢ ~ χ²₁, plus Xᵢ under the alternative.
pub fn gen_example1(z: &Matrix, rng: &mut SimRng, alt: bool) -> Result<Dataset> {
    let x = example1_exposure(z, rng);
    let eta = pairwise_logistic(z);
    let y: Vec<f64> = eta
        .iter()
        .zip(&x)
        .map(|(e, xi)| e * rng.chi_squared_1() + if alt { *xi } else { 0.0 })
        .collect();
    Dataset::new(y, x, z.clone())
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

/// Poisson responses with log μᵢ = a₁Σⱼ Zᵢⱼ + σa₂ηᵢ, where a₁ and a₂ scale
/// their terms to maximum absolute value 3.
pub fn gen_poisson_misspec(z: &Matrix, sigma: f64, rng: &mut SimRng) -> Result<Vec<f64>> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Generator(format!("sigma must be nonnegative, got {sigma}")));
    }
    let rs = row_sums(z);
    let eta = pairwise_logistic(z);
    let a1 = scale_to(3.0, &rs);
    let a2 = scale_to(3.0, &eta);
    let mut y = Vec::with_capacity(rs.len());
    for (r, e) in rs.iter().zip(&eta) {
        let log_mu = a1 * r + sigma * a2 * e;
        if log_mu > 20.0 {
            return Err(Error::Generator(format!("log mean {log_mu} exceeds 20")));
        }
        y.push(rng.poisson(log_mu.exp()));
    }
    Ok(y)
}

fn scale_to(target: f64, v: &[f64]) -> f64 {
    let m = max_abs(v);
    if m == 0.0 {
        0.0
    } else {
        target / m
    }
}

/// Nuisance shape for the partially linear model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nuisance {
    /// Σⱼ Zᵢⱼβⱼ + εᵢ over the first 11 controls.
    Linear,
    /// The same with Z̃ = 2eᶻ/(1 + eᶻ) − 1.
    SlightlyNonlinear,
    /// logistic(Σⱼ Z̃ᵢⱼβⱼ + Σⱼₖ Z̃ᵢⱼZ̃ᵢₖθⱼₖ + εᵢ)
    HighlyNonlinear,
}

impl Nuisance {
    pub fn tag(self) -> char {
        match self {
            Nuisance::Linear => 'a',
            Nuisance::SlightlyNonlinear => 'b',
            Nuisance::HighlyNonlinear => 'c',
        }
    }
}

pub const NUISANCE_TERMS: usize = 11;

fn squash(v: f64) -> f64 {
    2.0 * logistic(v) - 1.0
}

/// Splits a draw of `W` (n × p) into the exposure `W₀` and controls `W₁…`, and
/// builds `Y = θX + f(Z, ε)`. `theta = None` draws θ ~ U[0, 2].
pub fn gen_partial_linear(
    w: &Matrix,
    nuisance: Nuisance,
    theta: Option<f64>,
    rng: &mut SimRng,
) -> Result<(Dataset, f64)> {
    let (n, p) = w.shape();
    if p < NUISANCE_TERMS + 1 {
        return Err(Error::Generator(format!("partial-linear needs p >= 12, got {p}")));
    }
    let theta = theta.unwrap_or_else(|| rng.uniform_range(0.0, 2.0));
    let beta: Vec<f64> = (0..NUISANCE_TERMS).map(|_| rng.uniform_range(0.0, 2.0)).collect();
    let inter: Vec<f64> = match nuisance {
        Nuisance::HighlyNonlinear => (0..NUISANCE_TERMS * NUISANCE_TERMS)
            .map(|_| rng.uniform_range(0.0, 2.0) / NUISANCE_TERMS as f64)
            .collect(),
        _ => Vec::new(),
    };
    let x: Vec<f64> = col(w, 0).to_vec();
    let z = w.columns(1, p - 1).into_owned();
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let eps = rng.normal();
        let zt: Vec<f64> = (0..NUISANCE_TERMS)
            .map(|j| match nuisance {
                Nuisance::Linear => z[(i, j)],
                _ => squash(z[(i, j)]),
            })
            .collect();
        let lin: f64 = zt.iter().zip(&beta).map(|(a, b)| a * b).sum();
        let f = match nuisance {
            Nuisance::Linear | Nuisance::SlightlyNonlinear => lin + eps,
            Nuisance::HighlyNonlinear => {
                let mut q = 0.0;
                for j in 0..NUISANCE_TERMS {
                    for k in 0..NUISANCE_TERMS {
                        q += zt[j] * zt[k] * inter[j * NUISANCE_TERMS + k];
                    }
                }
                logistic(lin + q + eps)
            }
        };
        y.push(theta * x[i] + f);
    }
    Ok((Dataset::new(y, x, z)?, theta))
}

/// Binary `y` and `x` with logit π^Y = Σⱼ≤24 aⱼZᵢⱼβⱼ and logit π^X = Σⱼ≤4 aⱼZᵢⱼβⱼ,
/// aⱼ = 1 − (j−1)/24 and βⱼ ~ U[0, 1]; the alternative adds `x` to logit π^Y.
pub fn gen_logistic_hd(z: &Matrix, rng: &mut SimRng, alt: bool) -> Result<Dataset> {
    let (n, p) = z.shape();
    if p < 24 {
        return Err(Error::Generator(format!("logistic-hd needs p >= 24, got {p}")));
    }
    let coef: Vec<f64> = (0..24).map(|j| (1.0 - j as f64 / 24.0) * rng.uniform()).collect();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let lx: f64 = (0..4).map(|j| coef[j] * z[(i, j)]).sum();
        let ly: f64 = (0..24).map(|j| coef[j] * z[(i, j)]).sum();
        let xi = rng.bernoulli(logistic(lx)) as u8 as f64;
        let yi = rng.bernoulli(logistic(ly + if alt { xi } else { 0.0 })) as u8 as f64;
        x.push(xi);
        y.push(yi);
    }
    Dataset::new(y, x, z.clone())
}

/// Y = X − 0.5Z₁ + 0.7Z₂ + ε with `W` split as in [`gen_partial_linear`].
pub fn gen_toeplitz_confint(w: &Matrix, rng: &mut SimRng) -> Result<(Dataset, f64)> {
    let (n, p) = w.shape();
    if p < 3 {
        return Err(Error::Generator(format!("toeplitz-confint needs p >= 3, got {p}")));
    }
    let x = col(w, 0).to_vec();
    let z = w.columns(1, p - 1).into_owned();
    let y: Vec<f64> = (0..n)
        .map(|i| x[i] - 0.5 * z[(i, 0)] + 0.7 * z[(i, 1)] + rng.normal())
        .collect();
    Ok((Dataset::new(y, x, z)?, 1.0))
}

/// Sparse linear models for both `y` and `x` on `z` under conditional
/// independence: y on controls 1..=s, x on controls 1, 3, 5, ... (s of them),
/// unit coefficients and standard normal errors.
pub fn gen_sparse_linear(z: &Matrix, s: usize, rng: &mut SimRng) -> Result<Dataset> {
    let (n, p) = z.shape();
    if 2 * s > p + 1 || s == 0 {
        return Err(Error::Generator(format!(
            "sparse-linear needs 1 <= s and 2s - 1 <= p, got s = {s}, p = {p}"
        )));
    }
    let y: Vec<f64> = (0..n)
        .map(|i| (0..s).map(|j| z[(i, j)]).sum::<f64>() + rng.normal())
        .collect();
    let x: Vec<f64> = (0..n)
        .map(|i| (0..s).map(|j| z[(i, 2 * j)]).sum::<f64>() + rng.normal())
        .collect();
    Dataset::new(y, x, z.clone())
}

/// Heteroscedastic sparse linear null with known weights: noise sd
/// exp(Z₁/2) for `y` and exp(Z₂/2) for `x`, otherwise as [`gen_sparse_linear`].
/// Returns the data, the weights (reciprocal noise sds) and the raw `y` coefficients.
pub fn gen_heteroscedastic(z: &Matrix, s: usize, rng: &mut SimRng) -> Result<(Dataset, WeightSpec, Vec<f64>)> {
    let (n, p) = z.shape();
    if 2 * s > p + 1 || s == 0 || p < 2 {
        return Err(Error::Generator(format!(
            "heteroscedastic needs 1 <= s and 2s - 1 <= p, got s = {s}, p = {p}"
        )));
    }
    let sd_y: Vec<f64> = (0..n).map(|i| (0.5 * z[(i, 0)]).exp()).collect();
    let sd_x: Vec<f64> = (0..n).map(|i| (0.5 * z[(i, 1)]).exp()).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| (0..s).map(|j| z[(i, j)]).sum::<f64>() + sd_y[i] * rng.normal())
        .collect();
    let x: Vec<f64> = (0..n)
        .map(|i| (0..s).map(|j| z[(i, 2 * j)]).sum::<f64>() + sd_x[i] * rng.normal())
        .collect();
    let w = WeightSpec::new(
        sd_y.iter().map(|v| 1.0 / v).collect(),
        sd_x.iter().map(|v| 1.0 / v).collect(),
    )?;
    let beta_y = (0..p).map(|j| if j < s { 1.0 } else { 0.0 }).collect();
    Ok((Dataset::new(y, x, z.clone())?, w, beta_y))
}
