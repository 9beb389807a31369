//! Reference distributions and goodness-of-fit summaries.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid parameters")
}

pub fn normal_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

/// Upper tail 1 − Φ(x), accurate far into the tail.
pub fn normal_sf(x: f64) -> f64 {
    std_normal().sf(x)
}

pub fn normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// z such that P(|N(0,1)| > z) = alpha.
pub fn two_sided_critical(alpha: f64) -> f64 {
    normal_quantile(1.0 - alpha / 2.0)
}

pub fn two_sided_normal_p(stat: f64) -> f64 {
    (2.0 * normal_sf(stat.abs())).min(1.0)
}

/// Two-sided p-value against Student's t with `df` degrees of freedom.
pub fn two_sided_t_p(stat: f64, df: f64) -> f64 {
    let t = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * t.sf(stat.abs())).min(1.0)
}

pub fn t_sf(stat: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df).expect("df > 0").sf(stat)
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `sample` and `cdf`.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s: Vec<f64> = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn ks_vs_uniform(p_values: &[f64]) -> f64 {
    ks_distance(p_values, |v| v.clamp(0.0, 1.0))
}

pub fn ks_vs_normal(sample: &[f64]) -> f64 {
    ks_distance(sample, normal_cdf)
}

/// Sorted values paired with their empirical CDF heights.
pub fn ecdf(sample: &[f64]) -> Vec<(f64, f64)> {
    let mut s: Vec<f64> = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.into_iter()
        .enumerate()
        .map(|(i, v)| (v, (i + 1) as f64 / n))
        .collect()
}

/// Normal-approximation 99% band for a binomial proportion `p` over `reps` trials.
pub fn binomial_band_99(p: f64, reps: usize) -> (f64, f64) {
    let half = 2.5758293035489 * (p * (1.0 - p) / reps as f64).sqrt();
    (p - half, p + half)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn sample_sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
}
