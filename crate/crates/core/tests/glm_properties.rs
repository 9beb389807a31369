use defstat::data::Dataset;
use defstat::family::GlmFamily;
use defstat::glm::{correction_factor, fit_glm, sandwich, t_glm, CorrectionPoint};
use defstat::linalg::Matrix;
use defstat::ols::augmented_design;
use defstat::rng::SimRng;
use defstat::sim::generators::gen_poisson_misspec;
use defstat::stats::{mean, sample_sd};

fn gaussian_design(rng: &mut SimRng, n: usize, p: usize) -> Matrix {
    Matrix::from_fn(n, p, |_, _| rng.normal())
}

/// Intercept plus `p` standard normal controls.
fn with_intercept(rng: &mut SimRng, n: usize, p: usize) -> Matrix {
    let z = gaussian_design(rng, n, p);
    Matrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { z[(i, j - 1)] })
}

/// x linear in z plus unit noise.
fn linear_exposure(rng: &mut SimRng, z: &Matrix) -> Vec<f64> {
    (0..z.nrows())
        .map(|i| 0.5 * z[(i, 1)] - 0.3 * z[(i, 2)] + rng.normal())
        .collect()
}

#[test]
fn well_specified_poisson_factor_is_near_one() {
    let mut rng = SimRng::new(11);
    let n = 5000;
    let z = with_intercept(&mut rng, n, 3);
    let x = linear_exposure(&mut rng, &z);
    let y: Vec<f64> = (0..n)
        .map(|i| rng.poisson((0.5 + 0.3 * z[(i, 1)] + 0.2 * x[i]).exp()))
        .collect();
    let ds = Dataset::new(y, x, z).unwrap();
    let design = augmented_design(&ds);
    let fit = fit_glm(ds.y(), &design, GlmFamily::PoissonLog).unwrap();
    let f = correction_factor(&fit, &design, ds.y(), CorrectionPoint::Full).unwrap();
    assert!((0.85..=1.15).contains(&f), "factor {f}");
}

#[test]
fn overdispersed_poisson_inflates_factor() {
    let raw = defstat::sim::diabetes_design();
    let n = raw.nrows();
    let z = Matrix::from_fn(n, raw.ncols() + 1, |i, j| if j == 0 { 1.0 } else { raw[(i, j - 1)] });
    let factors: Vec<f64> = (0..40)
        .map(|r| {
            let mut rng = SimRng::replicate(21, r);
            let y = gen_poisson_misspec(&raw, 4.0, &mut rng).unwrap();
            let x: Vec<f64> = (0..n).map(|i| raw[(i, 0)] + rng.normal() / (n as f64).sqrt()).collect();
            let ds = Dataset::new(y, x, z.clone()).unwrap();
            t_glm(&ds, GlmFamily::PoissonLog)
                .unwrap()
                .diag("correction_factor")
                .unwrap()
        })
        .collect();
    assert!(mean(&factors) > 1.5, "mean factor {}", mean(&factors));
}

#[test]
fn gaussian_sandwich_matches_model_variance() {
    let mut rng = SimRng::new(12);
    let n = 2000;
    let z = with_intercept(&mut rng, n, 4);
    let x = linear_exposure(&mut rng, &z);
    let y: Vec<f64> = (0..n)
        .map(|i| 1.0 + z[(i, 2)] + 0.4 * x[i] + 2.0 * rng.normal())
        .collect();
    let ds = Dataset::new(y, x, z).unwrap();
    let design = augmented_design(&ds);
    let fit = fit_glm(ds.y(), &design, GlmFamily::GaussianIdentity).unwrap();
    let parts = sandwich(&fit, &design, ds.y()).unwrap();
    let sigma2 = fit.eta.iter().zip(ds.y()).map(|(e, y)| (y - e).powi(2)).sum::<f64>() / n as f64;
    let full = parts.corrected_var_11 * n as f64;
    let model = parts.h_inv[(0, 0)] * sigma2;
    assert!((full / model - 1.0).abs() < 0.2, "sandwich {full} vs model {model}");
}

/// Y depends on Z through a function the working model cannot represent.
fn misspecified_counts(rng: &mut SimRng, z: &Matrix) -> Vec<f64> {
    (0..z.nrows())
        .map(|i| {
            let (a, b) = (z[(i, 1)], z[(i, 2)]);
            rng.poisson((0.5 + 0.2 * a * a + (1.5 * b).sin()).min(3.0).exp())
        })
        .collect()
}

#[test]
fn linear_exposure_model_centres_theta_at_zero() {
    let reps = 500;
    let n = 500;
    let thetas: Vec<f64> = (0..reps)
        .map(|r| {
            let mut rng = SimRng::replicate(13, r);
            let z = with_intercept(&mut rng, n, 3);
            let x = linear_exposure(&mut rng, &z);
            let y = misspecified_counts(&mut rng, &z);
            let ds = Dataset::new(y, x, z).unwrap();
            t_glm(&ds, GlmFamily::PoissonLog).unwrap().diag("theta_hat").unwrap()
        })
        .collect();
    let se = sample_sd(&thetas) / (reps as f64).sqrt();
    assert!(
        mean(&thetas).abs() <= 3.0 * se,
        "mean {} vs 3 SE {}",
        mean(&thetas),
        3.0 * se
    );
}

#[test]
fn full_sandwich_agrees_with_factored_form() {
    let mut rng = SimRng::new(14);
    let n = 2000;
    let z = with_intercept(&mut rng, n, 3);
    let x = linear_exposure(&mut rng, &z);
    let y = misspecified_counts(&mut rng, &z);
    let ds = Dataset::new(y, x, z).unwrap();
    let design = augmented_design(&ds);
    let fit = fit_glm(ds.y(), &design, GlmFamily::PoissonLog).unwrap();
    let parts = sandwich(&fit, &design, ds.y()).unwrap();
    let f = correction_factor(&fit, &design, ds.y(), CorrectionPoint::Full).unwrap();
    let full = parts.corrected_var_11 * n as f64;
    let factored = parts.h_inv[(0, 0)] * f;
    assert!(
        (full / factored - 1.0).abs() < 0.15,
        "sandwich {full} vs factored {factored}"
    );
}

#[test]
fn log_likelihood_trace_never_decreases() {
    let mut rng = SimRng::new(15);
    let z = with_intercept(&mut rng, 300, 3);
    let x = linear_exposure(&mut rng, &z);
    let y: Vec<f64> = (0..300)
        .map(|i| rng.bernoulli(defstat::family::logistic(x[i] - z[(i, 1)])) as u8 as f64)
        .collect();
    let ds = Dataset::new(y, x, z).unwrap();
    let design = augmented_design(&ds);
    let fit = fit_glm(ds.y(), &design, GlmFamily::BinomialLogit).unwrap();
    assert!(fit.log_lik_trace.windows(2).all(|w| w[1] >= w[0] - 1e-9));
}
