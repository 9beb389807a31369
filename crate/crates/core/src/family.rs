//! GLM families with canonical links.
//!
//! Every family here uses its canonical link, so the log-likelihood
//! derivative with respect to the linear predictor is `U(η; y) = y − μ(η)` and
//! `U′(η; y) = −μ′(η) = −V(μ(η))`.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Linear predictors are clipped to this range inside the exponential families.
pub const ETA_CLAMP: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GlmFamily {
    GaussianIdentity,
    BinomialLogit,
    PoissonLog,
}

impl GlmFamily {
    pub fn tag(self) -> &'static str {
        match self {
            GlmFamily::GaussianIdentity => "gaussian-identity",
            GlmFamily::BinomialLogit => "binomial-logit",
            GlmFamily::PoissonLog => "poisson-log",
        }
    }

    /// Whether evaluating at `eta` would hit the clamp.
    pub fn clamps(self, eta: f64) -> bool {
        !matches!(self, GlmFamily::GaussianIdentity) && eta.abs() > ETA_CLAMP
    }

    #[inline]
    fn clamp(self, eta: f64) -> f64 {
        match self {
            GlmFamily::GaussianIdentity => eta,
            _ => eta.clamp(-ETA_CLAMP, ETA_CLAMP),
        }
    }

    /// Inverse link μ(η).
    #[inline]
    pub fn mean(self, eta: f64) -> f64 {
        let eta = self.clamp(eta);
        match self {
            GlmFamily::GaussianIdentity => eta,
            GlmFamily::BinomialLogit => logistic(eta),
            GlmFamily::PoissonLog => eta.exp(),
        }
    }

    /// μ′(η).
    #[inline]
    pub fn mean_derivative(self, eta: f64) -> f64 {
        let eta = self.clamp(eta);
        match self {
            GlmFamily::GaussianIdentity => 1.0,
            GlmFamily::BinomialLogit => {
                let m = logistic(eta);
                m * (1.0 - m)
            }
            GlmFamily::PoissonLog => eta.exp(),
        }
    }

    /// Variance function V(m).
    #[inline]
    pub fn variance(self, m: f64) -> f64 {
        match self {
            GlmFamily::GaussianIdentity => 1.0,
            GlmFamily::BinomialLogit => m * (1.0 - m),
            GlmFamily::PoissonLog => m,
        }
    }

    /// U(η; y) = ∂ℓ/∂η.
    #[inline]
    pub fn score(self, eta: f64, y: f64) -> f64 {
        y - self.mean(eta)
    }

    /// U′(η; y) = ∂²ℓ/∂η².
    #[inline]
    pub fn score_derivative(self, eta: f64, _y: f64) -> f64 {
        -self.mean_derivative(eta)
    }

    /// Log-likelihood contribution up to terms that do not depend on η.
    #[inline]
    pub fn log_lik(self, eta: f64, y: f64) -> f64 {
        let eta = self.clamp(eta);
        match self {
            GlmFamily::GaussianIdentity => -0.5 * (y - eta).powi(2),
            // y η − log(1 + e^η), evaluated stably
            GlmFamily::BinomialLogit => y * eta - softplus(eta),
            GlmFamily::PoissonLog => y * eta - eta.exp(),
        }
    }

    /// Checks that `y` lies in the support of the family.
    pub fn check_support(self, y: &[f64]) -> Result<(), Error> {
        match self {
            GlmFamily::GaussianIdentity => Ok(()),
            GlmFamily::BinomialLogit => {
                if y.iter().all(|&v| v == 0.0 || v == 1.0) {
                    Ok(())
                } else {
                    Err(Error::Invalid("binomial response must be 0/1".into()))
                }
            }
            GlmFamily::PoissonLog => {
                if y.iter().all(|&v| v >= 0.0 && v.fract() == 0.0) {
                    Ok(())
                } else {
                    Err(Error::Invalid("poisson response must be nonnegative integers".into()))
                }
            }
        }
    }
}

#[inline]
pub fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

impl fmt::Display for GlmFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for GlmFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gaussian" | "gaussian-identity" => Ok(GlmFamily::GaussianIdentity),
            "binomial" | "logistic" | "binomial-logit" => Ok(GlmFamily::BinomialLogit),
            "poisson" | "poisson-log" => Ok(GlmFamily::PoissonLog),
            other => Err(Error::Invalid(format!("unknown family `{other}`"))),
        }
    }
}
