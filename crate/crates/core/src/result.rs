use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::stats;

/// Test statistics implemented by the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    TOls,
    TOlsExact,
    TGlm,
    TDef,
    TDb,
    TWDef,
    TGlmDef,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::TOls,
        Method::TOlsExact,
        Method::TGlm,
        Method::TDef,
        Method::TDb,
        Method::TWDef,
        Method::TGlmDef,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::TOls => "t-ols",
            Method::TOlsExact => "t-ols-exact",
            Method::TGlm => "t-glm",
            Method::TDef => "t-def",
            Method::TDb => "t-db",
            Method::TWDef => "t-w-def",
            Method::TGlmDef => "t-glm-def",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown method `{s}`")))
    }
}

/// Reference distribution of a statistic under the null.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Reference {
    Normal,
    StudentT { df: f64 },
}

/// Outcome of one conditional independence test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub method: Method,
    pub statistic: f64,
    pub p_value: f64,
    pub reference: Reference,
    /// Solver and estimator telemetry. Flags are stored as 0/1.
    pub diagnostics: BTreeMap<String, f64>,
}

impl TestResult {
    pub fn normal(method: Method, statistic: f64) -> Self {
        Self {
            method,
            statistic,
            p_value: stats::two_sided_normal_p(statistic),
            reference: Reference::Normal,
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn student_t(method: Method, statistic: f64, df: f64) -> Self {
        let mut diagnostics = BTreeMap::new();
        diagnostics.insert("df".to_owned(), df);
        Self {
            method,
            statistic,
            p_value: stats::two_sided_t_p(statistic, df),
            reference: Reference::StudentT { df },
            diagnostics,
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_owned(), value);
        self
    }

    pub fn diag(&self, key: &str) -> Option<f64> {
        self.diagnostics.get(key).copied()
    }

    pub fn degenerate(&self) -> bool {
        self.diag("degenerate").is_some_and(|v| v != 0.0)
    }

    /// One-sided p-value on the signed statistic; `upper` tests for a positive effect.
    pub fn one_sided_p(&self, upper: bool) -> f64 {
        let s = if upper { self.statistic } else { -self.statistic };
        match self.reference {
            Reference::Normal => stats::normal_sf(s),
            Reference::StudentT { df } => stats::t_sf(s, df),
        }
    }
}
