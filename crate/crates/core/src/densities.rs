//! Unnormalized target log-densities over probability vectors.
//!
//! Everything stays in the log domain: at N = 60 clicks over nine outcomes
//! the raw point likelihood is around e^-130. The quantum-constraint factor
//! is not part of these densities; samplers apply it through
//! [`crate::physicality`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::quantum::ProbVector;
use crate::{Error, Result};

/// Click counts `n_k` per outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dataset {
    counts: Vec<u64>,
}

impl Dataset {
    pub fn new(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Relative frequencies `n_k / N`.
    pub fn frequencies(&self) -> Result<ProbVector> {
        let n = self.total();
        if n == 0 {
            return Err(Error::InvalidInput("dataset has no counts".into()));
        }
        ProbVector::normalized(self.counts.iter().map(|&c| c as f64).collect())
    }

    /// Formats as the comma-separated list accepted by [`FromStr`].
    pub fn to_csv(&self) -> String {
        self.counts.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
    }
}

impl FromStr for Dataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let counts = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u64>()
                    .map_err(|e| Error::InvalidInput(format!("bad count `{t}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { counts })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorKind {
    Primitive,
    Jeffreys,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    PriorPrimitive,
    PriorJeffreys,
    PosteriorPrimitive,
    PosteriorJeffreys,
}

impl TargetKind {
    pub fn prior(self) -> PriorKind {
        match self {
            Self::PriorPrimitive | Self::PosteriorPrimitive => PriorKind::Primitive,
            Self::PriorJeffreys | Self::PosteriorJeffreys => PriorKind::Jeffreys,
        }
    }

    pub fn is_posterior(self) -> bool {
        matches!(self, Self::PosteriorPrimitive | Self::PosteriorJeffreys)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::PriorPrimitive => "prior-primitive",
            Self::PriorJeffreys => "prior-jeffreys",
            Self::PosteriorPrimitive => "posterior-primitive",
            Self::PosteriorJeffreys => "posterior-jeffreys",
        }
    }
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TargetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prior-primitive" => Ok(Self::PriorPrimitive),
            "prior-jeffreys" => Ok(Self::PriorJeffreys),
            "posterior-primitive" => Ok(Self::PosteriorPrimitive),
            "posterior-jeffreys" => Ok(Self::PosteriorJeffreys),
            other => Err(Error::InvalidInput(format!("unknown target `{other}`"))),
        }
    }
}

fn check_len(p: &[f64], data: &Dataset) -> Result<()> {
    if p.len() != data.len() {
        return Err(Error::DimensionMismatch { expected: data.len(), got: p.len() });
    }
    Ok(())
}

pub(crate) fn log_likelihood_slice(p: &[f64], counts: &[u64]) -> f64 {
    let mut acc = 0.0;
    for (&pk, &nk) in p.iter().zip(counts) {
        if nk == 0 {
            continue;
        }
        if pk <= 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += nk as f64 * pk.ln();
    }
    acc
}

pub(crate) fn log_prior_slice(p: &[f64], kind: PriorKind) -> f64 {
    match kind {
        PriorKind::Primitive => 0.0,
        PriorKind::Jeffreys => {
            if p.iter().any(|&x| x <= 0.0) {
                return f64::INFINITY;
            }
            -0.5 * p.iter().map(|x| x.ln()).sum::<f64>()
        }
    }
}

/// `Σ_k n_k ln p_k`, with `0·ln 0 = 0`.
pub fn log_likelihood(p: &ProbVector, data: &Dataset) -> Result<f64> {
    check_len(p.as_slice(), data)?;
    Ok(log_likelihood_slice(p.as_slice(), data.counts()))
}

/// 0 for the primitive prior, `-(1/2) Σ ln p_k` for Jeffreys (+∞ on faces).
pub fn log_prior(p: &ProbVector, kind: PriorKind) -> f64 {
    log_prior_slice(p.as_slice(), kind)
}

fn combine(log_prior: f64, log_lik: f64) -> f64 {
    // A zero likelihood on a Jeffreys singularity: the product vanishes
    // because n_k ≥ 1 beats the exponent 1/2.
    if log_lik == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        log_prior + log_lik
    }
}

pub fn log_posterior(p: &ProbVector, data: &Dataset, kind: PriorKind) -> Result<f64> {
    let ll = log_likelihood(p, data)?;
    Ok(combine(log_prior(p, kind), ll))
}

/// Default cap on `ln r` for rejection sampling under the Jeffreys prior:
/// `(K/2) ln(K·10³)`, the Jeffreys density when every `p_k = 1/(K·10³)`.
pub fn default_jeffreys_log_cap(k: usize) -> f64 {
    0.5 * k as f64 * (k as f64 * 1e3).ln()
}

/// Prior or posterior target, excluding the quantum constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetDensity {
    kind: TargetKind,
    dataset: Option<Dataset>,
}

impl TargetDensity {
    pub fn new(kind: TargetKind, dataset: Option<Dataset>) -> Result<Self> {
        if kind.is_posterior() {
            match &dataset {
                Some(d) if d.total() > 0 => {}
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "target {kind} needs a dataset with at least one count"
                    )))
                }
            }
        }
        Ok(Self { kind, dataset })
    }

    pub fn prior(kind: PriorKind) -> Self {
        let kind = match kind {
            PriorKind::Primitive => TargetKind::PriorPrimitive,
            PriorKind::Jeffreys => TargetKind::PriorJeffreys,
        };
        Self { kind, dataset: None }
    }

    pub fn kind(&self) -> TargetKind {
        self.kind
    }

    pub fn dataset(&self) -> Option<&Dataset> {
        self.dataset.as_ref()
    }

    /// Checks that the dataset, if any, matches the outcome count.
    pub fn check_outcomes(&self, k: usize) -> Result<()> {
        match &self.dataset {
            Some(d) if self.kind.is_posterior() && d.len() != k => {
                Err(Error::DimensionMismatch { expected: k, got: d.len() })
            }
            _ => Ok(()),
        }
    }

    /// `ln w_0(p)` or `ln w_D(p)`.
    pub fn log_density_slice(&self, p: &[f64]) -> f64 {
        let lp = log_prior_slice(p, self.kind.prior());
        match (&self.dataset, self.kind.is_posterior()) {
            (Some(d), true) => combine(lp, log_likelihood_slice(p, d.counts())),
            _ => lp,
        }
    }

    pub fn log_density(&self, p: &ProbVector) -> Result<f64> {
        self.check_outcomes(p.len())?;
        Ok(self.log_density_slice(p.as_slice()))
    }
}

/// `ln r(p)` for the uniform-simplex reference, without the 0/1 quantum
/// factor.
pub fn log_ratio_r(p: &ProbVector, target: &TargetDensity) -> Result<f64> {
    target.log_density(p)
}
