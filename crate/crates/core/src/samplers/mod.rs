//! Sample generation: uniform simplex draws, independence sampling
//! (rejection and importance) and Metropolis-Hastings random walks.
//!
//! Randomness comes from ChaCha8 streams keyed by `(seed, stream)`. Each
//! independence block and each chain owns one stream, so output depends on
//! the seed alone and not on how many worker threads ran.

pub mod independence;
pub mod mcmc;
pub mod simplex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::densities::TargetKind;
use crate::physicality::CheckStrategy;
use crate::quantum::ProbVector;
use crate::{Error, Result};

pub use independence::{importance_sample, rejection_sample, SamplerOptions};
pub use mcmc::{
    mhmc_generic, tune_step_size, xmhmc_multi, xmhmc_sample, ChainConfig, ChainTrace, StepSizeTuning,
};
pub use simplex::{sample_simplex_exponential, sample_simplex_spacings};

pub const RNG_NAME: &str = "ChaCha8Rng::seed_from_u64(seed).set_stream(index)";

/// Generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMethod {
    Reject,
    Importance,
    Mcmc,
}

impl std::str::FromStr for SamplingMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reject" => Ok(Self::Reject),
            "importance" => Ok(Self::Importance),
            "mcmc" => Ok(Self::Mcmc),
            other => Err(Error::InvalidInput(format!("unknown method `{other}`"))),
        }
    }
}

impl SamplingMethod {
    /// Whether consecutive points are correlated.
    pub fn is_markov(self) -> bool {
        self == Self::Mcmc
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub method: SamplingMethod,
    pub pom: String,
    pub target: TargetKind,
    pub seed: u64,
    pub rng: String,
    pub check: CheckStrategy,
    /// Proposals drawn (MCMC: post-burn-in steps).
    pub proposals_total: u64,
    /// Proposals kept (MCMC: accepted moves after burn-in).
    pub accepted: u64,
    /// Proposals that passed the physicality check.
    pub physical: u64,
    /// `accepted / proposals_total`.
    pub acceptance_rate: f64,
    /// `(Σw)² / Σw²`.
    pub ess: f64,
    /// Summed iterations or evaluations spent in physicality checks.
    pub check_work: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub step_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub log_r_bound: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

/// Points with nonnegative weights; weight 1 throughout for rejection and
/// MCMC output, and weight 0 marks an unphysical importance draw.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    pub points: Vec<ProbVector>,
    pub weights: Vec<f64>,
    pub meta: SampleMeta,
}

impl WeightedSample {
    pub fn new(points: Vec<ProbVector>, weights: Vec<f64>, meta: SampleMeta) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput("weights must be finite and nonnegative".into()));
        }
        Ok(Self { points, weights, meta })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn effective_sample_size(&self) -> f64 {
        effective_sample_size(&self.weights)
    }

    /// Appends `other`, keeping this sample's points first. Counters add up
    /// and the acceptance rate is recomputed from them.
    pub fn merge(mut self, other: WeightedSample) -> Result<Self> {
        if self.meta.pom != other.meta.pom || self.meta.target != other.meta.target {
            return Err(Error::InvalidInput("cannot merge samples of different targets".into()));
        }
        if self.meta.method == SamplingMethod::Importance || other.meta.method == SamplingMethod::Importance {
            // Importance weights carry a per-sample shift.
            return Err(Error::Unsupported("merging importance samples".into()));
        }
        self.points.extend(other.points);
        self.weights.extend(other.weights);
        let m = &mut self.meta;
        m.proposals_total += other.meta.proposals_total;
        m.accepted += other.meta.accepted;
        m.physical += other.meta.physical;
        m.check_work += other.meta.check_work;
        m.acceptance_rate = ratio(m.accepted, m.proposals_total);
        m.warnings.extend(other.meta.warnings);
        m.ess = effective_sample_size(&self.weights);
        Ok(self)
    }
}

pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    if s2 > 0.0 {
        s * s / s2
    } else {
        0.0
    }
}

pub(crate) fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}
