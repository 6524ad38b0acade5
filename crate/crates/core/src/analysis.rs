//! Post-processing of samples: region content, bounded-likelihood curves,
//! purity marginals and separable fractions.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densities::{log_likelihood_slice, Dataset};
use crate::linalg::{self, CMatrix};
use crate::physicality::{maximize_likelihood, AscentConfig};
use crate::quadrature::integrate_piecewise_offset;
use crate::quantum::{
    is_ppt_separable, purity, sample_ginibre, sample_prior_one, DensityOperator, Pom, PomKind, ProbVector,
};
use crate::samplers::{effective_sample_size, stream_rng, SampleMeta, WeightedSample};
use crate::{Error, Result};

/// A named membership test on the probability space.
#[derive(Clone)]
pub struct RegionPredicate {
    name: String,
    test: Arc<dyn Fn(&ProbVector) -> bool + Send + Sync>,
}

impl RegionPredicate {
    pub fn new(name: impl Into<String>, test: impl Fn(&ProbVector) -> bool + Send + Sync + 'static) -> Self {
        Self { name: name.into(), test: Arc::new(test) }
    }

    pub fn everything() -> Self {
        Self::new("everything", |_| true)
    }

    pub fn nothing() -> Self {
        Self::new("nothing", |_| false)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn contains(&self, p: &ProbVector) -> bool {
        (self.test)(p)
    }
}

impl fmt::Debug for RegionPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RegionPredicate").field("name", &self.name).finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

const BATCHES: usize = 50;

/// `Σ_R w / Σ w` with its delta-method standard error. For unit weights
/// the delta method reduces to the binomial formula. Chains use batch
/// sums in place of single points to absorb autocorrelation.
fn weighted_fraction(weights: &[f64], member: &[bool], markov: bool) -> Result<Estimate> {
    if weights.is_empty() {
        return Err(Error::EmptySample);
    }
    let den: f64 = weights.iter().sum();
    if !(den > 0.0) {
        return Err(Error::InvalidInput("sample has zero total weight".into()));
    }
    let num = weights.iter().zip(member).filter(|(_, &m)| m).fold(0.0, |acc, (w, _)| acc + w);
    let est = num / den;
    let n = weights.len();
    let var = if markov && n >= 2 * BATCHES {
        let mut ss = 0.0;
        for b in 0..BATCHES {
            let (lo, hi) = (b * n / BATCHES, (b + 1) * n / BATCHES);
            let (mut nb, mut db) = (0.0, 0.0);
            for j in lo..hi {
                db += weights[j];
                if member[j] {
                    nb += weights[j];
                }
            }
            ss += (nb - est * db).powi(2);
        }
        ss / (den * den) * BATCHES as f64 / (BATCHES - 1) as f64
    } else {
        weights
            .iter()
            .zip(member)
            .map(|(w, &m)| (if m { *w } else { 0.0 } - est * w).powi(2))
            .sum::<f64>()
            / (den * den)
    };
    Ok(Estimate { value: est.clamp(0.0, 1.0), std_error: var.sqrt() })
}

/// Weighted content of `region`: size for a prior sample, credibility for
/// a posterior sample.
pub fn region_probability(sample: &WeightedSample, region: &RegionPredicate) -> Result<Estimate> {
    let member: Vec<bool> = sample.points.iter().map(|p| region.contains(p)).collect();
    weighted_fraction(&sample.weights, &member, sample.meta.method.is_markov())
}

/// `λ = k/(n-1)` for `k = 0..n`.
pub fn default_lambda_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|k| k as f64 / (n - 1) as f64).collect(),
    }
}

/// Content of the bounded-likelihood regions `L(D|p) ≥ λ L_max` on a λ grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeCurve {
    pub lambdas: Vec<f64>,
    pub sizes: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub log_l_max: f64,
    pub meta: SampleMeta,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn check_grid(lambdas: &[f64]) -> Result<()> {
    if lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) {
        return Err(Error::InvalidInput("λ values must lie in [0, 1]".into()));
    }
    Ok(())
}

fn sample_log_likelihoods(sample: &WeightedSample, data: &Dataset) -> Result<Vec<f64>> {
    if sample.points.first().is_some_and(|p| p.len() != data.len()) {
        return Err(Error::DimensionMismatch { expected: sample.points[0].len(), got: data.len() });
    }
    Ok(sample.points.iter().map(|p| log_likelihood_slice(p.as_slice(), data.counts())).collect())
}

fn curve_from(
    lambdas: &[f64],
    weights: &[f64],
    log_l: &[f64],
    log_l_max: f64,
    markov: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut sizes = Vec::with_capacity(lambdas.len());
    let mut errs = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let threshold = if lambda == 0.0 { f64::NEG_INFINITY } else { lambda.ln() + log_l_max };
        let member: Vec<bool> = log_l.iter().map(|&l| lambda == 0.0 || l >= threshold).collect();
        let est = weighted_fraction(weights, &member, markov)?;
        sizes.push(est.value);
        errs.push(est.std_error);
    }
    Ok((sizes, errs))
}

fn dominance_warning(log_l: &[f64], log_l_max: f64) -> Option<String> {
    let top = log_l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (top > log_l_max + 1e-6 * log_l_max.abs().max(1.0))
        .then(|| format!("a sample point has ln L = {top} above the ML value {log_l_max}"))
}

/// `s_λ` from a prior sample. `L_max` comes from [`maximize_likelihood`].
pub fn size_curve(
    sample: &WeightedSample,
    data: &Dataset,
    pom: &Pom,
    lambdas: &[f64],
    cfg: &AscentConfig,
) -> Result<SizeCurve> {
    check_grid(lambdas)?;
    let (_, log_l_max) = maximize_likelihood(data, pom, cfg)?;
    let log_l = sample_log_likelihoods(sample, data)?;
    let (sizes, std_errors) = curve_from(lambdas, &sample.weights, &log_l, log_l_max, sample.meta.method.is_markov())?;
    let warnings = dominance_warning(&log_l, log_l_max).into_iter().collect();
    Ok(SizeCurve {
        lambdas: lambdas.to_vec(),
        sizes,
        std_errors,
        log_l_max,
        meta: sample.meta.clone(),
        warnings,
    })
}

/// Credibility `c_λ` of the same regions. A prior sample is reweighted by
/// `L(D|p)/L_max`; a posterior sample is used as it stands.
pub fn credibility_curve(
    sample: &WeightedSample,
    data: &Dataset,
    pom: &Pom,
    lambdas: &[f64],
    cfg: &AscentConfig,
) -> Result<SizeCurve> {
    check_grid(lambdas)?;
    let (_, log_l_max) = maximize_likelihood(data, pom, cfg)?;
    let log_l = sample_log_likelihoods(sample, data)?;
    let weights: Vec<f64> = if sample.meta.target.is_posterior() {
        sample.weights.clone()
    } else {
        sample
            .weights
            .iter()
            .zip(&log_l)
            .map(|(w, l)| if *w > 0.0 && l.is_finite() { w * (l - log_l_max).exp() } else { 0.0 })
            .collect()
    };
    let mut warnings: Vec<String> = dominance_warning(&log_l, log_l_max).into_iter().collect();
    let ess = effective_sample_size(&weights);
    if ess < 10.0 {
        warnings.push(format!("effective sample size {ess:.2} after reweighting is below 10"));
    }
    let (sizes, std_errors) = curve_from(lambdas, &weights, &log_l, log_l_max, sample.meta.method.is_markov())?;
    let mut meta = sample.meta.clone();
    meta.ess = ess;
    Ok(SizeCurve { lambdas: lambdas.to_vec(), sizes, std_errors, log_l_max, meta, warnings })
}

/// Weighted histogram normalized to unit integral over `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    /// Summed weight per bin.
    pub weights: Vec<f64>,
    pub densities: Vec<f64>,
    pub total_weight: f64,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.weights.len()
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins() as f64
    }

    pub fn edges(&self, i: usize) -> (f64, f64) {
        let h = self.width();
        (self.lo + i as f64 * h, self.lo + (i + 1) as f64 * h)
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.bins()).map(|i| self.lo + (i as f64 + 0.5) * self.width()).collect()
    }
}

const RANGE_SLACK: f64 = 1e-9;

pub fn histogram(values: &[f64], weights: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Histogram> {
    if bins == 0 || !(hi > lo) {
        return Err(Error::InvalidInput("histogram needs bins > 0 and hi > lo".into()));
    }
    if values.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: values.len(), got: weights.len() });
    }
    let h = (hi - lo) / bins as f64;
    let mut acc = vec![0.0; bins];
    for (&v, &w) in values.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        if v < lo - RANGE_SLACK || v > hi + RANGE_SLACK {
            return Err(Error::OutsideSupport { value: v, lo, hi });
        }
        let i = (((v - lo) / h).floor().max(0.0) as usize).min(bins - 1);
        acc[i] += w;
    }
    let total: f64 = acc.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptySample);
    }
    let densities = acc.iter().map(|w| w / (total * h)).collect();
    Ok(Histogram { lo, hi, weights: acc, densities, total_weight: total })
}

/// Purity histogram on `[1/d, 1]`.
pub fn purity_histogram(purities: &[f64], weights: &[f64], dim: usize, bins: usize) -> Result<Histogram> {
    histogram(purities, weights, 1.0 / dim as f64, 1.0, bins)
}

/// Purity of the state behind each point: `6Σp² − 1` for the tetrahedron,
/// linear reconstruction for other informationally complete POMs.
pub fn sample_purities(sample: &WeightedSample, pom: &Pom) -> Result<Vec<f64>> {
    if pom.kind() == PomKind::Tetrahedron {
        return Ok(sample.points.iter().map(|p| 6.0 * p.sum_of_squares() - 1.0).collect());
    }
    let rec = pom.ic_reconstructor()?;
    sample
        .points
        .iter()
        .map(|p| Ok(linalg::frobenius_norm_sq(&rec.reconstruct(p.as_slice())?)))
        .collect()
}

pub fn state_purities(states: &[DensityOperator]) -> Vec<f64> {
    states.iter().map(|s| purity(s).0).collect()
}

/// Reconstructed states of the nonzero-weight points of a sample.
pub fn sample_states(sample: &WeightedSample, pom: &Pom) -> Result<Vec<DensityOperator>> {
    if sample.weights.iter().any(|&w| w != 0.0 && w != 1.0) {
        return Err(Error::Unsupported("state extraction from a non-uniformly weighted sample".into()));
    }
    let rec = pom.ic_reconstructor()?;
    sample
        .points
        .iter()
        .zip(&sample.weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(p, _)| {
            let m: CMatrix = rec.reconstruct(p.as_slice())?;
            DensityOperator::new(m)
        })
        .collect()
}

/// Which state ensemble a purity density describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PriorModel {
    /// Uniform spectrum, Haar eigenbasis.
    I,
    /// Ginibre `AA†/tr{AA†}`; the primitive prior for IC POMs.
    II,
}

impl FromStr for PriorModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "i" | "1" => Ok(Self::I),
            "II" | "ii" | "2" => Ok(Self::II),
            _ => Err(Error::InvalidInput(format!("unknown prior `{s}`, expected I or II"))),
        }
    }
}

impl fmt::Display for PriorModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::I => "I",
            Self::II => "II",
        })
    }
}

/// Closed-form purity density `q(ξ)` for one prior and dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PurityDensity {
    pub prior: PriorModel,
    pub dim: usize,
}

impl PurityDensity {
    pub fn new(prior: PriorModel, dim: usize) -> Result<Self> {
        if !(2..=4).contains(&dim) {
            return Err(Error::Unsupported(format!("no purity density for dimension {dim}")));
        }
        Ok(Self { prior, dim })
    }

    /// `[1/d, 1]`.
    pub fn support(&self) -> (f64, f64) {
        (1.0 / self.dim as f64, 1.0)
    }

    /// The part of the support where a formula is available.
    pub fn known_range(&self) -> (f64, f64) {
        match (self.prior, self.dim) {
            (PriorModel::II, 3) => (1.0 / 3.0, 0.5),
            (PriorModel::II, 4) => (0.25, 1.0 / 3.0),
            _ => self.support(),
        }
    }

    /// False for the partial forms, which hold only up to a constant.
    pub fn is_normalized(&self) -> bool {
        self.prior == PriorModel::I || self.dim == 2
    }

    /// Points where the formula changes branch.
    pub fn breakpoints(&self) -> Vec<f64> {
        match (self.prior, self.dim) {
            (PriorModel::I, 3) => vec![0.5],
            (PriorModel::I, 4) => vec![1.0 / 3.0, 0.5],
            _ => Vec::new(),
        }
    }

    pub fn evaluate(&self, xi: f64) -> Result<f64> {
        self.evaluate_above(xi, xi - self.support().0)
    }

    /// `q(ξ)` given `ξ` and `ξ − 1/d`; the factors `dξ − 1` are formed from
    /// the latter so that the `d = 2` singularity resolves.
    fn evaluate_above(&self, xi: f64, above: f64) -> Result<f64> {
        let (lo, hi) = self.support();
        if !(xi >= lo - 1e-12 && xi <= hi + 1e-12) {
            return Err(Error::OutsideSupport { value: xi, lo, hi });
        }
        let (klo, khi) = self.known_range();
        if xi < klo - 1e-12 || xi > khi + 1e-12 {
            return Err(Error::Unsupported(format!(
                "prior-II purity density for d = {} is only known on [{klo}, {khi}]",
                self.dim
            )));
        }
        // d ξ − 1
        let lin = (self.dim as f64 * above).max(0.0);
        let asin = |x: f64| x.clamp(-1.0, 1.0).asin();
        let acos = |x: f64| x.clamp(-1.0, 1.0).acos();
        let v = match (self.prior, self.dim) {
            (PriorModel::I, 2) => 1.0 / lin.sqrt(),
            (PriorModel::I, 3) => {
                if xi <= 0.5 {
                    2.0 * PI / 3f64.sqrt()
                } else {
                    3f64.sqrt() * (PI / 6.0 - asin((3.0 * xi - 2.0) / lin))
                }
            }
            (PriorModel::I, 4) => {
                let r = lin.sqrt();
                if xi <= 1.0 / 3.0 {
                    3.0 * PI * r
                } else if xi <= 0.5 {
                    2.0 * 3f64.sqrt() * PI - 3.0 * PI * r
                } else {
                    // Both branches listed for [1/2, 1] contribute.
                    3.0 * 3f64.sqrt() * (acos((3.0 * xi - 2.0) / (3.0 * xi - 1.0)) - PI / 3.0)
                        - 9.0 * r * (asin(xi / (3.0 * xi - 1.0)) - PI / 6.0)
                }
            }
            (PriorModel::II, 2) => 3.0 * lin.sqrt(),
            (PriorModel::II, 3) => lin.powi(3),
            (PriorModel::II, 4) => lin.powf(6.5),
            _ => unreachable!("dimension checked in new"),
        };
        Ok(v.max(0.0))
    }

    /// `∫_a^b q dξ` by quadrature, split at the branch points.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        let (klo, khi) = self.known_range();
        if a < klo - 1e-12 || b > khi + 1e-12 || b < a {
            return Err(Error::Unsupported(format!("no closed form over [{a}, {b}]")));
        }
        let (a, b) = (a.max(klo), b.min(khi));
        let base = a - self.support().0;
        let f = |x: f64, dx: f64| self.evaluate_above(x, base + dx).unwrap_or(0.0);
        Ok(integrate_piecewise_offset(f, a, b, &self.breakpoints(), 1e-13))
    }

    /// Mean of `q` over `[a, b]`, comparable to a histogram bin.
    pub fn bin_average(&self, a: f64, b: f64) -> Result<f64> {
        Ok(self.integral(a, b)? / (b - a))
    }
}

pub fn analytic_purity_density(prior: PriorModel, dim: usize, xi: f64) -> Result<f64> {
    PurityDensity::new(prior, dim)?.evaluate(xi)
}

const STATE_BLOCK: usize = 4096;

/// `n` random states of dimension `dim`, one RNG stream per block of 4096.
pub fn random_states(prior: PriorModel, dim: usize, n: usize, seed: u64, threads: usize) -> Result<Vec<DensityOperator>> {
    if dim < 2 {
        return Err(Error::InvalidInput("dimension must be at least 2".into()));
    }
    let block = |b: usize| {
        let mut rng = stream_rng(seed, b as u64);
        let len = STATE_BLOCK.min(n - b * STATE_BLOCK);
        (0..len)
            .map(|_| match prior {
                PriorModel::I => sample_prior_one(dim, &mut rng),
                PriorModel::II => sample_ginibre(dim, &mut rng),
            })
            .collect::<Vec<_>>()
    };
    let blocks = n.div_ceil(STATE_BLOCK);
    let out: Vec<Vec<DensityOperator>> = if threads <= 1 {
        (0..blocks).map(block).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
        pool.install(|| (0..blocks).into_par_iter().map(block).collect())
    };
    Ok(out.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableBin {
    pub purity_lo: f64,
    pub purity_hi: f64,
    pub count: usize,
    /// `None` for an empty bin.
    pub fraction: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableFraction {
    pub overall: Estimate,
    pub count: usize,
    pub bins: Vec<SeparableBin>,
}

fn binomial(k: usize, n: usize) -> Estimate {
    let f = k as f64 / n as f64;
    Estimate { value: f, std_error: (f * (1.0 - f) / n as f64).sqrt() }
}

/// PPT fraction of two-qubit states, optionally per equal-width purity bin
/// on `[1/4, 1]`.
pub fn separable_fraction(states: &[DensityOperator], bins: Option<usize>) -> Result<SeparableFraction> {
    if states.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(s) = states.iter().find(|s| s.dim() != 4) {
        return Err(Error::DimensionMismatch { expected: 4, got: s.dim() });
    }
    let flags: Vec<(bool, f64)> = states
        .par_iter()
        .map(|s| Ok((is_ppt_separable(s)?, purity(s).0)))
        .collect::<Result<_>>()?;
    let sep = flags.iter().filter(|f| f.0).count();
    let overall = binomial(sep, states.len());
    let mut out_bins = Vec::new();
    if let Some(nb) = bins.filter(|&b| b > 0) {
        let (lo, hi) = (0.25, 1.0);
        let h = (hi - lo) / nb as f64;
        let mut tot = vec![0usize; nb];
        let mut yes = vec![0usize; nb];
        for &(s, xi) in &flags {
            let i = (((xi - lo) / h).floor().max(0.0) as usize).min(nb - 1);
            tot[i] += 1;
            if s {
                yes[i] += 1;
            }
        }
        for i in 0..nb {
            out_bins.push(SeparableBin {
                purity_lo: lo + i as f64 * h,
                purity_hi: lo + (i + 1) as f64 * h,
                count: tot[i],
                fraction: (tot[i] > 0).then(|| binomial(yes[i], tot[i])),
            });
        }
    }
    Ok(SeparableFraction { overall, count: states.len(), bins: out_bins })
}
