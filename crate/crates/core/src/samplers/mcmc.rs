//! Metropolis-Hastings random walks.
//!
//! [`xmhmc_sample`] walks on the unit hypersphere `x` with `p = x²`. The
//! change of variables contributes `∏|x_k| = ∏√p_k`, so the Jeffreys prior
//! becomes flat in `x` and only the quantum constraint shapes the walk.

use rand::Rng;
use rand_distr::{Open01, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ratio, stream_rng, SampleMeta, SamplingMethod, WeightedSample, RNG_NAME};
use crate::densities::TargetDensity;
use crate::physicality::PhysicalityChecker;
use crate::quantum::{born_probabilities, DensityOperator, ProbVector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Proposal standard deviation per coordinate.
    pub step_sigma: f64,
    /// Total steps including burn-in.
    pub length: usize,
    pub burn_in: usize,
    pub thinning: usize,
    /// Adapt σ during burn-in, then freeze it.
    pub tune: bool,
    pub tune_target: f64,
    pub seed: u64,
}

impl ChainConfig {
    /// A chain that emits `points` states after a 10% burn-in.
    pub fn for_points(points: usize, seed: u64) -> Self {
        let burn_in = (points / 10).max(1);
        Self {
            step_sigma: 0.1,
            length: burn_in + points,
            burn_in,
            thinning: 1,
            tune: true,
            tune_target: 0.23,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_sigma > 0.0) {
            return Err(Error::InvalidInput("step_sigma must be positive".into()));
        }
        if self.burn_in >= self.length {
            return Err(Error::InvalidInput("burn_in must be shorter than the chain".into()));
        }
        if self.thinning == 0 {
            return Err(Error::InvalidInput("thinning must be at least 1".into()));
        }
        Ok(())
    }

    pub fn emitted(&self) -> usize {
        (self.length - self.burn_in).div_ceil(self.thinning)
    }
}

/// States visited by [`mhmc_generic`], the starting point included.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace {
    pub states: Vec<Vec<f64>>,
    pub accepted: usize,
    pub proposed: usize,
}

impl ChainTrace {
    pub fn acceptance_rate(&self) -> f64 {
        ratio(self.accepted as u64, self.proposed as u64)
    }
}

/// Proposal widths beyond the sphere's diameter change nothing.
const SIGMA_MAX: f64 = 2.0;

fn accept<R: Rng + ?Sized>(log_a: f64, rng: &mut R) -> bool {
    if log_a >= 0.0 {
        return true;
    }
    let b: f64 = rng.sample(Open01);
    b.ln() < log_a
}

/// Metropolis-Hastings with a symmetric proposal: accept `θ*` with
/// probability `min{f(θ*)/f(θ), 1}`, otherwise repeat `θ`.
pub fn mhmc_generic<F, P, R>(
    mut log_target: F,
    mut propose: P,
    start: Vec<f64>,
    length: usize,
    rng: &mut R,
) -> Result<ChainTrace>
where
    F: FnMut(&[f64]) -> f64,
    P: FnMut(&[f64], &mut R) -> Vec<f64>,
    R: Rng + ?Sized,
{
    let mut cur_log = log_target(&start);
    if !cur_log.is_finite() {
        return Err(Error::ZeroDensityStart);
    }
    let mut cur = start;
    let mut states = Vec::with_capacity(length);
    states.push(cur.clone());
    let mut accepted = 0;
    for _ in 1..length {
        let cand = propose(&cur, rng);
        let cand_log = log_target(&cand);
        if accept(cand_log - cur_log, rng) {
            cur = cand;
            cur_log = cand_log;
            accepted += 1;
        }
        states.push(cur.clone());
    }
    Ok(ChainTrace { states, accepted, proposed: length.saturating_sub(1) })
}

/// `Σ ln|x_k|` plus the target log-density at `p = x²`, without the
/// quantum factor. `None` when some `p_k` vanishes.
fn log_density_x(x: &[f64], target: &TargetDensity) -> (f64, Vec<f64>) {
    let norm2: f64 = x.iter().map(|v| v * v).sum();
    let p: Vec<f64> = x.iter().map(|v| v * v / norm2).collect();
    if p.iter().any(|&v| v <= 0.0) {
        return (f64::NEG_INFINITY, p);
    }
    let jac: f64 = 0.5 * p.iter().map(|v| v.ln()).sum::<f64>();
    (jac + target.log_density_slice(&p), p)
}

struct ChainOutput {
    points: Vec<ProbVector>,
    accepted: u64,
    proposed: u64,
    physical: u64,
    work: u64,
    sigma: f64,
}

fn run_chain(
    target: &TargetDensity,
    checker: &PhysicalityChecker,
    cfg: &ChainConfig,
    stream: u64,
) -> Result<ChainOutput> {
    cfg.validate()?;
    let pom = checker.pom();
    let k = pom.num_outcomes();
    let mut rng = stream_rng(cfg.seed, stream);

    let p1 = born_probabilities(&DensityOperator::maximally_mixed(pom.dim()), pom)?;
    let mut x: Vec<f64> = p1.as_slice().iter().map(|v| v.sqrt()).collect();
    let (mut cur_log, mut cur_p) = log_density_x(&x, target);
    if !cur_log.is_finite() {
        return Err(Error::ZeroDensityStart);
    }

    let mut sigma = cfg.step_sigma;
    // short burn-ins still get about ten adjustments
    let window = (cfg.burn_in / 10).clamp(10, 100);
    let mut window_accepts = 0usize;
    let mut points = Vec::with_capacity(cfg.emitted());
    let (mut accepted, mut proposed, mut physical, mut work) = (0u64, 0u64, 0u64, 0u64);
    let mut cand = vec![0.0; k];

    for step in 0..cfg.length {
        let in_burn_in = step < cfg.burn_in;
        for (c, xi) in cand.iter_mut().zip(&x) {
            let z: f64 = rng.sample(StandardNormal);
            *c = xi + sigma * z;
        }
        let norm = cand.iter().map(|v| v * v).sum::<f64>().sqrt();
        cand.iter_mut().for_each(|v| *v /= norm);
        let (cand_log, cand_p) = log_density_x(&cand, target);

        // w_qu is 0 or 1: the check only matters if the rest would accept.
        let mut moved = false;
        if accept(cand_log - cur_log, &mut rng) {
            let v = checker.check(&cand_p)?;
            work += v.work as u64;
            if v.physical {
                if !in_burn_in {
                    physical += 1;
                }
                x.copy_from_slice(&cand);
                cur_log = cand_log;
                cur_p = cand_p;
                moved = true;
            }
        }

        if in_burn_in {
            if moved {
                window_accepts += 1;
            }
            if cfg.tune && (step + 1) % window == 0 {
                let rate = window_accepts as f64 / window as f64;
                sigma *= if rate > cfg.tune_target { 1.1 } else { 0.9 };
                sigma = sigma.min(SIGMA_MAX);
                window_accepts = 0;
            }
        } else {
            proposed += 1;
            if moved {
                accepted += 1;
            }
            if (step - cfg.burn_in) % cfg.thinning == 0 {
                points.push(ProbVector::normalized(cur_p.clone())?);
            }
        }
    }
    Ok(ChainOutput { points, accepted, proposed, physical, work, sigma })
}

fn chain_sample(
    target: &TargetDensity,
    checker: &PhysicalityChecker,
    cfg: &ChainConfig,
    out: ChainOutput,
) -> Result<WeightedSample> {
    let n = out.points.len();
    let meta = SampleMeta {
        method: SamplingMethod::Mcmc,
        pom: checker.pom().name().to_string(),
        target: target.kind(),
        seed: cfg.seed,
        rng: RNG_NAME.to_string(),
        check: checker.strategy(),
        proposals_total: out.proposed,
        accepted: out.accepted,
        physical: out.physical,
        acceptance_rate: ratio(out.accepted, out.proposed),
        ess: n as f64,
        check_work: out.work,
        step_sigma: Some(out.sigma),
        log_r_bound: None,
        warnings: Vec::new(),
    };
    WeightedSample::new(out.points, vec![1.0; n], meta)
}

/// Hypersphere random walk started from the maximally mixed state.
/// All emitted weights are 1; `meta.step_sigma` is the frozen σ.
pub fn xmhmc_sample(
    target: &TargetDensity,
    checker: &PhysicalityChecker,
    cfg: &ChainConfig,
) -> Result<WeightedSample> {
    target.check_outcomes(checker.pom().num_outcomes())?;
    let out = run_chain(target, checker, cfg, 0)?;
    chain_sample(target, checker, cfg, out)
}

/// Independent chains on streams `0..n_chains`, concatenated in chain order.
pub fn xmhmc_multi(
    target: &TargetDensity,
    checker: &PhysicalityChecker,
    cfg: &ChainConfig,
    n_chains: usize,
    threads: usize,
) -> Result<WeightedSample> {
    target.check_outcomes(checker.pom().num_outcomes())?;
    let run = |i: usize| run_chain(target, checker, cfg, i as u64);
    let outs: Vec<ChainOutput> = if threads <= 1 {
        (0..n_chains).map(run).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
        pool.install(|| (0..n_chains).into_par_iter().map(run).collect::<Result<_>>())?
    };
    let mut merged: Option<WeightedSample> = None;
    for out in outs {
        let s = chain_sample(target, checker, cfg, out)?;
        merged = Some(match merged {
            None => s,
            Some(m) => m.merge(s)?,
        });
    }
    merged.ok_or_else(|| Error::InvalidInput("no chains requested".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSizeTuning {
    pub sigma: f64,
    /// `(σ, acceptance rate)` per probe.
    pub table: Vec<(f64, f64)>,
}

/// Short untuned probe chains per σ; picks the acceptance closest to 23%.
pub fn tune_step_size(
    target: &TargetDensity,
    checker: &PhysicalityChecker,
    sigma_grid: &[f64],
    probe_length: usize,
    seed: u64,
) -> Result<StepSizeTuning> {
    if sigma_grid.is_empty() {
        return Err(Error::InvalidInput("empty σ grid".into()));
    }
    let mut table = Vec::with_capacity(sigma_grid.len());
    for (i, &sigma) in sigma_grid.iter().enumerate() {
        let burn_in = (probe_length / 10).max(1);
        let cfg = ChainConfig {
            step_sigma: sigma,
            length: burn_in + probe_length,
            burn_in,
            thinning: 1,
            tune: false,
            tune_target: 0.23,
            seed,
        };
        let out = run_chain(target, checker, &cfg, i as u64)?;
        table.push((sigma, ratio(out.accepted, out.proposed)));
    }
    let target_rate = 0.23;
    let sigma = table
        .iter()
        .min_by(|a, b| (a.1 - target_rate).abs().total_cmp(&(b.1 - target_rate).abs()))
        .map(|t| t.0)
        .expect("non-empty table");
    Ok(StepSizeTuning { sigma, table })
}
