//! Rejection and importance sampling against the uniform simplex.

use rand::Rng;
use rayon::prelude::*;

use super::simplex::sample_simplex_exponential;
use super::{effective_sample_size, ratio, stream_rng, SampleMeta, SamplingMethod, WeightedSample, RNG_NAME};
use crate::densities::TargetDensity;
use crate::physicality::PhysicalityChecker;
use crate::quantum::ProbVector;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerOptions {
    /// Worker threads; 1 runs inline.
    pub threads: usize,
    /// Proposals per RNG stream.
    pub block_size: usize,
    /// Rejection sampling gives up after this many proposals.
    pub max_proposals: u64,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self { threads: 1, block_size: 4096, max_proposals: 100_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fate {
    Unphysical,
    Rejected,
    Accepted,
}

struct Block {
    points: Vec<ProbVector>,
    fates: Vec<Fate>,
    log_r: Vec<f64>,
    work: u64,
}

/// Draws one block of proposals. With `log_bound` set, physical points are
/// accepted with probability `exp(min(ln r - ln R, 0))`.
fn run_block(
    checker: &PhysicalityChecker,
    target: &TargetDensity,
    seed: u64,
    index: u64,
    n: usize,
    log_bound: Option<f64>,
) -> Result<Block> {
    let k = checker.pom().num_outcomes();
    let mut rng = stream_rng(seed, index);
    let mut block = Block {
        points: Vec::with_capacity(n),
        fates: Vec::with_capacity(n),
        log_r: Vec::with_capacity(n),
        work: 0,
    };
    for _ in 0..n {
        let p = sample_simplex_exponential(k, &mut rng);
        let v = checker.check(p.as_slice())?;
        block.work += v.work as u64;
        let (fate, lr) = if v.physical {
            let lr = target.log_density_slice(p.as_slice());
            match log_bound {
                Some(bound) => {
                    let log_a = (lr - bound).min(0.0);
                    let u: f64 = rng.random();
                    if u < log_a.exp() {
                        (Fate::Accepted, lr)
                    } else {
                        (Fate::Rejected, lr)
                    }
                }
                None => (Fate::Accepted, lr),
            }
        } else {
            (Fate::Unphysical, f64::NEG_INFINITY)
        };
        block.points.push(p);
        block.fates.push(fate);
        block.log_r.push(lr);
    }
    Ok(block)
}

fn run_blocks(
    checker: &PhysicalityChecker,
    target: &TargetDensity,
    seed: u64,
    range: std::ops::Range<u64>,
    sizes: impl Fn(u64) -> usize + Sync,
    log_bound: Option<f64>,
    threads: usize,
) -> Result<Vec<Block>> {
    if threads <= 1 {
        return range
            .map(|b| run_block(checker, target, seed, b, sizes(b), log_bound))
            .collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    pool.install(|| {
        range
            .into_par_iter()
            .map(|b| run_block(checker, target, seed, b, sizes(b), log_bound))
            .collect()
    })
}

/// Rejection sampling until `n_accept_goal` points are accepted.
///
/// `log_r_bound` must dominate `ln r` on the physical region: 0 for the
/// primitive prior, `ln L_max` for the primitive posterior. Under the
/// Jeffreys prior no finite bound exists and the result follows the
/// density capped at the bound.
pub fn rejection_sample(
    target: &TargetDensity,
    checker: &PhysicalityChecker,
    n_accept_goal: usize,
    seed: u64,
    log_r_bound: f64,
    opts: &SamplerOptions,
) -> Result<WeightedSample> {
    target.check_outcomes(checker.pom().num_outcomes())?;
    let bs = opts.block_size.max(1);
    let mut points = Vec::with_capacity(n_accept_goal);
    let mut proposals = 0u64;
    let mut physical = 0u64;
    let mut work = 0u64;
    let mut next_block = 0u64;
    let round = opts.threads.max(1) as u64;

    'outer: while points.len() < n_accept_goal {
        if proposals >= opts.max_proposals {
            break;
        }
        let blocks = run_blocks(checker, target, seed, next_block..next_block + round, |_| bs, Some(log_r_bound), opts.threads)?;
        next_block += round;
        for block in blocks {
            work += block.work;
            for (p, fate) in block.points.into_iter().zip(block.fates) {
                proposals += 1;
                if fate != Fate::Unphysical {
                    physical += 1;
                }
                if fate == Fate::Accepted {
                    points.push(p);
                    if points.len() == n_accept_goal {
                        break 'outer;
                    }
                }
                if proposals >= opts.max_proposals {
                    break 'outer;
                }
            }
        }
    }

    if points.is_empty() && n_accept_goal > 0 {
        return Err(Error::NoAcceptance { proposals, physical });
    }
    let accepted = points.len() as u64;
    let weights = vec![1.0; points.len()];
    let mut warnings = Vec::new();
    if points.len() < n_accept_goal {
        warnings.push(format!(
            "proposal budget of {} exhausted with {} of {} points accepted",
            opts.max_proposals, accepted, n_accept_goal
        ));
    }
    let meta = SampleMeta {
        method: SamplingMethod::Reject,
        pom: checker.pom().name().to_string(),
        target: target.kind(),
        seed,
        rng: RNG_NAME.to_string(),
        check: checker.strategy(),
        proposals_total: proposals,
        accepted,
        physical,
        acceptance_rate: ratio(accepted, proposals),
        ess: points.len() as f64,
        check_work: work,
        step_sigma: None,
        log_r_bound: Some(log_r_bound),
        warnings,
    };
    WeightedSample::new(points, weights, meta)
}

/// Importance sampling with `n_points` uniform simplex proposals. Weights
/// are `r(p)` shifted by the largest observed `ln r`; unphysical proposals
/// stay in the sample with weight 0.
pub fn importance_sample(
    target: &TargetDensity,
    checker: &PhysicalityChecker,
    n_points: usize,
    seed: u64,
    opts: &SamplerOptions,
) -> Result<WeightedSample> {
    target.check_outcomes(checker.pom().num_outcomes())?;
    let bs = opts.block_size.max(1);
    let n_blocks = n_points.div_ceil(bs) as u64;
    let sizes = |b: u64| {
        let start = b as usize * bs;
        bs.min(n_points - start)
    };
    let blocks = run_blocks(checker, target, seed, 0..n_blocks, sizes, None, opts.threads)?;

    let mut points = Vec::with_capacity(n_points);
    let mut log_r = Vec::with_capacity(n_points);
    let mut physical = 0u64;
    let mut work = 0u64;
    for block in blocks {
        work += block.work;
        for ((p, fate), lr) in block.points.into_iter().zip(block.fates).zip(block.log_r) {
            if fate != Fate::Unphysical {
                physical += 1;
            }
            points.push(p);
            log_r.push(lr);
        }
    }
    let shift = log_r.iter().copied().filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_r
        .iter()
        .map(|&lr| if lr.is_finite() { (lr - shift).exp() } else { 0.0 })
        .collect();
    let ess = effective_sample_size(&weights);
    let mut warnings = Vec::new();
    if physical == 0 {
        warnings.push("no physical proposals; all weights are zero".into());
    }
    let meta = SampleMeta {
        method: SamplingMethod::Importance,
        pom: checker.pom().name().to_string(),
        target: target.kind(),
        seed,
        rng: RNG_NAME.to_string(),
        check: checker.strategy(),
        proposals_total: n_points as u64,
        accepted: physical,
        physical,
        acceptance_rate: ratio(physical, n_points as u64),
        ess,
        check_work: work,
        step_sigma: None,
        log_r_bound: if shift.is_finite() { Some(shift) } else { None },
        warnings,
    };
    WeightedSample::new(points, weights, meta)
}
