//! Command-line front end.
//!
//! Every output file starts with a header echoing the full [`RunConfig`],
//! with the seed resolved, so any run can be repeated exactly.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    credibility_curve, default_lambda_grid, purity_histogram, random_states, sample_purities, sample_states,
    separable_fraction, size_curve, state_purities, PriorModel, PurityDensity,
};
use crate::densities::{default_jeffreys_log_cap, Dataset, PriorKind, TargetDensity, TargetKind};
use crate::io::{self, StatesHeader, VERSION};
use crate::physicality::{maximize_likelihood, maximize_q, AscentConfig, AscentMethod, CheckStrategy, PhysicalityChecker};
use crate::quantum::{Pom, PomKind, ProbVector};
use crate::samplers::{
    importance_sample, rejection_sample, xmhmc_multi, ChainConfig, SampleMeta, SamplerOptions, SamplingMethod,
    WeightedSample, RNG_NAME,
};
use crate::{Error, Result};

pub const THREADS_ENV: &str = "QSS_THREADS";

#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[command(name = "qss", version, about = "Sampling from quantum probability spaces")]
pub struct RunConfig {
    /// Worker threads; the QSS_THREADS environment variable overrides this.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Draw a sample and write it as JSONL.
    Sample(SampleArgs),
    /// Decide whether a probability vector is physical.
    Check(CheckArgs),
    /// Tables from sample or state files.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Draw random density operators from prior I or II.
    States(StatesArgs),
    /// Compare sampling and checking strategies on matched jobs.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub pom: String,
    #[arg(long)]
    pub target: TargetKind,
    /// Counts (`11,4,5`) or a counts file; adds logL to every record.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub method: SamplingMethod,
    /// Accepted points (reject), proposals (importance) or chain points (mcmc).
    #[arg(short = 'n', long = "points")]
    pub n: usize,
    /// Generated and printed when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fixed proposal width for mcmc.
    #[arg(long, conflicts_with = "tune")]
    pub sigma: Option<f64>,
    /// Adapt the proposal width during burn-in (the default for mcmc).
    #[arg(long)]
    pub tune: bool,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    /// Burn-in steps per chain; 10% of the chain by default.
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Override of the rejection bound on ln r.
    #[arg(long, allow_hyphen_values = true)]
    pub log_r_bound: Option<f64>,
    #[arg(long)]
    pub check: Option<CheckStrategy>,
    #[arg(long, default_value = "cg")]
    pub ascent: AscentMethod,
    #[arg(long, default_value_t = 4096)]
    pub block_size: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CheckArgs {
    #[arg(long)]
    pub pom: String,
    /// Comma-separated probabilities.
    #[arg(long)]
    pub point: String,
    #[arg(long)]
    pub check: Option<CheckStrategy>,
    #[arg(long, default_value = "cg")]
    pub ascent: AscentMethod,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalyzeCommand {
    /// Purity histogram against the closed-form density.
    Purity(PurityArgs),
    /// Size (or credibility) of bounded-likelihood regions.
    SizeCurve(SizeCurveArgs),
    /// PPT-separable fraction, overall and per purity bin.
    Separable(SeparableArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PurityArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub prior: PriorModel,
    #[arg(long)]
    pub dim: usize,
    #[arg(long, default_value_t = 40)]
    pub bins: usize,
    /// POM for sample files; taken from the header when omitted.
    #[arg(long)]
    pub pom: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SizeCurveArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Counts or a counts file.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub pom: String,
    #[arg(long, default_value_t = 21)]
    pub lambdas: usize,
    /// Likelihood-weighted content instead of prior content.
    #[arg(long)]
    pub credibility: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SeparableArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 15)]
    pub bins: usize,
    #[arg(long)]
    pub pom: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct StatesArgs {
    #[arg(long)]
    pub prior: PriorModel,
    #[arg(long)]
    pub dim: usize,
    #[arg(short = 'n', long = "count")]
    pub n: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BenchArgs {
    #[arg(long, default_value = "tat")]
    pub pom: String,
    #[arg(short = 'n', long = "points", default_value_t = 10_000)]
    pub n: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Summary printed to standard error after every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub proposed: u64,
    pub accepted: u64,
    pub physical: u64,
    pub acceptance_rate: f64,
    pub wall_seconds: f64,
    pub rng: String,
    pub version: String,
}

impl RunReport {
    fn new(config: &RunConfig, meta: Option<&SampleMeta>, wall_seconds: f64) -> Self {
        let (proposed, accepted, physical) = meta.map_or((0, 0, 0), |m| (m.proposals_total, m.accepted, m.physical));
        let acceptance_rate = if proposed == 0 { 0.0 } else { accepted as f64 / proposed as f64 };
        Self {
            config: config.clone(),
            proposed,
            accepted,
            physical,
            acceptance_rate,
            wall_seconds,
            rng: RNG_NAME.to_string(),
            version: VERSION.to_string(),
        }
    }
}

/// Parses `argv` (program name first) and runs it. Exit codes: 0 success or
/// physical, 1 runtime error or unphysical, 2 bad usage.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let mut config = match RunConfig::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => config.threads = t,
            _ => {
                eprintln!("error: {THREADS_ENV} must be a positive integer, got `{v}`");
                return 2;
            }
        }
    }
    match execute(config) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn resolve_seed(seed: &mut Option<u64>) -> u64 {
    *seed.get_or_insert_with(|| {
        let nanos = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0);
        let s = nanos ^ ((std::process::id() as u64) << 32);
        eprintln!("seed: {s}");
        s
    })
}

fn report(config: &RunConfig, meta: Option<&SampleMeta>, start: Instant) -> Result<()> {
    let r = RunReport::new(config, meta, start.elapsed().as_secs_f64());
    eprintln!("{}", serde_json::to_string(&r)?);
    Ok(())
}

/// Runs a parsed configuration and returns the exit code.
pub fn execute(mut config: RunConfig) -> Result<i32> {
    let start = Instant::now();
    let threads = config.threads.max(1);
    match &mut config.command {
        Command::Sample(args) => {
            resolve_seed(&mut args.seed);
            let args = args.clone();
            let (sample, data) = run_sample(&args, threads)?;
            let echo = serde_json::to_value(&config)?;
            let header = io::sample_header(&sample, echo, data.as_ref());
            io::write_sample_file(&args.out, &header, &sample)?;
            for w in &sample.meta.warnings {
                eprintln!("warning: {w}");
            }
            report(&config, Some(&sample.meta), start)?;
            Ok(0)
        }
        Command::Check(args) => {
            let (physical, q_max) = run_check(args)?;
            println!("{}", if physical { "physical" } else { "unphysical" });
            println!("q_max {q_max:e}");
            Ok(if physical { 0 } else { 1 })
        }
        Command::Analyze(cmd) => {
            let cmd = cmd.clone();
            run_analyze(&cmd)?;
            report(&config, None, start)?;
            Ok(0)
        }
        Command::States(args) => {
            let seed = resolve_seed(&mut args.seed);
            let args = args.clone();
            if args.dim < 2 {
                return Err(Error::InvalidInput("dimension must be at least 2".into()));
            }
            let states = random_states(args.prior, args.dim, args.n, seed, threads)?;
            let header = StatesHeader {
                kind: "states".into(),
                version: VERSION.into(),
                count: states.len(),
                dim: args.dim,
                prior: args.prior,
                seed,
                rng: RNG_NAME.into(),
                config: serde_json::to_value(&config)?,
            };
            io::write_states(std::fs::File::create(&args.out)?, &header, &states)?;
            report(&config, None, start)?;
            Ok(0)
        }
        Command::Bench(args) => {
            let seed = resolve_seed(&mut args.seed);
            let args = args.clone();
            run_bench(&args, seed, threads)?;
            report(&config, None, start)?;
            Ok(0)
        }
    }
}

fn make_checker(pom: Pom, check: Option<CheckStrategy>, ascent: AscentMethod) -> Result<PhysicalityChecker> {
    let cfg = AscentConfig::default().with_method(ascent);
    match check {
        Some(s) => PhysicalityChecker::with_strategy(pom, cfg, s),
        None => Ok(PhysicalityChecker::new(pom, cfg)),
    }
}

fn run_sample(args: &SampleArgs, threads: usize) -> Result<(WeightedSample, Option<Dataset>)> {
    let pom = Pom::by_name(&args.pom)?;
    let data = args.data.as_deref().map(io::dataset_from_arg).transpose()?;
    if let Some(d) = &data {
        if d.len() != pom.num_outcomes() {
            return Err(Error::DimensionMismatch { expected: pom.num_outcomes(), got: d.len() });
        }
    }
    let target = TargetDensity::new(args.target, if args.target.is_posterior() { data.clone() } else { None })?;
    let checker = make_checker(pom, args.check, args.ascent)?;
    let seed = args.seed.expect("seed resolved");
    let opts = SamplerOptions { threads, block_size: args.block_size, ..Default::default() };
    let sample = match args.method {
        SamplingMethod::Reject => {
            let (bound, capped) = match args.log_r_bound {
                Some(b) => (b, false),
                None => default_log_r_bound(&target, &checker)?,
            };
            let mut s = rejection_sample(&target, &checker, args.n, seed, bound, &opts)?;
            if capped {
                s.meta.warnings.push(format!(
                    "the Jeffreys density is unbounded; sampling it capped at ln r = {bound:.3}"
                ));
            }
            s
        }
        SamplingMethod::Importance => importance_sample(&target, &checker, args.n, seed, &opts)?,
        SamplingMethod::Mcmc => {
            let chains = args.chains.max(1);
            if args.n % chains != 0 {
                return Err(Error::InvalidInput(format!("{} points do not split evenly over {chains} chains", args.n)));
            }
            let mut cfg = ChainConfig::for_points(args.n / chains, seed);
            if let Some(b) = args.burn_in {
                cfg.length = cfg.length - cfg.burn_in + b;
                cfg.burn_in = b;
            }
            if let Some(s) = args.sigma {
                cfg.step_sigma = s;
                cfg.tune = false;
            }
            xmhmc_multi(&target, &checker, &cfg, chains, threads)?
        }
    };
    Ok((sample, data))
}

/// Bound on `ln r` over the physical region and whether it is a cap.
fn default_log_r_bound(target: &TargetDensity, checker: &PhysicalityChecker) -> Result<(f64, bool)> {
    let log_l_max = match target.dataset() {
        Some(d) if target.kind().is_posterior() => maximize_likelihood(d, checker.pom(), checker.config())?.1,
        _ => 0.0,
    };
    Ok(match target.kind().prior() {
        PriorKind::Primitive => (log_l_max, false),
        PriorKind::Jeffreys => (log_l_max + default_jeffreys_log_cap(checker.pom().num_outcomes()), true),
    })
}

fn parse_point(s: &str) -> Result<ProbVector> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| Error::InvalidInput(format!("bad probability `{t}`: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let sum: f64 = v.iter().sum();
    if v.iter().any(|x| *x < 0.0) || (sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidProbabilities(format!("{s} is not on the probability simplex")));
    }
    ProbVector::normalized(v)
}

/// Verdict and the converged maximum of Q.
fn run_check(args: &CheckArgs) -> Result<(bool, f64)> {
    let pom = Pom::by_name(&args.pom)?;
    let p = parse_point(&args.point)?;
    let checker = make_checker(pom, args.check, args.ascent)?;
    let physical = checker.is_physical(p.as_slice())?;
    let q_max = match maximize_q(&p, checker.pom(), checker.config()) {
        Ok(out) => out.q_max,
        Err(Error::NonConvergence { best_q, .. }) => best_q,
        Err(e) => return Err(e),
    };
    Ok((physical, q_max))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(csv_error)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn pom_for(input_pom: &str, override_pom: Option<&str>) -> Result<Pom> {
    Pom::by_name(override_pom.unwrap_or(input_pom))
}

fn run_analyze(cmd: &AnalyzeCommand) -> Result<()> {
    match cmd {
        AnalyzeCommand::Purity(a) => {
            let (purities, weights) = match io::file_kind(&a.input)?.as_str() {
                "states" => {
                    let (h, states) = io::read_states_file(&a.input)?;
                    if h.dim != a.dim {
                        return Err(Error::DimensionMismatch { expected: a.dim, got: h.dim });
                    }
                    (state_purities(&states), vec![1.0; states.len()])
                }
                _ => {
                    let (h, s) = io::read_sample_file(&a.input)?;
                    let pom = pom_for(&h.meta.pom, a.pom.as_deref())?;
                    if pom.dim() != a.dim {
                        return Err(Error::DimensionMismatch { expected: a.dim, got: pom.dim() });
                    }
                    (sample_purities(&s, &pom)?, s.weights)
                }
            };
            let hist = purity_histogram(&purities, &weights, a.dim, a.bins)?;
            let analytic = PurityDensity::new(a.prior, a.dim).ok().filter(|q| q.is_normalized());
            let mut w = csv_writer(&a.out)?;
            w.write_record(["bin_center", "empirical_density", "analytic_density_or_NA"]).map_err(csv_error)?;
            for (i, (center, dens)) in hist.centers().into_iter().zip(&hist.densities).enumerate() {
                let (lo, hi) = hist.edges(i);
                let an = match &analytic {
                    Some(q) => q.bin_average(lo, hi.min(1.0))?.to_string(),
                    None => "NA".to_string(),
                };
                w.write_record([center.to_string(), dens.to_string(), an]).map_err(csv_error)?;
            }
            w.flush()?;
        }
        AnalyzeCommand::SizeCurve(a) => {
            let (_, s) = io::read_sample_file(&a.input)?;
            let data = io::dataset_from_arg(&a.data)?;
            let pom = Pom::by_name(&a.pom)?;
            let grid = default_lambda_grid(a.lambdas);
            let cfg = AscentConfig::default();
            let curve = if a.credibility {
                credibility_curve(&s, &data, &pom, &grid, &cfg)?
            } else {
                size_curve(&s, &data, &pom, &grid, &cfg)?
            };
            for warning in &curve.warnings {
                eprintln!("warning: {warning}");
            }
            let mut w = csv_writer(&a.out)?;
            w.write_record(["lambda", "size", "std_error"]).map_err(csv_error)?;
            for i in 0..curve.lambdas.len() {
                w.write_record([curve.lambdas[i].to_string(), curve.sizes[i].to_string(), curve.std_errors[i].to_string()])
                    .map_err(csv_error)?;
            }
            w.flush()?;
        }
        AnalyzeCommand::Separable(a) => {
            let states = match io::file_kind(&a.input)?.as_str() {
                "states" => io::read_states_file(&a.input)?.1,
                _ => {
                    let (h, s) = io::read_sample_file(&a.input)?;
                    let pom = pom_for(&h.meta.pom, a.pom.as_deref())?;
                    sample_states(&s, &pom)?
                }
            };
            let f = separable_fraction(&states, Some(a.bins))?;
            let mut w = csv_writer(&a.out)?;
            w.write_record(["bin", "purity_lo", "purity_hi", "count", "separable_fraction", "std_error"])
                .map_err(csv_error)?;
            w.write_record([
                "all".to_string(),
                "0.25".to_string(),
                "1".to_string(),
                f.count.to_string(),
                f.overall.value.to_string(),
                f.overall.std_error.to_string(),
            ])
            .map_err(csv_error)?;
            for (i, b) in f.bins.iter().enumerate() {
                let (v, e) = b.fraction.map_or(("NA".to_string(), "NA".to_string()), |x| {
                    (x.value.to_string(), x.std_error.to_string())
                });
                w.write_record([i.to_string(), b.purity_lo.to_string(), b.purity_hi.to_string(), b.count.to_string(), v, e])
                    .map_err(csv_error)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// One matched job in the benchmark table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub job: String,
    pub method: SamplingMethod,
    pub check: CheckStrategy,
    pub ascent: AscentMethod,
    pub target: TargetKind,
    pub points: usize,
    pub proposals: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    pub check_iterations: u64,
    pub wall_seconds: f64,
}

/// Runs the benchmark jobs for `pom`: MCMC with each ascent method and the
/// fast check when one exists, then independence sampling.
pub fn bench_rows(pom: &Pom, n: usize, seed: u64, threads: usize) -> Result<Vec<BenchRow>> {
    let fast = PhysicalityChecker::new(pom.clone(), AscentConfig::default()).strategy();
    let prim = TargetKind::PriorPrimitive;
    let jeff = TargetKind::PriorJeffreys;
    use AscentMethod::{Cg, Dg};
    use SamplingMethod::{Importance, Mcmc, Reject};
    let mut jobs = vec![
        ("mcmc-dg", Mcmc, CheckStrategy::Ascent, Dg, prim),
        ("mcmc-cg", Mcmc, CheckStrategy::Ascent, Cg, prim),
    ];
    if fast != CheckStrategy::Ascent {
        jobs.push(("mcmc-fast", Mcmc, fast, Cg, prim));
    }
    jobs.push(("mcmc-fast-jeffreys", Mcmc, fast, Cg, jeff));
    jobs.push(("reject-fast", Reject, fast, Cg, prim));
    jobs.push(("importance-fast", Importance, fast, Cg, prim));
    jobs.push(("importance-fast-jeffreys", Importance, fast, Cg, jeff));

    let opts = SamplerOptions { threads, ..Default::default() };
    let mut rows = Vec::new();
    for (job, method, check, ascent, target_kind) in jobs {
        let checker = make_checker(pom.clone(), Some(check), ascent)?;
        let target = TargetDensity::new(target_kind, None)?;
        let t0 = Instant::now();
        let s = match method {
            Reject => rejection_sample(&target, &checker, n, seed, 0.0, &opts)?,
            Importance => importance_sample(&target, &checker, n, seed, &opts)?,
            Mcmc => xmhmc_multi(&target, &checker, &ChainConfig::for_points(n, seed), 1, 1)?,
        };
        rows.push(BenchRow {
            job: job.to_string(),
            method,
            check,
            ascent,
            target: target_kind,
            points: s.len(),
            proposals: s.meta.proposals_total,
            accepted: s.meta.accepted,
            acceptance_rate: s.meta.acceptance_rate,
            check_iterations: s.meta.check_work,
            wall_seconds: t0.elapsed().as_secs_f64(),
        });
    }
    Ok(rows)
}

fn run_bench(args: &BenchArgs, seed: u64, threads: usize) -> Result<()> {
    let pom = Pom::by_name(&args.pom)?;
    if pom.kind() == PomKind::TetrahedronPair {
        eprintln!("warning: tetra2 acceptance is about 2e-5; independence jobs will be slow");
    }
    let rows = bench_rows(&pom, args.n, seed, threads)?;
    let mut w = csv::Writer::from_path(&args.out).map_err(csv_error)?;
    for r in &rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    let stderr = std::io::stderr();
    let mut e = stderr.lock();
    for r in &rows {
        writeln!(e, "{:<26} {:>10} check iterations {:>9.3} s", r.job, r.check_iterations, r.wall_seconds)?;
    }
    Ok(())
}
