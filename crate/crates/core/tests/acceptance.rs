//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any failed. Pass criterion numbers as arguments to
//! run a subset.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use qss::analysis::{
    default_lambda_grid, purity_histogram, random_states, sample_purities, separable_fraction, size_curve,
    state_purities, Histogram, PriorModel, PurityDensity, RegionPredicate, SizeCurve,
};
use qss::analysis::region_probability;
use qss::densities::{log_likelihood, Dataset, PriorKind, TargetDensity};
use qss::linalg::{self, c};
use qss::physicality::{
    check_by_ascent, is_physical_ic, is_physical_tat, maximize_likelihood, maximize_q, q_gradient, AscentConfig,
    AscentMethod, PhysicalityChecker, QFunctional,
};
use qss::quadrature::tanh_sinh_offset;
use qss::quantum::{make_tat, make_tetrahedron, make_tetrahedron_pair, make_trine, purity, sample_ginibre};
use qss::samplers::{
    importance_sample, rejection_sample, sample_simplex_exponential, stream_rng, xmhmc_sample, ChainConfig,
    SamplerOptions, WeightedSample,
};

type Outcome = (bool, String);

fn uniform_points(k: usize, n: usize, seed: u64) -> Vec<qss::quantum::ProbVector> {
    let mut rng = stream_rng(seed, 0);
    (0..n).map(|_| sample_simplex_exponential(k, &mut rng)).collect()
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

// 1
fn trine_fraction() -> Outcome {
    let pts = uniform_points(3, 100_000, 101);
    let checker = PhysicalityChecker::new(make_trine(), AscentConfig::default());
    let mut physical = 0usize;
    let mut disagree = 0usize;
    let mut worst_gap: f64 = 0.0;
    for p in &pts {
        let v = checker.is_physical(p.as_slice()).unwrap();
        if v {
            physical += 1;
        }
        let s2 = p.sum_of_squares();
        if v != (s2 <= 0.5) {
            disagree += 1;
            worst_gap = worst_gap.max((s2 - 0.5).abs());
        }
    }
    let frac = physical as f64 / pts.len() as f64;
    let want = PI / 27f64.sqrt();
    // Disagreements must sit within the boundary tolerance band.
    let band = 1e-3;
    let ok = within(frac, want, 0.005) && worst_gap <= band;
    (
        ok,
        format!(
            "fraction {frac:.5} (target {want:.5} ± 0.005); {disagree} disagreements with Σp² ≤ 1/2, all within |Σp² − 1/2| ≤ {worst_gap:.2e} (band {band:.0e})"
        ),
    )
}

// 2
fn tat_fraction() -> Outcome {
    let pts = uniform_points(9, 100_000, 202);
    let mut physical = 0usize;
    let mut verdicts = Vec::with_capacity(pts.len());
    for p in &pts {
        let v = is_physical_tat(p).unwrap();
        verdicts.push(v);
        if v {
            physical += 1;
        }
    }
    let frac = physical as f64 / pts.len() as f64;
    let pom = make_tat();
    let cfg = AscentConfig::default();
    let sub = 10_000;
    let mut agree = 0usize;
    for (p, &v) in pts.iter().zip(&verdicts).take(sub) {
        if check_by_ascent(p, &pom, &cfg).unwrap().physical == v {
            agree += 1;
        }
    }
    let agreement = agree as f64 / sub as f64;
    (
        within(frac, 0.10, 0.01) && agreement >= 0.999,
        format!("fraction {frac:.5} (target 0.10 ± 0.01); agreement with the Q ascent {agreement:.4} on {sub} points (≥ 0.999)"),
    )
}

// 3
fn tetra_pair_acceptance() -> Outcome {
    let pom = make_tetrahedron_pair();
    let n = 2_000_000usize;
    let mut rng = stream_rng(303, 0);
    let mut accepted = 0usize;
    for _ in 0..n {
        let p = sample_simplex_exponential(16, &mut rng);
        if is_physical_ic(&p, &pom).unwrap() {
            accepted += 1;
        }
    }
    let rate = accepted as f64 / n as f64;
    (
        (1e-5..=4e-5).contains(&rate),
        format!("{accepted} of {n} accepted, rate {rate:.3e} (window [1e-5, 4e-5], expected 2.15e-5)"),
    )
}

// 4
fn separable_fractions() -> Outcome {
    let one = random_states(PriorModel::I, 4, 100_000, 404, 1).unwrap();
    let f1 = separable_fraction(&one, None).unwrap().overall;
    let two = random_states(PriorModel::II, 4, 100_000, 405, 1).unwrap();
    let f2 = separable_fraction(&two, None).unwrap().overall;
    (
        within(f1.value, 0.632, 0.01) && within(f2.value, 0.242, 0.01),
        format!(
            "prior I {:.4} ± {:.4} (target 0.632 ± 0.01); Ginibre {:.4} ± {:.4} (target 0.242 ± 0.01)",
            f1.value, f1.std_error, f2.value, f2.std_error
        ),
    )
}

/// Per-bin deviation in standard errors and interior sup-norm relative to
/// the interior peak of the analytic bin averages.
fn compare_histogram(h: &Histogram, q: &PurityDensity, n: f64) -> (f64, f64) {
    let width = h.width();
    let mut worst_z: f64 = 0.0;
    let mut sup: f64 = 0.0;
    let mut peak: f64 = 0.0;
    let last = h.bins() - 1;
    for i in 0..h.bins() {
        let (a, b) = h.edges(i);
        let an = q.bin_average(a, b.min(1.0)).unwrap();
        let prob = an * width;
        let se = (n * prob * (1.0 - prob)).sqrt() / (n * width);
        let dev = (h.densities[i] - an).abs();
        if se > 0.0 {
            worst_z = worst_z.max(dev / se);
        } else if dev > 0.0 {
            worst_z = f64::INFINITY;
        }
        if i != 0 && i != last {
            sup = sup.max(dev);
            peak = peak.max(an);
        }
    }
    (worst_z, sup / peak)
}

/// Slope of ln F(ξ) against ln(dξ − 1) over `[lo, hi]`, minus one.
fn power_law_exponent(purities: &[f64], d: usize, lo: f64, hi: f64) -> (f64, usize) {
    let n = purities.len() as f64;
    let mut sorted: Vec<f64> = purities.iter().copied().filter(|x| *x <= hi).collect();
    sorted.sort_by(f64::total_cmp);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for k in 1..=40 {
        let xi = lo + (hi - lo) * k as f64 / 40.0;
        let count = sorted.partition_point(|&v| v <= xi);
        if count >= 50 {
            xs.push((d as f64 * xi - 1.0).ln());
            ys.push((count as f64 / n).ln());
        }
    }
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    (sxy / sxx - 1.0, sorted.len())
}

fn ginibre_purities(d: usize, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0);
    (0..n).map(|_| purity(&sample_ginibre(d, &mut rng)).0).collect()
}

// 5
fn purity_densities() -> Outcome {
    let n = 100_000;
    let mut ok = true;
    let mut parts = Vec::new();
    let mut judge = |label: String, purities: &[f64], weights: &[f64], prior: PriorModel, d: usize| {
        let h = purity_histogram(purities, weights, d, 40).unwrap();
        let q = PurityDensity::new(prior, d).unwrap();
        let used = weights.iter().filter(|w| **w > 0.0).count() as f64;
        let (z, sup) = compare_histogram(&h, &q, used);
        let pass = z <= 5.0 && sup < 0.15;
        ok &= pass;
        parts.push(format!("{label}: max {z:.2} SE, sup {sup:.3}"));
    };
    for d in [2, 3, 4] {
        let states = random_states(PriorModel::I, d, n, 500 + d as u64, 1).unwrap();
        judge(format!("I d={d}"), &state_purities(&states), &vec![1.0; n], PriorModel::I, d);
    }
    let states = random_states(PriorModel::II, 2, n, 510, 1).unwrap();
    judge("II d=2 Ginibre".into(), &state_purities(&states), &vec![1.0; n], PriorModel::II, 2);
    // Same density through the tetrahedron: primitive prior, 6Σp² − 1.
    let tetra = make_tetrahedron();
    let checker = PhysicalityChecker::new(tetra.clone(), AscentConfig::default());
    let s = rejection_sample(&TargetDensity::prior(PriorKind::Primitive), &checker, n, 511, 0.0, &SamplerOptions::default())
        .unwrap();
    judge("II d=2 tetra".into(), &sample_purities(&s, &tetra).unwrap(), &s.weights, PriorModel::II, 2);

    let (e3, in3) = power_law_exponent(&ginibre_purities(3, n, 512), 3, 1.0 / 3.0, 0.5);
    // Only ~0.3% of d = 4 states fall below ξ = 1/3.
    let (e4, in4) = power_law_exponent(&ginibre_purities(4, 2_000_000, 513), 4, 0.25, 1.0 / 3.0);
    let pass3 = within(e3, 3.0, 0.3);
    let pass4 = within(e4, 6.5, 0.3);
    ok &= pass3 && pass4;
    parts.push(format!("II d=3 exponent {e3:.3} (3 ± 0.3, {in3} states)"));
    parts.push(format!("II d=4 exponent {e4:.3} (6.5 ± 0.3, {in4} states)"));
    (ok, parts.join("; "))
}

// 6
fn purity_normalization() -> Outcome {
    let c3 = tanh_sinh_offset(|_, dx: f64| 1.0 / (2.0 * dx).sqrt(), 0.5, 1.0, 1e-14);
    let c7 = tanh_sinh_offset(|_, dx: f64| 3.0 * (2.0 * dx).sqrt(), 0.5, 1.0, 1e-14);
    let lib3 = PurityDensity::new(PriorModel::I, 2).unwrap().integral(0.5, 1.0).unwrap();
    let lib7 = PurityDensity::new(PriorModel::II, 2).unwrap().integral(0.5, 1.0).unwrap();
    let worst = [c3, c7, lib3, lib7].iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    (
        worst <= 1e-8,
        format!("∫1/√(2ξ−1) = {c3:.12}, ∫3√(2ξ−1) = {c7:.12}, library {lib3:.12} / {lib7:.12}; worst |Δ| {worst:.1e}"),
    )
}

// 7
fn sampler_equivalence() -> Outcome {
    let n = 100_000;
    let checker = PhysicalityChecker::new(make_trine(), AscentConfig::default());
    let target = TargetDensity::prior(PriorKind::Primitive);
    let opts = SamplerOptions::default();
    let region = RegionPredicate::new("p1 >= 1/3", |p| p[0] >= 1.0 / 3.0);
    let rej = rejection_sample(&target, &checker, n, 701, 0.0, &opts).unwrap();
    let imp = importance_sample(&target, &checker, n, 702, &opts).unwrap();
    let mc = xmhmc_sample(&target, &checker, &ChainConfig::for_points(n, 703)).unwrap();
    let est: Vec<_> = [&rej, &imp, &mc].iter().map(|s| region_probability(s, &region).unwrap()).collect();
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in i + 1..3 {
            let z = (est[i].value - est[j].value).abs() / (est[i].std_error.powi(2) + est[j].std_error.powi(2)).sqrt();
            worst = worst.max(z);
            ok &= z <= 3.0;
        }
    }
    let rate = mc.meta.acceptance_rate;
    ok &= (0.15..=0.35).contains(&rate);
    (
        ok,
        format!(
            "reject {:.4}±{:.4}, importance {:.4}±{:.4}, xMHMC {:.4}±{:.4}; worst pair {worst:.2}σ; xMHMC acceptance {rate:.3} (σ = {:.4})",
            est[0].value,
            est[0].std_error,
            est[1].value,
            est[1].std_error,
            est[2].value,
            est[2].std_error,
            mc.meta.step_sigma.unwrap_or(f64::NAN)
        ),
    )
}

struct TatSamples {
    primitive_ind: WeightedSample,
    jeffreys_ind: WeightedSample,
    primitive_mc: WeightedSample,
    jeffreys_mc: WeightedSample,
}

fn tat_data() -> Dataset {
    Dataset::new(vec![11, 4, 5, 2, 10, 5, 4, 6, 13])
}

fn tat_samples() -> &'static TatSamples {
    static SAMPLES: OnceLock<TatSamples> = OnceLock::new();
    SAMPLES.get_or_init(|| {
        let checker = PhysicalityChecker::new(make_tat(), AscentConfig::default());
        let opts = SamplerOptions::default();
        let prim = TargetDensity::prior(PriorKind::Primitive);
        let jeff = TargetDensity::prior(PriorKind::Jeffreys);
        let n = 100_000;
        TatSamples {
            primitive_ind: rejection_sample(&prim, &checker, n, 801, 0.0, &opts).unwrap(),
            // Ten uniform proposals per physical point on average.
            jeffreys_ind: importance_sample(&jeff, &checker, 10 * n, 802, &opts).unwrap(),
            primitive_mc: xmhmc_sample(&prim, &checker, &ChainConfig::for_points(n, 803)).unwrap(),
            jeffreys_mc: xmhmc_sample(&jeff, &checker, &ChainConfig::for_points(n, 804)).unwrap(),
        }
    })
}

fn curve_report(label: &str, a: &SizeCurve, b: &SizeCurve) -> (bool, String) {
    let mono = |c: &SizeCurve| c.sizes.windows(2).all(|w| w[1] <= w[0]);
    let mut worst: f64 = 0.0;
    let mut ok = mono(a) && mono(b) && a.sizes[0] == 1.0 && b.sizes[0] == 1.0;
    for i in 0..a.lambdas.len() {
        let diff = (a.sizes[i] - b.sizes[i]).abs();
        let se = (a.std_errors[i].powi(2) + b.std_errors[i].powi(2)).sqrt();
        if diff > 3.0 * se {
            ok = false;
        }
        if se > 0.0 {
            worst = worst.max(diff / se);
        } else if diff > 0.0 {
            worst = f64::INFINITY;
        }
    }
    let mid = a.lambdas.len() / 2;
    (
        ok,
        format!(
            "{label}: s_0.05 = {:.3e}/{:.3e}, s_0.5 = {:.3e}/{:.3e}, worst {worst:.2}σ, ESS {:.0}/{:.0}",
            a.sizes[1], b.sizes[1], a.sizes[mid], b.sizes[mid], a.meta.ess, b.meta.ess
        ),
    )
}

// 8
fn size_curves() -> Outcome {
    let s = tat_samples();
    let data = tat_data();
    let pom = make_tat();
    let grid = default_lambda_grid(21);
    let cfg = AscentConfig::default();
    let curve = |x: &WeightedSample| size_curve(x, &data, &pom, &grid, &cfg).unwrap();
    let (ok1, m1) = curve_report("primitive", &curve(&s.primitive_ind), &curve(&s.primitive_mc));
    let (ok2, m2) = curve_report("Jeffreys", &curve(&s.jeffreys_ind), &curve(&s.jeffreys_mc));
    let rates = format!(
        "acceptance: reject {:.4}, xMHMC {:.3}/{:.3}",
        s.primitive_ind.meta.acceptance_rate, s.primitive_mc.meta.acceptance_rate, s.jeffreys_mc.meta.acceptance_rate
    );
    (ok1 && ok2, format!("{m1}; {m2}; {rates}"))
}

// 9
fn ascent_properties() -> Outcome {
    let pom = make_tat();
    let mut rng = stream_rng(901, 0);
    let mut worst_rel: f64 = 0.0;
    for i in 0..100 {
        let q = if i % 2 == 0 { QFunctional::Kl } else { QFunctional::Bhattacharyya };
        let p = sample_simplex_exponential(9, &mut rng);
        let a = linalg::ginibre_matrix(4, &mut rng);
        let (_, g, norm) = q_gradient(&a, p.as_slice(), &pom, q);
        let h = 1e-6;
        let (mut num, mut den) = (0.0, 0.0);
        for r in 0..4 {
            for col in 0..4 {
                for (dir, comp) in [(c(1.0, 0.0), g[(r, col)].re), (c(0.0, 1.0), g[(r, col)].im)] {
                    let mut ap = a.clone();
                    ap[(r, col)] += dir * h;
                    let mut am = a.clone();
                    am[(r, col)] -= dir * h;
                    let fd = (q_gradient(&ap, p.as_slice(), &pom, q).0 - q_gradient(&am, p.as_slice(), &pom, q).0) / (2.0 * h);
                    let an = 2.0 * comp / norm;
                    num += (fd - an).powi(2);
                    den += an * an;
                }
            }
        }
        worst_rel = worst_rel.max((num / den).sqrt());
    }
    let grad_ok = worst_rel <= 1e-6;

    let mut mono_ok = true;
    let mut steps = 0usize;
    for method in [AscentMethod::Dg, AscentMethod::Cg] {
        let cfg = AscentConfig { record_trajectory: true, method, ..Default::default() };
        for _ in 0..25 {
            let p = sample_simplex_exponential(9, &mut rng);
            let out = maximize_q(&p, &pom, &cfg).unwrap();
            steps += out.trajectory.len();
            mono_ok &= out.trajectory.windows(2).all(|w| w[1] >= w[0] - 1e-13);
        }
    }

    let data = tat_data();
    let (_, ll_max) = maximize_likelihood(&data, &pom, &AscentConfig::default()).unwrap();
    let s = tat_samples();
    let mut top = f64::NEG_INFINITY;
    let mut checked = 0usize;
    for sample in [&s.primitive_ind, &s.jeffreys_ind, &s.primitive_mc, &s.jeffreys_mc] {
        for (p, w) in sample.points.iter().zip(&sample.weights) {
            if *w > 0.0 {
                top = top.max(log_likelihood(p, &data).unwrap());
                checked += 1;
            }
        }
    }
    let dom_ok = top <= ll_max;
    (
        grad_ok && mono_ok && dom_ok,
        format!(
            "gradient worst relative error {worst_rel:.2e} (≤ 1e-6); {steps} logged steps monotone: {mono_ok}; ln L_max {ll_max:.6} ≥ best of {checked} sampled points {top:.6}"
        ),
    )
}

// 10
fn determinism() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_qss");
    let dir = tempfile::tempdir().unwrap();
    let tat_data = dir.path().join("tat.csv");
    std::fs::write(&tat_data, "11,4,5,2,10,5,4,6,13\n").unwrap();
    let tetra_data = dir.path().join("tetra.csv");
    std::fs::write(&tetra_data, "7,3,5,5\n").unwrap();
    let runs: Vec<Vec<String>> = vec![
        "--pom trine --target prior-primitive --method reject -n 100 --seed 7",
        "--pom trine --target prior-jeffreys --method importance -n 500 --seed 8",
        "--pom tat --target posterior-primitive --method mcmc -n 400 --seed 9",
        "--pom tat --target prior-jeffreys --method mcmc -n 300 --chains 3 --seed 10",
        "--pom tetra --target posterior-primitive --method reject -n 50 --seed 11",
        "--pom tetra2 --target prior-primitive --method mcmc -n 200 --sigma 0.02 --seed 12",
    ]
    .into_iter()
    .map(|s| s.split(' ').map(String::from).collect())
    .collect();
    let mut identical = 0;
    let mut failures = Vec::new();
    for (i, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        // The output path is echoed in the header, so both runs share it.
        let out = dir.path().join(format!("run{i}.jsonl"));
        for _ in 0..2 {
            let _ = std::fs::remove_file(&out);
            let mut cmd = Command::new(exe);
            cmd.arg("sample").args(args).arg("--out").arg(&out).env_remove("QSS_THREADS");
            if args.iter().any(|a| a.starts_with("posterior")) {
                cmd.arg("--data").arg(if args.contains(&"tat".to_string()) { &tat_data } else { &tetra_data });
            }
            let status = cmd.output().unwrap();
            if !status.status.success() {
                failures.push(format!("run {i} exited {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr)));
            }
            outputs.push(std::fs::read(&out).unwrap_or_default());
        }
        if !outputs[0].is_empty() && outputs[0] == outputs[1] {
            identical += 1;
        } else {
            failures.push(format!("run {i} differs"));
        }
    }
    (
        identical == runs.len(),
        format!("{identical} of {} invocations byte-identical on repeat{}", runs.len(), if failures.is_empty() { String::new() } else { format!(": {}", failures.join(" | ")) }),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "trine physical fraction", trine_fraction),
        (2, "TAT physical fraction", tat_fraction),
        (3, "tetrahedron-pair acceptance", tetra_pair_acceptance),
        (4, "separable fractions", separable_fractions),
        (5, "purity densities", purity_densities),
        (6, "purity normalization", purity_normalization),
        (7, "sampler equivalence", sampler_equivalence),
        (8, "bounded-likelihood size curves", size_curves),
        (9, "ascent properties", ascent_properties),
        (10, "determinism", determinism),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (id, name, f) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        ran += 1;
        let t0 = Instant::now();
        let (pass, detail) = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(r) => r,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {} {name}: {detail} [{:.1} s]",
            if pass { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
