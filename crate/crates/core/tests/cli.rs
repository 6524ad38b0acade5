use std::path::Path;

use qss::cli::{bench_rows, run, Command, RunConfig};
use qss::io::{read_sample_file, read_states_file};
use qss::quantum::Pom;

fn qss(args: &str) -> i32 {
    run(std::iter::once("qss").chain(args.split_whitespace()))
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn sample_file_matches_header_and_echoes_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.jsonl");
    let data = dir.path().join("d.csv");
    std::fs::write(&data, "11,4,5\n").unwrap();
    let args = format!(
        "sample --pom trine --target posterior-primitive --data {} --method importance -n 800 --seed 5 --out {}",
        data.display(),
        out.display()
    );
    assert_eq!(qss(&args), 0);

    let (header, sample) = read_sample_file(&out).unwrap();
    assert_eq!(header.count, 800);
    assert_eq!(sample.len(), 800);
    assert_eq!(header.dataset.as_ref().unwrap().counts(), &[11, 4, 5]);

    // the echo parses back into the invocation that wrote it
    let echoed: RunConfig = serde_json::from_value(header.config.clone()).unwrap();
    let parsed = parse_config(&args);
    assert_eq!(echoed, parsed);

    let text = std::fs::read_to_string(&out).unwrap();
    let body: Vec<serde_json::Value> = text.lines().skip(1).map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(body.len(), 800);
    // weights are L(D|p)/L_max on physical proposals
    for rec in &body {
        let w = rec["w"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&w));
        match rec["logL"].as_f64() {
            Some(l) => assert!(l <= 0.0),
            None => assert_eq!(w, 0.0),
        }
    }
}

fn parse_config(s: &str) -> RunConfig {
    use clap::Parser;
    RunConfig::try_parse_from(std::iter::once("qss").chain(s.split_whitespace())).unwrap()
}

#[test]
fn check_exit_codes() {
    assert_eq!(qss("check --pom trine --point 0.34,0.33,0.33"), 0);
    assert_eq!(qss("check --pom trine --point 1,0,0"), 1);
    assert_eq!(qss("check --pom tat --point 0.5,0.5,0,0,0,0,0,0,0"), 1);
    assert_eq!(qss("check --pom tetra --point 0.25,0.25,0.25,0.25 --check linear"), 0);
    // malformed point is a runtime error, not a usage error
    assert_eq!(qss("check --pom trine --point 0.5,0.6,0.1"), 1);
    assert_eq!(qss("check --pom trine"), 2);
}

#[test]
fn unknown_pom_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.jsonl");
    let args = format!("sample --pom square --target prior-primitive --method reject -n 5 --seed 1 --out {}", out.display());
    assert_eq!(qss(&args), 1);
    assert!(!out.exists());
}

#[test]
fn mcmc_chains_must_divide_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.jsonl");
    let bad = format!("sample --pom trine --target prior-primitive --method mcmc -n 100 --chains 3 --seed 1 --out {}", out.display());
    assert_eq!(qss(&bad), 1);
    let good = format!("sample --pom trine --target prior-primitive --method mcmc -n 99 --chains 3 --seed 1 --out {}", out.display());
    assert_eq!(qss(&good), 0);
    let (h, s) = read_sample_file(&out).unwrap();
    assert_eq!(s.len(), 99);
    assert!(h.meta.step_sigma.is_some());
    assert!(s.weights.iter().all(|&w| w == 1.0));
}

#[test]
fn purity_table_from_states() {
    let dir = tempfile::tempdir().unwrap();
    let states = dir.path().join("st.jsonl");
    let table = dir.path().join("p.csv");
    assert_eq!(qss(&format!("states --prior I --dim 2 -n 20000 --seed 3 --out {}", states.display())), 0);
    let (h, st) = read_states_file(&states).unwrap();
    assert_eq!((h.count, h.dim, st.len()), (20000, 2, 20000));

    let args = format!("analyze purity --in {} --prior I --dim 2 --bins 10 --out {}", states.display(), table.display());
    assert_eq!(qss(&args), 0);
    let rows = read_csv(&table);
    assert_eq!(rows.len(), 10);
    for row in &rows {
        let emp: f64 = row[1].parse().unwrap();
        let exact: f64 = row[2].parse().unwrap();
        // about 2000 states per bin
        assert!((emp - exact).abs() < 0.15 * exact + 0.1, "{row:?}");
    }
}

#[test]
fn purity_table_from_tetra_sample() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s.jsonl");
    let table = dir.path().join("p.csv");
    assert_eq!(
        qss(&format!("sample --pom tetra --target prior-primitive --method reject -n 5000 --seed 4 --out {}", s.display())),
        0
    );
    let args = format!("analyze purity --in {} --prior II --dim 2 --bins 8 --out {}", s.display(), table.display());
    assert_eq!(qss(&args), 0);
    let rows = read_csv(&table);
    assert_eq!(rows.len(), 8);
    let centers: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(centers.windows(2).all(|w| w[1] > w[0]));
    assert!(centers[0] > 0.5 && centers[7] < 1.0);
}

#[test]
fn separable_table_from_states() {
    let dir = tempfile::tempdir().unwrap();
    let states = dir.path().join("st.jsonl");
    let table = dir.path().join("sep.csv");
    assert_eq!(qss(&format!("states --prior II --dim 4 -n 4000 --seed 9 --out {}", states.display())), 0);
    assert_eq!(qss(&format!("analyze separable --in {} --bins 5 --out {}", states.display(), table.display())), 0);
    let rows = read_csv(&table);
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0][0], "all");
    assert_eq!(rows[0][3], "4000");
    let overall: f64 = rows[0][4].parse().unwrap();
    assert!((overall - 0.24).abs() < 0.03, "{overall}");
    let binned: usize = rows[1..].iter().map(|r| r[3].parse::<usize>().unwrap()).sum();
    assert_eq!(binned, 4000);
}

#[test]
fn size_and_credibility_curves() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s.jsonl");
    let size = dir.path().join("size.csv");
    let cred = dir.path().join("cred.csv");
    assert_eq!(
        qss(&format!("sample --pom trine --target prior-primitive --method reject -n 4000 --seed 2 --out {}", s.display())),
        0
    );
    let base = format!("analyze size-curve --in {} --data 11,4,5 --pom trine --lambdas 6", s.display());
    assert_eq!(qss(&format!("{base} --out {}", size.display())), 0);
    assert_eq!(qss(&format!("{base} --credibility --out {}", cred.display())), 0);

    for path in [&size, &cred] {
        let rows = read_csv(path);
        assert_eq!(rows.len(), 6);
        let vals: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
        assert!((vals[0] - 1.0).abs() < 1e-12, "{path:?} {vals:?}");
        assert!(vals.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{vals:?}");
    }
    let sizes: Vec<f64> = read_csv(&size).iter().map(|r| r[1].parse().unwrap()).collect();
    let creds: Vec<f64> = read_csv(&cred).iter().map(|r| r[1].parse().unwrap()).collect();
    // likelihood-weighted content of a bounded-likelihood region exceeds its size
    for (s, c) in sizes.iter().zip(&creds).skip(1) {
        assert!(c >= s, "{s} {c}");
    }
}

#[test]
fn bench_cg_does_less_check_work_than_dg() {
    let rows = bench_rows(&Pom::by_name("tat").unwrap(), 300, 17, 1).unwrap();
    let work = |job: &str| rows.iter().find(|r| r.job == job).unwrap().check_iterations;
    assert!(work("mcmc-cg") < work("mcmc-dg"), "cg {} dg {}", work("mcmc-cg"), work("mcmc-dg"));
    assert!(rows.iter().all(|r| r.points > 0));
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    assert_eq!(qss(&format!("bench --pom trine -n 200 --seed 3 --out {}", out.display())), 0);
    let rows = read_csv(&out);
    assert!(rows.len() >= 5);
}

#[test]
fn seed_is_generated_when_absent() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.jsonl");
    assert_eq!(
        qss(&format!("sample --pom trine --target prior-primitive --method reject -n 10 --out {}", out.display())),
        0
    );
    let (h, _) = read_sample_file(&out).unwrap();
    let echoed: RunConfig = serde_json::from_value(h.config).unwrap();
    match echoed.command {
        Command::Sample(a) => assert_eq!(a.seed, Some(h.meta.seed)),
        other => panic!("{other:?}"),
    }
}
