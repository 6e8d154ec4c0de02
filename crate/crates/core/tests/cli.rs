mod common;

use std::path::{Path, PathBuf};
use std::process::Command;

use common::*;
use dtrunc::sample::write_sample;
use serde_json::Value;
use sha2::{Digest, Sha256};

const D3: &str = "x,u,v\n1,0,2.5\n2,0.5,3\n3,1.5,4\n";
const DV: &str = "x,u,v\n1,0,1.5\n2,1,3\n3,2.5,3.5\n";

fn run(args: &[&str]) -> i32 {
    dtrunc::cli::run(std::iter::once("dtrunc").chain(args.iter().copied()))
}

fn file(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn column(csv: &Path, name: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_path(csv).unwrap();
    let k = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|row| row.unwrap()[k].parse().unwrap()).collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn estimate_on_d3() {
    let dir = tempfile::tempdir().unwrap();
    let input = file(dir.path(), "d3.csv", D3);
    let out = dir.path().join("out");
    assert_eq!(run(&["estimate", "--input", s(&input), "--out-dir", s(&out)]), 0);
    let cdf = column(&out.join("cdf.csv"), "cdf");
    assert!((cdf[2] - 1.0).abs() < 1e-12);
    let g = column(&out.join("cdf.csv"), "g");
    for (got, want) in g.iter().zip([0.618034, 1.0, 0.618034]) {
        assert!((got - want).abs() < 1e-6);
    }
    let m = json(out.join("manifest.json"));
    assert_eq!(m["subcommand"], "estimate");
    assert_eq!(m["input_sha256"], hex::encode(Sha256::digest(D3.as_bytes())));
    assert!(m["seed"].is_null());
    assert_eq!(m["options"]["algo"], "joint");
    assert_eq!(json(out.join("fit.json"))["converged"], true);
}

#[test]
fn estimate_without_truncation_is_the_empirical_cdf() {
    let dir = tempfile::tempdir().unwrap();
    let input = file(dir.path(), "c.csv", "x,u,v\n1,1,3\n2,1,3\n2,1,3\n3,1,3\n");
    let out = dir.path().join("out");
    for algo in ["joint", "selfconsistency"] {
        assert_eq!(run(&["estimate", "--input", s(&input), "--out-dir", s(&out), "--algo", algo]), 0);
        assert_eq!(column(&out.join("cdf.csv"), "cdf"), vec![0.25, 0.75, 1.0]);
        assert_eq!(column(&out.join("cdf.csv"), "g"), vec![1.0; 3]);
    }
}

#[test]
fn existence_failure_is_a_warning_for_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let input = file(dir.path(), "dv.csv", DV);
    let out = dir.path().join("out");
    assert_eq!(run(&["estimate", "--input", s(&input), "--out-dir", s(&out)]), 0);
    let m = json(out.join("manifest.json"));
    let warnings = m["warnings"].as_array().unwrap();
    assert!(warnings.iter().any(|w| w.as_str().unwrap().contains("existence")), "{warnings:?}");
}

#[test]
fn diagnose_reports_the_counts() {
    let dir = tempfile::tempdir().unwrap();
    let input = file(dir.path(), "dv.csv", DV);
    let out = dir.path().join("out");
    assert_eq!(run(&["diagnose", "--input", s(&input), "--out-dir", s(&out)]), 0);
    let d = json(out.join("diagnose.json"));
    assert_eq!(d["ok"], false);
    assert_eq!(d["s1"], serde_json::json!([2, 1, 2]));
    assert_eq!(d["s2"], serde_json::json!([1, 3, 1]));
    assert_eq!(d["violating_indices"], serde_json::json!([0, 1, 2]));
    assert!(!out.join("g_by_group.csv").exists());

    let labelled = uniform_design(120, 0.5, 0.25, 3)
        .with_events((0..120).map(|i| (i % 2) as i64).collect())
        .unwrap();
    let path = dir.path().join("groups.csv");
    write_sample(&labelled, &path).unwrap();
    assert_eq!(run(&["diagnose", "--input", s(&path), "--out-dir", s(&out)]), 0);
    let d = json(out.join("diagnose.json"));
    assert!(d["group_g_max_gap"].as_f64().unwrap() >= 0.0);
    assert!(std::fs::read_to_string(out.join("g_by_group.csv")).unwrap().starts_with("group,time,g\n"));
}

#[test]
fn mandel_equals_naive_without_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let base = uniform_design_with_z(60, 4);
    let x = base.x().to_vec();
    let z = base.covariates().unwrap().column(0);
    let path = dir.path().join("cov.csv");
    write_sample(&with_z(covering(&x), &z), &path).unwrap();
    let fit = |scheme: &str| {
        let out = dir.path().join(scheme);
        let code = run(&["cox", "--input", s(&path), "--out-dir", s(&out), "--scheme", scheme, "--B", "30", "--seed", "5"]);
        assert_eq!(code, 0);
        let mut j = json(out.join("cox.json"));
        j.as_object_mut().unwrap().remove("scheme");
        (j, std::fs::read_to_string(out.join("cox_replicates.csv")).unwrap())
    };
    let (m, mr) = fit("mandel");
    let (n, nr) = fit("naive");
    assert_eq!(m, n);
    assert_eq!(mr, nr);
    assert_eq!(m["seed"], 5);
    let p = m["covariates"][0]["p"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
}

#[test]
fn simulate_table4_at_desk_scale() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let code = run(&[
        "simulate", "--preset", "table4", "--n", "250", "--trials", "100", "--seed", "7", "--out-dir", s(&out),
    ]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(out.join("simulation.csv")).unwrap();
    let names: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    for want in ["nai", "man", "ren"] {
        assert!(names.contains(&want), "{csv}");
    }
    let rep = json(out.join("simulation.json"));
    assert_eq!(rep["trials"], 100);
    assert_eq!(json(out.join("manifest.json"))["seed"], 7);
}

#[test]
fn simulate_reads_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = file(dir.path(), "exp.txt", "preset = table4\nn = 60\ntrials = 4\nseed = 3\nestimators = nai\n");
    let out = dir.path().join("sim");
    assert_eq!(run(&["simulate", "--config", s(&cfg), "--out-dir", s(&out)]), 0);
    let m = json(out.join("manifest.json"));
    assert_eq!(m["seed"], 3);
    assert!(m["input_sha256"].is_string());
    let bad = file(dir.path(), "bad.txt", "n = many\n");
    assert_eq!(run(&["simulate", "--config", s(&bad), "--out-dir", s(&out)]), 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let d3 = file(dir.path(), "d3.csv", D3);
    assert_eq!(run(&["estimate", "--input", s(&d3), "--bogus"]), 2);
    assert_eq!(run(&["frobnicate"]), 2);
    let missing = dir.path().join("missing.csv");
    assert_eq!(run(&["estimate", "--input", s(&missing), "--out-dir", s(&out)]), 1);
    let garbled = file(dir.path(), "g.csv", "x,u,v\n1,0,abc\n");
    assert_eq!(run(&["estimate", "--input", s(&garbled), "--out-dir", s(&out)]), 2);
    let invalid = file(dir.path(), "i.csv", "x,u,v\n1,2,3\n2,1,3\n");
    assert_eq!(run(&["estimate", "--input", s(&invalid), "--out-dir", s(&out)]), 3);
    assert_eq!(
        run(&["estimate", "--input", s(&invalid), "--out-dir", s(&out), "--drop-invalid"]),
        0
    );
    let u = dir.path().join("u.csv");
    write_sample(&uniform_design(100, 0.5, 0.25, 1), &u).unwrap();
    assert_eq!(run(&["estimate", "--input", s(&u), "--out-dir", s(&out), "--max-iter", "2"]), 4);
    let singleton = file(dir.path(), "e.csv", "x,u,v,event\n1,0,2.5,1\n2,0.5,3,2\n3,1.5,4,1\n");
    assert_eq!(
        run(&["cif", "--input", s(&singleton), "--out-dir", s(&out), "--method", "dep", "--B", "0", "--seed", "1"]),
        5
    );
}

#[test]
fn repeat_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.csv");
    write_sample(
        &uniform_design(80, 0.5, 0.25, 2).with_events((0..80).map(|i| (i % 3) as i64).collect()).unwrap(),
        &path,
    )
    .unwrap();
    let cases: [(&str, &[&str], &[&str]); 4] = [
        ("bootstrap", &["--B", "40", "--seed", "9"], &["bootstrap.csv", "bootstrap.json"]),
        ("cif", &["--B", "20", "--seed", "9"], &["cif.csv", "cif_type_0.csv", "cif.json"]),
        ("indeptest", &["--B", "30", "--seed", "9"], &["indeptest.json"]),
        ("sef", &[], &["sef.json", "sef_curve.csv"]),
    ];
    for (cmd, extra, outputs) in cases {
        let a = dir.path().join(format!("{cmd}_a"));
        let b = dir.path().join(format!("{cmd}_b"));
        for (out, threads) in [(&a, "1"), (&b, "3")] {
            let mut args = vec![cmd, "--input", s(&path), "--out-dir", s(out), "--threads", threads];
            args.extend_from_slice(extra);
            assert_eq!(run(&args), 0, "{cmd}");
        }
        for name in outputs {
            assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{cmd}/{name}");
        }
        let strip = |p: &Path| {
            let mut m = json(p.join("manifest.json"));
            m.as_object_mut().unwrap().remove("timestamp");
            m["options"]["out"].take();
            m
        };
        assert_eq!(strip(&a), strip(&b));
    }
}

#[test]
fn generated_seed_is_recorded_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let input = file(dir.path(), "d3.csv", D3);
    let first = dir.path().join("first");
    assert_eq!(run(&["bootstrap", "--input", s(&input), "--out-dir", s(&first), "--B", "25"]), 0);
    let seed = json(first.join("manifest.json"))["seed"].as_u64().unwrap();
    assert_eq!(json(first.join("bootstrap.json"))["seed"].as_u64().unwrap(), seed);
    let again = dir.path().join("again");
    let seed_arg = seed.to_string();
    assert_eq!(
        run(&["bootstrap", "--input", s(&input), "--out-dir", s(&again), "--B", "25", "--seed", &seed_arg]),
        0
    );
    assert_eq!(
        std::fs::read(first.join("bootstrap.csv")).unwrap(),
        std::fs::read(again.join("bootstrap.csv")).unwrap()
    );
}

#[test]
fn binary_takes_defaults_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let data = uniform_design(60, 0.5, 0.25, 8);
    let input = dir.path().join("u.csv");
    write_sample(&data, &input).unwrap();
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_dtrunc"))
        .args(["indeptest", "--input", s(&input), "--out-dir", s(&out)])
        .env("DTRUNC_SEED", "42")
        .env("DTRUNC_B", "30")
        .status()
        .unwrap();
    assert!(status.success());
    let t = json(out.join("indeptest.json"));
    let (tau, pairs) = dtrunc::indep::conditional_tau(&data).unwrap();
    assert_eq!((t["tau"].as_f64(), t["n_comparable"].as_u64()), (Some(tau), Some(pairs)));
    assert_eq!(t["B"], 30);
    assert_eq!(json(out.join("manifest.json"))["seed"], 42);

    let status = Command::new(env!("CARGO_BIN_EXE_dtrunc"))
        .args(["estimate", "--input", s(&input), "--out-dir", s(&out), "--nope"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn sef_and_cif_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let input = file(dir.path(), "e.csv", "x,u,v,event\n1,0,2.5,1\n2,0.5,3,2\n3,1.5,4,1\n");
    let out = dir.path().join("out");
    assert_eq!(run(&["cif", "--input", s(&input), "--out-dir", s(&out), "--B", "0", "--seed", "1"]), 0);
    let c = json(out.join("cif.json"));
    assert!((c["types"][0]["total"].as_f64().unwrap() - 0.763932).abs() < 1e-6);
    assert!(out.join("cif_type_2.csv").exists());
    assert_eq!(run(&["sef", "--input", s(&input), "--out-dir", s(&out), "--points", "10"]), 0);
    let f = json(out.join("sef.json"));
    assert_eq!((f["a"].as_f64(), f["b"].as_f64()), (Some(1.0), Some(3.0)));
    assert_eq!(std::fs::read_to_string(out.join("sef_curve.csv")).unwrap().lines().count(), 12);
}
