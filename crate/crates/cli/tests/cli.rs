use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn latprog(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latprog"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = latprog(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Small fully observed data set written by `simulate`.
fn simulated(dir: &Path) -> PathBuf {
    ok(dir, &["simulate", "--seed", "4", "--out", "sim"]);
    dir.join("sim/responses.csv")
}

fn small_fit(dir: &Path, data: &Path, name: &str, dim: &str) -> PathBuf {
    ok(
        dir,
        &[
            "fit",
            data.to_str().unwrap(),
            "--dim",
            dim,
            "--iters",
            "120",
            "--burnin",
            "60",
            "--chains",
            "2",
            "--seed",
            "8",
            "--out",
            name,
        ],
    );
    dir.join(name)
}

#[test]
fn simulate_is_deterministic() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["simulate", "--seed", "3", "--out", "a"]);
    ok(d.path(), &["simulate", "--seed", "3", "--out", "b"]);
    ok(d.path(), &["simulate", "--seed", "4", "--out", "c"]);
    let read = |s: &str| fs::read(d.path().join(s).join("responses.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
    let text = String::from_utf8(read("a")).unwrap();
    assert!(text.starts_with("individual,item,time,response\n"));
    assert_eq!(text.lines().count(), 1 + 300 * 10 * 2);
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(latprog(d.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(latprog(d.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(latprog(d.path(), &["fit", "missing.csv"]).status.code(), Some(1));
    let data = simulated(d.path());
    let poincare3 = latprog(d.path(), &["fit", data.to_str().unwrap(), "--metric", "poincare", "--dim", "3"]);
    assert_eq!(poincare3.status.code(), Some(1));
    fs::write(d.path().join("bad.toml"), "no_such_key = 1\n").unwrap();
    let bad = latprog(d.path(), &["fit", data.to_str().unwrap(), "--config", "bad.toml"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn full_workflow() {
    let d = tempfile::tempdir().unwrap();
    let data = simulated(d.path());
    let f1 = small_fit(d.path(), &data, "q1", "1");
    let f2 = small_fit(d.path(), &data, "q2", "2");
    for sub in ["chain_1", "chain_2"] {
        assert!(f2.join(sub).join("manifest.json").exists());
    }
    assert!(f2.join("run.json").exists());

    // short chains rarely pass the PSRF gate; either outcome writes reports
    let diag = latprog(d.path(), &["diagnose", f2.to_str().unwrap()]);
    assert!(matches!(diag.status.code(), Some(0) | Some(2)));
    for f in ["waic.json", "psrf.json", "acceptance.json"] {
        assert!(f2.join(f).exists(), "{f}");
    }
    if diag.status.code() == Some(2) {
        assert!(String::from_utf8_lossy(&diag.stderr).to_lowercase().contains("psrf"));
    }

    ok(d.path(), &["summarize", f2.to_str().unwrap(), "--ids", "1,2"]);
    let summaries = fs::read_to_string(f2.join("summaries.json")).unwrap();
    assert!(summaries.contains("\"schema_version\""));
    assert!(fs::read_to_string(f2.join("density.csv")).unwrap().starts_with("# schema_version"));

    ok(d.path(), &["predict", f2.to_str().unwrap(), "--draws", "50"]);
    let ppc = fs::read_to_string(f2.join("ppc.csv")).unwrap();
    assert_eq!(ppc.lines().filter(|l| !l.starts_with('#')).count(), 1 + 600);

    ok(d.path(), &["export-map", f2.to_str().unwrap()]);
    let map = fs::read_to_string(f2.join("map.csv")).unwrap();
    assert!(map.lines().any(|l| l.starts_with("kind,id,time,x1,x2")));

    let cmp = ok(d.path(), &["compare", f1.to_str().unwrap(), f2.to_str().unwrap(), "--out", "cmp"]);
    let table = String::from_utf8_lossy(&cmp.stdout);
    for col in ["10%", "median", "90%"] {
        assert!(table.contains(col), "{table}");
    }
    let csv = fs::read_to_string(d.path().join("cmp/compare.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 3);

    // a q = 1 fit cannot be read back as q = 3
    let wrong = latprog(d.path(), &["summarize", f1.to_str().unwrap(), "--dim", "3"]);
    assert_eq!(wrong.status.code(), Some(1));
}

#[test]
fn fit_is_reproducible() {
    let d = tempfile::tempdir().unwrap();
    let data = simulated(d.path());
    let a = small_fit(d.path(), &data, "a", "2");
    let b = small_fit(d.path(), &data, "b", "2");
    for f in ["params.csv", "positions.csv", "lambda.csv", "loglik.csv"] {
        assert_eq!(
            fs::read(a.join("chain_1").join(f)).unwrap(),
            fs::read(b.join("chain_1").join(f)).unwrap(),
            "{f}"
        );
    }
    assert_ne!(
        fs::read(a.join("chain_1/params.csv")).unwrap(),
        fs::read(a.join("chain_2/params.csv")).unwrap()
    );
}

#[test]
fn dichotomize_writes_binary_file() {
    let d = tempfile::tempdir().unwrap();
    fs::write(
        d.path().join("raw.csv"),
        "individual,item,time,response\na,x,1,1\na,x,2,4\nb,x,1,2\nb,x,2,NA\n",
    )
    .unwrap();
    ok(d.path(), &["dichotomize", "raw.csv", "--out", "bin"]);
    let out = fs::read_to_string(d.path().join("bin/responses.csv")).unwrap();
    assert_eq!(out, "individual,item,time,response\na,x,1,1\na,x,2,0\nb,x,1,0\nb,x,2,NA\n");
    ok(d.path(), &["dichotomize", "raw.csv", "--map", "1:0,2:1,4:1", "--out", "custom"]);
    let out = fs::read_to_string(d.path().join("custom/responses.csv")).unwrap();
    assert!(out.contains("a,x,1,0\na,x,2,1\nb,x,1,1"));
    assert_eq!(latprog(d.path(), &["dichotomize", "raw.csv", "--map", "oops"]).status.code(), Some(1));
}

#[test]
fn tiny_study() {
    let d = tempfile::tempdir().unwrap();
    ok(
        d.path(),
        &["study", "--reps", "1", "--dims", "1,2", "--iters", "80", "--burnin", "40", "--out", "st"],
    );
    let report = fs::read_to_string(d.path().join("st/study.json")).unwrap();
    assert!(report.contains("minimizer_frequency"));
}

#[test]
fn diagnose_reports_psrf_against_cutoff() {
    let d = tempfile::tempdir().unwrap();
    let mut text = String::from("individual,item,time,response\n");
    for i in 1..=6 {
        for j in 1..=4 {
            for t in 1..=2 {
                text.push_str(&format!("p{i},q{j},{t},{}\n", (i * j + t) % 2));
            }
        }
    }
    fs::write(d.path().join("small.csv"), text).unwrap();
    ok(
        d.path(),
        &["fit", "small.csv", "--iters", "3000", "--burnin", "1000", "--chains", "3", "--out", "f"],
    );
    let out = latprog(d.path(), &["diagnose", "f"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PSRF") && stdout.contains("cutoff"), "{stdout}");
    let json = fs::read_to_string(d.path().join("f/psrf.json")).unwrap();
    assert!(json.contains("\"cutoff\""));
    let converged = !String::from_utf8_lossy(&out.stderr).contains("exceeds the cutoff");
    assert_eq!(out.status.code(), Some(if converged { 0 } else { 2 }));
}
