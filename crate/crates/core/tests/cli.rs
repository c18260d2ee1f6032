//! The binary against frozen outputs, one per subcommand. Set
//! `UPDATE_GOLDEN=1` to rewrite them.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxent-donut"))
        .args(args)
        .env_remove("MAXENT_DONUT_THREADS")
        .output()
        .unwrap()
}

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn check(name: &str, actual: &str) {
    let path = golden(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "{name} differs from its golden file");
}

fn golden_case(name: &str, args: &[&str]) {
    let out = bin(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    check(name, &String::from_utf8(out.stdout).unwrap());
}

fn scratch(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("maxent-donut-{}-{name}", std::process::id()))
}

#[test]
fn generate() {
    golden_case("generate.json", &["generate", "--k", "3"]);
}

#[test]
fn sample() {
    golden_case("sample.json", &["sample", "--k", "3", "--seed", "42"]);
}

#[test]
fn choice_reproduces_the_sample() {
    let sampled: serde_json::Value =
        serde_json::from_slice(&bin(&["sample", "--k", "3", "--seed", "42"]).stdout).unwrap();
    let choice = sampled["choice"].as_str().unwrap();
    let rebuilt: serde_json::Value =
        serde_json::from_slice(&bin(&["sample", "--k", "3", "--choice", choice]).stdout).unwrap();
    assert_eq!(rebuilt["edges"], sampled["edges"]);
    let tour = |extra: &[&str]| {
        let mut args = vec!["tour", "--k", "3", "--matching", "m2"];
        args.extend(extra);
        serde_json::from_slice::<serde_json::Value>(&bin(&args).stdout).unwrap()
    };
    assert_eq!(
        tour(&["--seed", "42"])["euler_tour"],
        tour(&["--choice", choice])["euler_tour"]
    );
    assert_eq!(bin(&["sample", "--k", "4", "--choice", choice]).status.code(), Some(2));
}

#[test]
fn sample_enumerate() {
    let out = bin(&["sample", "--k", "3", "--enumerate"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 128);
    let first: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(first["choice"], "0000000");
    assert_eq!(first["cost"], 14);
}

#[test]
fn verify() {
    golden_case("verify.json", &["verify", "--k", "3"]);
}

#[test]
fn tour() {
    golden_case(
        "tour.json",
        &[
            "tour",
            "--k",
            "3",
            "--seed",
            "42",
            "--matching",
            "m1",
            "--policy",
            "b-tour",
        ],
    );
}

#[test]
fn oracle() {
    golden_case("oracle.json", &["oracle", "--k", "3"]);
}

#[test]
fn experiment() {
    let args = [
        "experiment",
        "--k",
        "20",
        "--trials",
        "200",
        "--seed",
        "7",
        "--matching",
        "structural",
        "--policy",
        "b-tour",
    ];
    golden_case("experiment.json", &args);
    let path = scratch("report.json");
    let mut with_out: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap();
    with_out.extend(["--out", p]);
    let out = bin(&with_out);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        std::fs::read_to_string(golden("experiment.json")).unwrap()
    );
    std::fs::remove_file(path).ok();
}

#[test]
fn sweep() {
    let path = scratch("sweep.csv");
    let p = path.to_str().unwrap();
    golden_case(
        "sweep.json",
        &["sweep", "--ks", "10,20", "--trials", "100", "--seed", "1", "--csv", p],
    );
    check("sweep.csv", &std::fs::read_to_string(&path).unwrap());
    std::fs::remove_file(path).ok();
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["experiment", "--k", "15", "--trials", "300", "--seed", "3"];
    let base = bin(&args).stdout;
    let env = Command::new(env!("CARGO_BIN_EXE_maxent-donut"))
        .args(args)
        .env("MAXENT_DONUT_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(base, env.stdout);
    let mut flag = args.to_vec();
    flag.extend(["--threads", "2"]);
    assert_eq!(base, bin(&flag).stdout);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["sample", "--k", "2"],
        vec!["verify", "--k", "1"],
        vec!["experiment", "--k", "3", "--trials", "0"],
        vec![
            "experiment",
            "--k",
            "20",
            "--matching",
            "oracle",
            "--policy",
            "hierholzer",
        ],
        vec!["tour", "--k", "3", "--matching", "oracle", "--policy", "b-tour"],
        vec!["oracle", "--k", "4"],
        vec!["sweep", "--ks", "", "--trials", "10"],
        vec!["experiment", "--k", "10", "--epsilon", "0.7"],
        vec!["frobnicate"],
        vec!["sample", "--k", "three"],
        vec!["sample", "--k", "3", "--choice", "0102010"],
    ] {
        let out = bin(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
}
