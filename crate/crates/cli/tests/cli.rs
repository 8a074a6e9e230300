use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qrisk_core::io::{emit_report, Format, RunReport};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn instance(name: &str) -> PathBuf {
    root().join("instances").join(name)
}

fn qrisk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrisk")).args(args).output().expect("binary runs")
}

fn run(cmd: &str, inst: &Path, extra: &[&str]) -> Output {
    let path = inst.to_str().unwrap();
    let mut args = vec![cmd, "--instance", path];
    args.extend_from_slice(extra);
    qrisk(&args)
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qrisk-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn two_bank_clear_matches_golden() {
    let out = run("clear", &instance("two_bank.toml"), &[]);
    assert_eq!(out.status.code(), Some(0));
    let golden = std::fs::read_to_string(root().join("crates/cli/tests/golden/two_bank_clear.json")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden);
}

#[test]
fn structured_output_is_deterministic() {
    for cmd in ["evaluate", "dual"] {
        let a = run(cmd, &instance("sum_log.toml"), &[]);
        let b = run(cmd, &instance("sum_log.toml"), &[]);
        assert_eq!(a.status.code(), Some(0), "{cmd}");
        assert_eq!(a.stdout, b.stdout, "{cmd}");
    }
}

#[test]
fn evaluate_sum_log_is_minus_five() {
    let out = run("evaluate", &instance("sum_log.toml"), &["--format", "table"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.split_whitespace().collect::<Vec<_>>() == ["primal", "-5"]), "{text}");
}

#[test]
fn out_flag_writes_report() {
    let dest = std::env::temp_dir().join(format!("qrisk-out-{}.json", std::process::id()));
    let out = run("evaluate", &instance("sum_log.toml"), &["--out", dest.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&dest).unwrap();
    assert!(text.contains("\"command\": \"evaluate\""));
    std::fs::remove_file(dest).ok();
}

#[test]
fn timing_is_opt_in() {
    let plain = String::from_utf8(run("evaluate", &instance("sum_log.toml"), &[]).stdout).unwrap();
    assert!(plain.contains("\"wall_time_ms\": null"));
    let timed = String::from_utf8(run("evaluate", &instance("sum_log.toml"), &["--timing"]).stdout).unwrap();
    assert!(!timed.contains("\"wall_time_ms\": null"));
}

#[test]
fn seed_flag_overrides_instance() {
    let out = run("evaluate", &instance("sum_log.toml"), &["--seed", "42"]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("\"seed\": 42"));
}

#[test]
fn validation_errors_exit_one() {
    let bad_probs = scratch(
        "probs.toml",
        "probs = [0.5, 0.6]\nshocks = [[1.0], [1.0]]\n[risk_measure]\nkind = \"quadratic\"\n[aggregator]\nkind = \"sum\"\n",
    );
    let out = run("evaluate", &bad_probs, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("probabilities must sum to 1"));

    let bad_net = scratch(
        "net.toml",
        "probs = [1.0]\nshocks = [[1.0, 0.0]]\n[risk_measure]\nkind = \"logarithmic\"\n[aggregator]\nkind = \"eisenberg_noe\"\nliabilities = [[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 0.0]]\n",
    );
    let out = run("clear", &bad_net, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("nonzero liability to society"));

    let missing = run("evaluate", Path::new("/nonexistent/instance.toml"), &[]);
    assert_eq!(missing.status.code(), Some(1));

    // penalty without a query section
    assert_eq!(run("penalty", &instance("two_bank.toml"), &[]).status.code(), Some(1));
    assert_eq!(run("clear", &instance("sum_log.toml"), &[]).status.code(), Some(1));
}

#[test]
fn verify_passes_on_shipped_instances() {
    for name in ["sum_log.toml", "total_loss_quadratic.toml"] {
        let out = run("verify", &instance(name), &[]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn failing_checks_exit_three() {
    // The sublevel set {ρ ≤ −3} is a thin sliver of the box here, and the
    // default 21-point grid resolves the two sides of the minimax differently.
    let inst = scratch(
        "coarse.toml",
        "probs = [0.5, 0.5]\nshocks = [[0.0, 0.0], [0.0, 0.0]]\n[risk_measure]\nkind = \"logarithmic\"\n[aggregator]\nkind = \"sum\"\n[query]\nxstar = [[1.0, 0.2], [0.1, 1.0]]\nm = -3.0\nradius = 4.0\ntrials = 10\n",
    );
    let out = run("verify", &inst, &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8(out.stderr).unwrap().contains("check failed: minimax"));
}

#[test]
fn every_shipped_instance_round_trips() {
    for entry in std::fs::read_dir(root().join("instances")).unwrap() {
        let p = entry.unwrap().path();
        if !matches!(p.extension().and_then(|e| e.to_str()), Some("toml" | "json")) {
            continue;
        }
        let a = run("evaluate", &p, &[]);
        assert_eq!(a.status.code(), Some(0), "{}", p.display());
        let rep: RunReport = serde_json::from_slice(&a.stdout).unwrap();
        assert_eq!(emit_report(&rep, Format::Structured).as_bytes(), &a.stdout[..], "{}", p.display());
    }
}
