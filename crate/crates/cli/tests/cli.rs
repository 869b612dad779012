//! End-to-end checks of the `popsynth` binary: exit codes, the fixture
//! generator, and the staged-equals-run guarantee as seen from the shell.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn popsynth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_popsynth"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_code(output: &Output, expected: i32) {
    let code = output.status.code().expect("no signal");
    assert_eq!(
        code,
        expected,
        "exit {code}, expected {expected}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

/// Small enough to run in seconds, sampled generously enough that every
/// stratum in the truth's marginals has sample support.
fn write_fixture(dir: &Path, seed: u64) -> PathBuf {
    let out = popsynth(&[
        "fixture",
        "--out",
        dir.to_str().unwrap(),
        "--seed",
        &seed.to_string(),
        "--persons",
        "2500",
        "--fraction",
        "0.25",
        "--bias",
        "1.5,1,1,0.7",
        "--threshold",
        "3",
    ]);
    assert_code(&out, 0);
    dir.join("pipeline.toml")
}

fn tree_bytes(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(
                    path.strip_prefix(dir).unwrap().to_path_buf(),
                    fs::read(&path).unwrap(),
                );
            }
        }
    }
    out
}

#[test]
fn no_arguments_is_a_usage_error() {
    assert_code(&popsynth(&[]), 2);
}

#[test]
fn unknown_flags_are_usage_errors() {
    assert_code(&popsynth(&["run", "--bogus"]), 2);
    assert_code(&popsynth(&["frobnicate"]), 2);
}

#[test]
fn a_missing_config_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = popsynth(&[
        "run",
        "--config",
        dir.path().join("nope.toml").to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_code(&out, 1);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn an_invalid_fixture_spec_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = popsynth(&[
        "fixture",
        "--out",
        dir.path().to_str().unwrap(),
        "--fraction",
        "1.5",
    ]);
    assert_code(&out, 1);
}

#[test]
fn full_run_is_reproducible_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_fixture(dir.path(), 17);
    let config = config.to_str().unwrap();

    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let out_c = dir.path().join("c");
    for (out, seed) in [(&out_a, "17"), (&out_b, "17"), (&out_c, "99")] {
        let result = popsynth(&[
            "run",
            "--config",
            config,
            "--out",
            out.to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert_code(&result, 0);
    }
    for name in ["households.csv", "persons.csv", "metrics.json"] {
        assert!(out_a.join(name).exists(), "missing {name}");
    }
    assert_eq!(tree_bytes(&out_a), tree_bytes(&out_b));
    assert_ne!(
        fs::read(out_a.join("households.csv")).unwrap(),
        fs::read(out_c.join("households.csv")).unwrap()
    );
}

#[test]
fn stages_invoked_one_at_a_time_match_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_fixture(dir.path(), 5);
    let config = config.to_str().unwrap();

    let mono = dir.path().join("mono");
    assert_code(
        &popsynth(&["run", "--config", config, "--out", mono.to_str().unwrap()]),
        0,
    );

    let staged = dir.path().join("staged");
    for stage in ["compose", "learn-dag", "fit", "condpop", "generate", "validate"] {
        let out = popsynth(&[
            stage,
            "--config",
            config,
            "--out",
            staged.to_str().unwrap(),
        ]);
        assert_code(&out, 0);
    }
    assert_eq!(tree_bytes(&mono), tree_bytes(&staged));
}

#[test]
fn stage_order_violations_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_fixture(dir.path(), 7);
    let out = popsynth(&[
        "generate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("empty").to_str().unwrap(),
    ]);
    assert_code(&out, 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("generate"), "stderr: {stderr}");
}
