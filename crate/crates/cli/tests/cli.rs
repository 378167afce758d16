use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const FIB: &str = r#"
alphabet = [{ id = "a", length = 1 }, { id = "b", length = 1 }]
rules = { a = "ab", b = "a" }
seed = "a"
k_max = 3
"#;

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn tilecoh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tilecoh")).args(args).output().unwrap()
}

fn run(cmd: &str, config: &Path, extra: &[&str]) -> (i32, Value, String) {
    let mut args = vec![cmd, "--config", config.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = tilecoh(&args);
    let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
    let report = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), report, stderr)
}

#[test]
fn apg_fibonacci() {
    let dir = TempDir::new().unwrap();
    let (code, r, _) = run("apg", &write(&dir, "fib.toml", FIB), &[]);
    assert_eq!(code, 0);
    assert_eq!(r["results"]["h1_limit"]["group"], "Z^2");
    assert_eq!(r["results"]["route"], "substitution");
    for level in r["results"]["levels"].as_array().unwrap() {
        assert_eq!(level["cohomology"][0], "Z");
    }
    assert_eq!(r["random_seed"], 0);
    assert!(r.get("timings_ms").is_none());
}

#[test]
fn apg_periodic_is_a_circle() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "p.toml", "alphabet = [{ id = \"a\" }]\nrules = { a = \"aa\" }\nseed = \"a\"\nk_max = 2\n");
    let (code, r, _) = run("apg", &cfg, &[]);
    assert_eq!(code, 0);
    for level in r["results"]["levels"].as_array().unwrap() {
        assert_eq!(level["cohomology"], serde_json::json!(["Z", "Z"]));
    }
    assert_eq!(r["results"]["h1_limit"]["group"], "Z");
}

#[test]
fn thue_morse_limit_is_two_divisible() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "tm.toml", &FIB.replace("b = \"a\"", "b = \"ba\""));
    let (code, r, _) = run("apg", &cfg, &[]);
    assert_eq!(code, 0);
    assert_eq!(r["results"]["h1_limit"]["group"], "rank 2, divisible by 2");
}

#[test]
fn unknown_command_is_usage_error() {
    assert_eq!(tilecoh(&["frobnicate", "--config", "x.toml"]).status.code(), Some(2));
    assert_eq!(tilecoh(&["apg"]).status.code(), Some(2));
}

#[test]
fn config_problems_listed_in_one_pass() {
    let dir = TempDir::new().unwrap();
    let (code, _, err) = run("apg", &write(&dir, "bad.toml", "k_max = -2\n"), &[]);
    assert_eq!(code, 2);
    for needle in ["k_max must be >= 0", "`alphabet`", "`rules`", "`seed`"] {
        assert!(err.contains(needle), "{needle} missing from {err}");
    }
}

#[test]
fn parse_error_reports_line() {
    let dir = TempDir::new().unwrap();
    let (code, _, err) = run("apg", &write(&dir, "bad.toml", "seed = \"a\"\nk_max = [\n"), &[]);
    assert_eq!(code, 2);
    assert!(err.contains("line"), "{err}");
}

#[test]
fn missing_file_is_config_error() {
    let (code, _, err) = run("apg", Path::new("/nonexistent/config.toml"), &[]);
    assert_eq!(code, 2);
    assert!(err.contains("cannot read"));
}

#[test]
fn rational_theta_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cp.toml", "[cutproject]\ntheta = { p = 2, r = 5 }\n");
    let (code, _, err) = run("cutproject", &cfg, &[]);
    assert_eq!(code, 2);
    assert!(err.contains("theta must be irrational"), "{err}");
}

#[test]
fn cutproject_matches_fibonacci() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "cp.toml",
        "[cutproject]\ntheta = { p = 3, q = -1, d = 5, r = 2 }\nn_max = 4\ncases = 200\n",
    );
    let (code, r, _) = run("cutproject", &cfg, &[]);
    assert_eq!(code, 0);
    assert_eq!(r["results"]["h0"], "Z");
    assert_eq!(r["results"]["h1"], "Z^2");
    assert_eq!(r["results"]["jump_suite"]["failures"], serde_json::json!([]));
}

#[test]
fn mixed_from_matrix_and_from_substitution() {
    let dir = TempDir::new().unwrap();
    let id = write(&dir, "id.toml", "[mixed]\nmatrix = [[1, 0], [0, 1]]\nconjugators = 20\n");
    let (code, r, _) = run("mixed", &id, &[]);
    assert_eq!(code, 0);
    assert_eq!(r["results"]["quotient"]["mixed_dim"], 2);

    let fib = write(&dir, "fib.toml", &format!("{FIB}\n[mixed]\nconjugators = 20\n"));
    let (code, r, _) = run("mixed", &fib, &[]);
    assert_eq!(code, 0);
    assert_eq!(r["results"]["quotient"]["mixed_dim"], 1);
}

#[test]
fn marginal_eigenvalue_fails_the_run() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "m.toml", "[mixed]\nmatrix = [[1.0000000000001]]\n");
    let (code, r, _) = run("mixed", &cfg, &[]);
    assert_eq!(code, 1);
    assert!(r["failures"][0].as_str().unwrap().contains("marginal eigenvalue"));
}

#[test]
fn pv_verify_small() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "pv.toml", &format!("{FIB}\n[pv]\nsamples = 20\ntrials = 20\n"));
    let (code, r, _) = run("pv-verify", &cfg, &["--seed", "3"]);
    assert_eq!(code, 0, "{:?}", r["failures"]);
    assert_eq!(r["random_seed"], 3);
    assert_eq!(r["config"]["random_seed"], 3);
    let levels = r["results"]["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 4);
    assert!(levels[2]["fault_control"]["mismatches_detected"].as_u64().unwrap() > 0);
}

#[test]
fn derham_small() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "dr.toml",
        &format!("{FIB}\n[derham]\ntrials = 5\npatch_tiles = 500\ncontrol_trials = 2\n"),
    );
    let (code, r, _) = run("derham", &cfg, &[]);
    assert_eq!(code, 0, "{:?}", r["failures"]);
    assert!(r["results"]["negative_control"]["failures_detected"].as_u64().unwrap() > 0);
}

#[test]
fn reports_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "pv.toml", &format!("{FIB}\nrandom_seed = 9\n[pv]\nsamples = 10\ntrials = 10\n"));
    let outs: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("r{i}.json"));
            let (code, _, _) = run("pv-verify", &cfg, &["--out", out.to_str().unwrap()]);
            assert_eq!(code, 0);
            std::fs::read(out).unwrap()
        })
        .collect();
    assert!(!outs[0].is_empty());
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn timings_are_opt_in() {
    let dir = TempDir::new().unwrap();
    let (_, r, _) = run("apg", &write(&dir, "fib.toml", FIB), &["--timings"]);
    assert!(r["timings_ms"]["analyze"].is_number());
}
