//! End-to-end tests that drive the compiled `stabsel` binary.

use std::path::Path;
use std::process::{Command, Output};

fn stabsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stabsel"))
        .args(args)
        .output()
        .expect("failed to run binary")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_cfg(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn select_dominant_size_gets_all_mass() {
    // e^eta = 3 is enough budget to put all mass on the smallest of
    // (0.2, 0.5, 0.9) under a uniform prior.
    let eta = format!("{}", 3.0_f64.ln());
    let out = stabsel(&[
        "select", "--sizes", "0.2,0.5,0.9", "--mechanism", "minse", "--eta", &eta, "--tau", "0",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(
        text.contains("p=(1.00000000000e0,0.00000000000e0,0.00000000000e0)"),
        "unexpected output: {text}"
    );
}

#[test]
fn select_zero_budget_ties_stay_uniform() {
    let out = stabsel(&["select", "--sizes", "1,1", "--mechanism", "minse", "--eta", "0"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(
        text.contains("p=(5.00000000000e-1,5.00000000000e-1)"),
        "unexpected output: {text}"
    );
}

#[test]
fn malformed_prior_exits_2_naming_the_field() {
    let out = stabsel(&[
        "select", "--sizes", "0.2,0.5", "--prior", "0.5,0.6", "--mechanism", "minse", "--eta",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("prior"), "diagnostic must name the field: {err}");
    assert!(err.contains("sum"), "diagnostic must explain the simplex violation: {err}");
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "run.toml",
        r#"
method = "minse"
seed_count = 2
bogus_key = 1

[budget]
eta = 0.693147180559945
tau = 0.01
alpha = 0.1

[scenario]
kind = "coin_flip"
k = 3
n_trials = 500
"#,
    );
    let out = stabsel(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("bogus_key"), "diagnostic must name the key: {err}");
}

const RUN_CFG: &str = r#"
method = "minse"
seed_count = 5

[budget]
eta = 0.693147180559945
tau = 0.01
alpha = 0.1

[scenario]
kind = "coin_flip"
k = 4
n_trials = 2000
"#;

#[test]
fn run_emits_one_csv_row_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "run.toml", RUN_CFG);
    let out_dir = dir.path().join("results");
    let out = stabsel(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let results = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    let lines: Vec<&str> = results.lines().collect();
    assert_eq!(lines[0], "seed,method,scenario,coverage,mean_length,n_test");
    assert_eq!(lines.len(), 6, "5 seeds -> 5 rows plus header");
    for (i, line) in lines[1..].iter().enumerate() {
        assert!(line.starts_with(&format!("{i},minse,coin_flip,")));
        assert!(line.ends_with(",2000"));
    }
    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert!(summary.starts_with("method,scenario,n_seeds,"));
    assert!(summary.lines().nth(1).unwrap().starts_with("minse,coin_flip,5,"));
}

#[test]
fn run_is_byte_identical_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "run.toml", RUN_CFG);
    let read_both = |tag: &str| {
        let out_dir = dir.path().join(tag);
        let out = stabsel(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success());
        (
            std::fs::read(out_dir.join("results.csv")).unwrap(),
            std::fs::read(out_dir.join("summary.csv")).unwrap(),
        )
    };
    let (r1, s1) = read_both("a");
    let (r2, s2) = read_both("b");
    assert_eq!(r1, r2, "per-seed CSV must be reproducible byte for byte");
    assert_eq!(s1, s2, "summary CSV must be reproducible byte for byte");
}

#[test]
fn run_coverage_matches_coin_flip_law() {
    // Coin-flip oracles miscover independently with probability
    // alpha_base = (alpha - tau) e^{-eta}; a minse selection's coverage is
    // then 1 - alpha_base e^{eta} - tau = 1 - alpha = 0.9 up to noise.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "run.toml", RUN_CFG);
    let out_dir = dir.path().join("out");
    let out = stabsel(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let row = summary.lines().nth(1).unwrap();
    let coverage: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
    assert!(coverage >= 0.89, "coverage {coverage} fell below the transfer bound");
    assert!(coverage <= 0.995, "coverage {coverage} suspiciously close to 1");
}

fn online_cfg(t_len: usize) -> String {
    format!(
        r#"
t_len = {t_len}
ar = 0.9
ma = 0.0
noise_sd = 1.0
alpha_prime = 0.04
gamma = 0.02
eta = 0.693147180559945
tau = 0.02
scale = 20.0
option = "sampled"
seeds = [7]
"#
    )
}

#[test]
fn online_zero_horizon_emits_header_only_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "online.toml", &online_cfg(0));
    let out_dir = dir.path().join("out");
    let out = stabsel(&["online", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let trace = std::fs::read_to_string(out_dir.join("trace_adacoma.csv")).unwrap();
    assert_eq!(trace, "t,chosen,covered,length,weights,p_star\n");
    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert!(summary.contains("adacoma,0,"), "summary must flag the empty run: {summary}");
    assert!(summary.contains(",nan,"), "empty summary statistics must be nan: {summary}");
}

#[test]
fn online_same_seed_gives_identical_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "online.toml", &online_cfg(400));
    let run_once = |tag: &str| {
        let out_dir = dir.path().join(tag);
        let out = stabsel(&["online", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(out_dir.join("trace_adacoma.csv")).unwrap()
    };
    let t1 = run_once("a");
    let t2 = run_once("b");
    assert_eq!(t1, t2, "identical seed must reproduce the trace exactly");
    let text = String::from_utf8(t1).unwrap();
    assert_eq!(text.lines().count(), 401, "400 steps plus header");
    // Every data row carries the full weight and p vectors over 3 learners.
    let row = text.lines().nth(250).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields.len(), 6);
    assert_eq!(fields[4].split(';').count(), 3);
    assert_eq!(fields[5].split(';').count(), 3);
}

#[test]
fn recalibrate_runs_on_a_csv_dataset() {
    let dir = tempfile::tempdir().unwrap();
    // Synthetic dataset: y = sin(mean(x)) + noise, written as a plain CSV.
    let mut csv = String::from("x0,x1,x2,y\n");
    let mut state = 0x9e3779b97f4a7c15u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..900 {
        let x: Vec<f64> = (0..3).map(|_| 4.0 * next() - 2.0).collect();
        let mean = x.iter().sum::<f64>() / 3.0;
        let y = mean.sin() + 0.1 * (next() - 0.5);
        csv.push_str(&format!("{},{},{},{y}\n", x[0], x[1], x[2]));
    }
    let data_path = dir.path().join("data.csv");
    std::fs::write(&data_path, csv).unwrap();
    let cfg = write_cfg(
        dir.path(),
        "recal.toml",
        &format!(
            r#"
data = "{}"
k = 4
alpha = 0.1
eta = 0.693147180559945
tau = 0.0
train_frac = 0.5
cal_frac = 0.2
aux_frac = 0.1
"#,
            data_path.display()
        ),
    );
    let out_dir = dir.path().join("out");
    let out =
        stabsel(&["recalibrate", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--seed", "3"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(out_dir.join("recalibrate_summary.csv")).unwrap();
    let row = summary.lines().nth(1).unwrap();
    let coverage: f64 = row.split(',').nth(7).unwrap().parse().unwrap();
    assert!(
        (0.8..=1.0).contains(&coverage),
        "recalibrated coverage {coverage} outside plausible range"
    );
}
