//! End-to-end tests of the binary: config handling, exit codes, output
//! schemas, and byte-exact reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir()
        .join("chargegame-cli-tests")
        .join(format!("{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).expect("create scratch dir");
    dir
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("experiment.conf");
    std::fs::write(&path, text).expect("write config");
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chargegame"))
        .args(args)
        .output()
        .expect("binary runs")
}

const SYMMETRIC: &str = "\
demand_rate_lo = 1.2
demand_rate_hi = 1.2
efficiency_lo = 0.15
efficiency_hi = 0.15
";

#[test]
fn solve_prints_the_symmetric_closed_form() {
    let dir = scratch_dir("solve");
    let config = write_config(&dir, &format!("{SYMMETRIC}users = 2\n"));
    let out = run(&[
        "solve",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
        "--quiet",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();

    // K = 0.15/1.2 = 0.125; the two-user equilibrium bid is K/3.
    let bid_line = stdout
        .lines()
        .find(|l| l.trim_start().starts_with("user 0:"))
        .expect("bid line present");
    let bid: f64 = bid_line.split(':').nth(1).unwrap().trim().parse().unwrap();
    assert!((bid - 0.125 / 3.0).abs() < 1e-8, "bid {bid}");

    let poa_line = stdout.lines().find(|l| l.starts_with("poa:")).unwrap();
    let poa: f64 = poa_line.split(':').nth(1).unwrap().trim().parse().unwrap();
    assert!((poa - 1.5).abs() < 1e-6, "poa {poa}");
}

#[test]
fn unknown_config_key_exits_one() {
    let dir = scratch_dir("badkey");
    let config = write_config(&dir, "frobnicate = 3\n");
    let out = run(&[
        "solve",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("frobnicate"), "stderr: {stderr}");
}

#[test]
fn unknown_subcommand_exits_one() {
    let out = run(&["no-such-experiment"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn sweep_outputs_are_byte_identical_across_runs() {
    let dir = scratch_dir("repro");
    let config = write_config(
        &dir,
        "users = 2,3\ntrials = 2\ndelivery_prob = 0.8\nseed = 9\n",
    );
    for sub in ["a", "b"] {
        let out = run(&[
            "equilibrium-vs-users",
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.join(sub).to_str().unwrap(),
            "--quiet",
        ]);
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    for file in ["equilibrium-vs-users.csv", "equilibrium-vs-users.json"] {
        let a = std::fs::read(dir.join("a").join(file)).unwrap();
        let b = std::fs::read(dir.join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = scratch_dir("seedflag");
    let config = write_config(&dir, "users = 2\ntrials = 2\nseed = 9\n");
    let base = run(&[
        "equilibrium-vs-users",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.join("base").to_str().unwrap(),
        "--quiet",
    ]);
    assert!(base.status.success());
    let overridden = run(&[
        "equilibrium-vs-users",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "10",
        "--out",
        dir.join("over").to_str().unwrap(),
        "--quiet",
    ]);
    assert!(overridden.status.success());
    let a = std::fs::read(dir.join("base").join("equilibrium-vs-users.csv")).unwrap();
    let b = std::fs::read(dir.join("over").join("equilibrium-vs-users.csv")).unwrap();
    assert_ne!(a, b, "seed override had no effect");
    let text = String::from_utf8(b).unwrap();
    assert!(text.contains("# seed: 10"), "seed not embedded: {text}");
}

#[test]
fn poa_column_matches_the_symmetric_closed_form() {
    let dir = scratch_dir("poa");
    let config = write_config(&dir, &format!("{SYMMETRIC}users = 2,3,4\ntrials = 2\n"));
    let out = run(&[
        "poa-vs-users",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "--quiet",
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.join("poa-vs-users.csv")).unwrap();
    let mut data_rows = 0;
    for line in csv.lines().skip_while(|l| l.starts_with('#')).skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 4, "row {line}");
        let m: f64 = fields[0].parse().unwrap();
        assert_eq!(fields[2], "poa");
        let value: f64 = fields[3].parse().unwrap();
        let expected = (2.0 * m - 1.0) / m;
        assert!(
            (value - expected).abs() < 1e-6,
            "M={m}: poa {value} vs {expected}"
        );
        data_rows += 1;
    }
    assert_eq!(data_rows, 6, "3 sizes x 2 trials");
}

#[test]
fn trace_csv_has_the_exact_schema() {
    let dir = scratch_dir("trace");
    let config = write_config(&dir, "users = 2\nseed = 4\n");
    let out = run(&[
        "convergence-sync",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "--quiet",
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.join("convergence-sync-halfk.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# experiment: convergence-sync"));
    assert!(lines.next().unwrap().starts_with("# config_hash: "));
    assert_eq!(lines.next().unwrap(), "# seed: 4");
    assert_eq!(lines.next().unwrap(), "iter,user,bid,residual");
    let first_data = lines.next().unwrap();
    assert!(
        first_data.starts_with("0,0,") && first_data.ends_with(','),
        "initial rows carry no residual: {first_data}"
    );
    for file in ["convergence-sync-high.csv", "convergence-sync-low.csv", "convergence-sync.json"] {
        assert!(dir.join(file).exists(), "{file} missing");
    }
}

#[test]
fn nonconvergence_exits_two() {
    let dir = scratch_dir("noconv");
    let config = write_config(
        &dir,
        "users = 2\ntrials = 1\ntolerance = 1e-300\nmax_iterations = 3\n",
    );
    let out = run(&[
        "equilibrium-vs-users",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verify_exits_zero_and_reports_cleanly() {
    let dir = scratch_dir("verify");
    let out = run(&["verify", "--out", dir.to_str().unwrap(), "--quiet"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.join("verify.json")).unwrap();
    assert!(report.contains("\"monotonicity_failures\": 0"), "{report}");
    assert!(report.contains("\"scaling_failures\": 0"));
    assert!(report.contains("\"failures\": 0"));
}

#[test]
fn welfare_column_decreases_for_symmetric_games() {
    let dir = scratch_dir("welfare");
    let config = write_config(&dir, &format!("{SYMMETRIC}users = 2,3,4,5\ntrials = 1\n"));
    let out = run(&[
        "welfare-vs-users",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "--quiet",
    ]);
    assert!(out.status.success());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("welfare-vs-users.json")).unwrap())
            .unwrap();
    let means = json["aggregates"]["mean"].as_object().unwrap();
    let mut previous = f64::INFINITY;
    for m in [2, 3, 4, 5] {
        let value = means[&m.to_string()].as_f64().unwrap();
        let expected = m as f64 * 20.0 * 0.125 / (2.0 * m as f64 - 1.0);
        assert!((value - expected).abs() < 1e-6, "M={m}: {value} vs {expected}");
        assert!(value < previous, "welfare did not decrease at M={m}");
        previous = value;
    }
}

#[test]
fn equilibrium_bid_increases_with_users() {
    let dir = scratch_dir("eqbid");
    let config = write_config(&dir, &format!("{SYMMETRIC}users = 2,3,4,5\ntrials = 1\n"));
    let out = run(&[
        "equilibrium-vs-users",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "--quiet",
    ]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("equilibrium-vs-users.json")).unwrap(),
    )
    .unwrap();
    let means = json["aggregates"]["mean"].as_object().unwrap();
    let mut previous = 0.0;
    for m in [2, 3, 4, 5] {
        let value = means[&m.to_string()].as_f64().unwrap();
        let expected = 0.125 * (m as f64 - 1.0) / (2.0 * m as f64 - 1.0);
        assert!((value - expected).abs() < 1e-6, "M={m}: {value} vs {expected}");
        assert!(value > previous, "bid did not increase at M={m}");
        previous = value;
    }
}

#[test]
fn iters_vs_size_reports_async_at_least_sync() {
    let dir = scratch_dir("iters");
    let config = write_config(&dir, "users = 2,5\ntrials = 5\ndelivery_prob = 0.8\n");
    let out = run(&[
        "iters-vs-size",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "--quiet",
    ]);
    assert!(out.status.success());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("iters-vs-size.json")).unwrap())
            .unwrap();
    let means = &json["aggregates"]["mean_iterations"];
    for m in ["2", "5"] {
        let sync = means["sync"][m].as_f64().unwrap();
        let lossy = means["async"][m].as_f64().unwrap();
        assert!(lossy >= sync, "M={m}: async {lossy} < sync {sync}");
    }
}
