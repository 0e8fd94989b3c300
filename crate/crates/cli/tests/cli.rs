use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const HEADER: &str = "preset,lambda_s,mu_s,lambda_m,mu_m,num_states,acceptance_prob,blocking_prob,\
avg_reward_transition,avg_reward_time,vi_iterations,residual,runtime_ms";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ris-smdp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

/// Blanks the runtime_ms column, the only one that depends on the clock.
fn masked(path: &Path) -> String {
    let (header, rows) = read_csv(path);
    let col = header.iter().position(|h| h == "runtime_ms").unwrap();
    rows.into_iter()
        .map(|mut row| {
            row[col].clear();
            row.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn write_config(dir: &Path, name: &str, edit: impl FnOnce(&mut serde_json::Value)) -> String {
    let mut value: serde_json::Value =
        serde_json::from_str(&ris_smdp::Preset::Scenario1.config().to_json_string()).unwrap();
    edit(&mut value);
    let path = dir.join(name);
    fs::write(&path, value.to_string()).unwrap();
    path_str(&path).to_string()
}

#[test]
fn solve_writes_full_schema_and_policy() {
    let dir = TempDir::new().unwrap();
    let out = dir.path();
    ok(&[
        "solve",
        "--preset",
        "scenario1",
        "--out",
        path_str(out),
        "--gnuplot",
    ]);
    let text = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), HEADER);
    let (_, rows) = read_csv(&out.join("metrics.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "scenario1");
    assert_eq!(rows[0][5], "126");
    assert!(rows[0].iter().all(|c| !c.is_empty()));
    let policy = fs::read_to_string(out.join("policy.tsv")).unwrap();
    let lines = policy.lines().filter(|l| l.contains('\t')).count();
    assert!(lines >= 126);
    assert!(fs::read_to_string(out.join("plot.gp"))
        .unwrap()
        .contains("metrics.csv"));
}

#[test]
fn solve_reruns_are_identical_apart_from_runtime() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        ok(&[
            "solve",
            "--preset",
            "scenario2",
            "--out",
            path_str(dir.path()),
        ]);
    }
    assert_eq!(
        masked(&a.path().join("metrics.csv")),
        masked(&b.path().join("metrics.csv"))
    );
    assert_eq!(
        fs::read(a.path().join("policy.tsv")).unwrap(),
        fs::read(b.path().join("policy.tsv")).unwrap()
    );
}

#[test]
fn missing_config_exits_with_2() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.json");
    let out = run(&[
        "solve",
        "--config",
        path_str(&missing),
        "--out",
        path_str(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}

#[test]
fn invalid_config_exits_nonzero() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bad.json", |v| {
        v["lambda_s"] = serde_json::json!(-1.0)
    });
    let out = run(&["solve", "--config", &cfg, "--out", path_str(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn mismatched_policy_exits_with_3() {
    let dir = TempDir::new().unwrap();
    let out = dir.path();
    ok(&["solve", "--preset", "scenario1", "--out", path_str(out)]);
    let policy = out.join("policy.tsv");
    let res = run(&[
        "simulate",
        "--preset",
        "scenario2",
        "--policy",
        path_str(&policy),
        "--events",
        "200000",
        "--reps",
        "2",
        "--out",
        path_str(out),
    ]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn sweep_over_mu_m_fixes_lambda_s_and_sorts_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "base.json", |v| {
        v["lambda_s"] = serde_json::json!(7.0)
    });
    let out = dir.path().join("out");
    ok(&[
        "sweep",
        "--config",
        &cfg,
        "--axis",
        "mu_m",
        "--values",
        "0.01,0.1,0.5",
        "--out",
        path_str(&out),
        "--gnuplot",
    ]);
    let (header, rows) = read_csv(&out.join("metrics.csv"));
    assert_eq!(header.join(","), HEADER);
    assert_eq!(rows.len(), 3);
    let mu: Vec<f64> = rows.iter().map(|r| r[4].parse().unwrap()).collect();
    assert_eq!(mu, [0.01, 0.1, 0.5]);
    assert!(rows
        .iter()
        .all(|r| r[0] == "base" && r[1].parse::<f64>().unwrap() == 1.0));
    assert!(out.join("plot.gp").exists());
}

#[test]
fn sweep_over_lambda_s_keeps_mu_m_and_covers_the_grid() {
    let dir = TempDir::new().unwrap();
    let out = dir.path();
    ok(&[
        "sweep",
        "--preset",
        "scenario2,scenario1",
        "--axis",
        "lambda_s",
        "--values",
        "1,2,3",
        "--jobs",
        "2",
        "--out",
        path_str(out),
    ]);
    let (_, rows) = read_csv(&out.join("metrics.csv"));
    let keys: Vec<(String, String)> = rows.iter().map(|r| (r[0].clone(), r[1].clone())).collect();
    let expected: Vec<(String, String)> = ["scenario1", "scenario2"]
        .iter()
        .flat_map(|p| ["1.0", "2.0", "3.0"].map(|v| (p.to_string(), v.to_string())))
        .collect();
    assert_eq!(keys, expected);
    let mu_m = ris_smdp::Preset::Scenario1.config().rates.mu_m;
    assert!(rows.iter().all(|r| r[4].parse::<f64>().unwrap() == mu_m));
}

#[test]
fn sweep_rejects_unordered_values() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "sweep",
        "--preset",
        "scenario1",
        "--axis",
        "lambda_s",
        "--values",
        "2,1",
        "--out",
        path_str(dir.path()),
    ]);
    assert!(!out.status.success());
}

#[test]
fn simulate_without_failures_reports_no_transfers() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "nofail.json", |v| {
        v["mu_m"] = serde_json::json!(0.0)
    });
    let out = dir.path();
    ok(&["solve", "--config", &cfg, "--out", path_str(out)]);
    let policy = out.join("policy.tsv");
    let args = [
        "simulate",
        "--config",
        &cfg,
        "--policy",
        path_str(&policy),
        "--events",
        "200000",
        "--reps",
        "4",
        "--seed",
        "3",
        "--out",
        path_str(out),
    ];
    let res = ok(&args);
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.starts_with("metric,analytic,simulated,ci_half_width,result"));
    let (header, rows) = read_csv(&out.join("sim_report.csv"));
    assert!(header.join(",").starts_with(HEADER));
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    assert_eq!(rows[0][col("transfers")], "0");
    assert_eq!(rows[0][col("failures")], "0");
    let first = masked(&out.join("sim_report.csv"));
    let checks = fs::read(out.join("crosscheck.csv")).unwrap();
    ok(&args);
    assert_eq!(masked(&out.join("sim_report.csv")), first);
    assert_eq!(fs::read(out.join("crosscheck.csv")).unwrap(), checks);
}

#[test]
fn simulate_cross_check_passes_on_scenario1_at_high_load() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "s1.json", |v| {
        v["lambda_s"] = serde_json::json!(10.0)
    });
    let out = dir.path();
    ok(&["solve", "--config", &cfg, "--out", path_str(out)]);
    ok(&[
        "simulate",
        "--config",
        &cfg,
        "--policy",
        path_str(&out.join("policy.tsv")),
        "--seed",
        "500",
        "--out",
        path_str(out),
    ]);
    let (_, rows) = read_csv(&out.join("crosscheck.csv"));
    assert_eq!(rows.len(), 4);
    for row in rows {
        assert_eq!(row[4], "true", "cross-check failed: {row:?}");
    }
}

#[test]
fn channel_prints_one_csv_row() {
    let dir = TempDir::new().unwrap();
    let params = serde_json::json!({
        "bandwidth_w": 10e9,
        "freq_f": 300e9,
        "tx_power_p_ris": 1.0,
        "absorption_kf": 0.0033,
        "temp_t0": 300.0,
        "distance_d": 5.0,
        "los_flags": vec![true; 16],
        "phase_channel": vec![0.0; 16],
        "phase_meta": vec![0.0; 16],
        "n_elements": 16,
        "slot_tau0": 1e-3,
        "object_size_o": 1e6
    });
    let path = dir.path().join("channel.json");
    fs::write(&path, params.to_string()).unwrap();
    let out = ok(&["channel", "--config", path_str(&path)]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("gain,noise,rate,service_rate"));
    let row: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    assert_eq!(row.len(), 4);
    assert!((row[3] - 301.717_431_644_580_66).abs() / row[3] < 1e-9);
}
