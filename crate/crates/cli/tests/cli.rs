use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use infofresh_cli::config::ExperimentConfig;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_infofresh"));
    cmd.env_remove("INFOFRESH_WORKERS");
    cmd
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_config(dir: &tempfile::TempDir, body: &str) -> String {
    let path = dir.path().join("exp.toml");
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

const SMALL: &str = r#"
[source]
kind = "binary"
q = 0.25

[service]
dist = "1:0.5,11:0.5"

[simulation]
horizon = 20000
seeds = [1, 2, 3]

[sweep]
variable = "q"
grid = [0.1, 0.3, 0.5]

[mi_curve]
delta_min = 0
delta_max = 5
"#;

#[test]
fn bundled_configs_parse_and_round_trip() {
    for name in ["policy_sweep.toml", "threshold_replay.toml"] {
        let text = std::fs::read_to_string(configs().join(name)).unwrap();
        let c = ExperimentConfig::from_toml(&text, name).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml(), name).unwrap(), c);
    }
    let bundled = std::fs::read_to_string(configs().join("policy_sweep.toml")).unwrap();
    assert_eq!(ExperimentConfig::from_toml(&bundled, "policy_sweep").unwrap(), ExperimentConfig::default());
}

#[test]
fn mi_curve_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, SMALL);
    let o = run(&["mi-curve", "--config", &cfg]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("delta,mi_bits"));
    assert!(out.contains("\n1,0.188721875541\n"), "{out}");
    assert_eq!(out.lines().count(), 7);

    let iid = write_config(&dir, &SMALL.replace("q = 0.25", "q = 0.5"));
    let out = stdout(&run(&["mi-curve", "--config", &iid]));
    assert!(out.lines().skip(2).all(|l| l.ends_with(",0")), "{out}");

    let gauss = write_config(&dir, "[source]\nkind = \"gaussian\"\na = 0.9\n[service]\ndist = \"1:1\"\n");
    let out = stdout(&run(&["mi-curve", "--config", &gauss]));
    assert!(out.contains("\n0,inf\n"), "{out}");
}

#[test]
fn solve_reports_waits() {
    let o = run(&["solve", "--config", configs().join("threshold_replay.toml").to_str().unwrap()]);
    assert!(o.status.success());
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "y,prob,wait,beta,h_residual,iterations");
    assert!(rows[1].starts_with("1,0.5,1,-0.173378377432,"), "{out}");
    assert!(rows[2].starts_with("5,0.5,0,-0.173378377432,"), "{out}");
    assert!(stderr(&o).contains("optimal average MI = 0.173378377432 bits"));
}

#[test]
fn unreachable_threshold_exits_2_with_hint() {
    let o = run(&["solve", "--zmax", "1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("hint: "));
}

#[test]
fn sweep_is_reproducible_and_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, SMALL);
    let a = run(&["sweep", "--config", &cfg]);
    let b = run(&["sweep", "--config", &cfg]);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let out = stdout(&a);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "q,i_opt,i_zero_wait,i_uniform_mean,i_uniform_stderr");
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("0.1,") && rows[2].starts_with("0.3,"));
    assert_eq!(rows[3], "0.5,0,0,0,0");
    for row in &rows[1..] {
        let v: Vec<f64> = row.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[1] >= v[2] - 1e-9 && v[2] >= v[3] - 3.0 * v[4], "{row}");
    }
}

#[test]
fn sweep_with_one_seed_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, SMALL);
    assert_eq!(run(&["sweep", "--config", &cfg, "--seeds", "1"]).status.code(), Some(1));
}

#[test]
fn workers_env_is_honoured_and_checked() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, SMALL);
    let serial = bin().args(["sweep", "--config", &cfg]).env("INFOFRESH_WORKERS", "1").output().unwrap();
    let parallel = bin().args(["sweep", "--config", &cfg]).env("INFOFRESH_WORKERS", "3").output().unwrap();
    assert!(serial.status.success() && parallel.status.success());
    assert_eq!(serial.stdout, parallel.stdout);
    let bad = bin().args(["solve"]).env("INFOFRESH_WORKERS", "zero").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn threshold_replay_event_log() {
    let cfg = configs().join("threshold_replay.toml");
    let o = run(&["trace", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("n,delta,metric,queue_len,event\n0,1,0.531004406411,0,gen:1|start:1\n"), "{out}");
    assert!(out.contains("\n9,5,0.0789033990489,0,deliver:3|gen:4|start:4\n"), "{out}");
    assert!(out.contains("\n14,5,0.0789033990489,0,deliver:4|gen:5|start:5\n"), "{out}");
    assert_eq!(out.lines().count(), 24);

    let long = run(&["trace", "--config", cfg.to_str().unwrap(), "--horizon", "40"]);
    assert_eq!(long.status.code(), Some(2));
    assert!(stderr(&long).contains("exhausted"));
}

#[test]
fn trace_from_seed_and_other_policies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        &format!("{SMALL}\n[trace]\npolicy = \"uniform\"\nhorizon = 50\nseed = 9\n"),
    );
    let a = run(&["trace", "--config", &cfg]);
    let b = run(&["trace", "--config", &cfg]);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("\n6,"));
}

#[test]
fn simulate_lists_every_policy_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, SMALL);
    let o = run(&["simulate", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("policy,seed,time_average,samples_generated,samples_delivered,mean_queue_wait"));
    assert_eq!(out.lines().count(), 1 + 3 * 3);
    assert!(stderr(&o).contains("zero-wait: mean time average"));
}

#[test]
fn oracle_check_default_suite_passes() {
    let o = run(&["oracle-check"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("PASS 20 instances"), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 21);
}

#[test]
fn oracle_check_on_deterministic_service() {
    let dir = tempfile::tempdir().unwrap();
    let body = "[source]\nkind = \"binary\"\nq = 0.2\n[service]\ndist = \"3:1\"\n[oracle]\ninstances = 0\nz_cap = 40\nseed = 1\ninclude_config = true\n";
    let o = run(&["oracle-check", "--config", &write_config(&dir, body)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("PASS 1 instances"));
}

#[test]
fn tiny_oracle_cap_is_reported() {
    // The optimum waits 2 steps after a 1-step service; a cap of 1 cannot see it.
    let dir = tempfile::tempdir().unwrap();
    let body = "[source]\nkind = \"binary\"\nq = 0.1\n[service]\ndist = \"1:0.5,11:0.5\"\n[oracle]\ninstances = 0\nz_cap = 1\nseed = 1\ninclude_config = true\n";
    let o = run(&["oracle-check", "--config", &write_config(&dir, body)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("FAIL") && err.contains("worst instance: config"), "{err}");
}

#[test]
fn plot_script_next_to_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, SMALL);
    let out = dir.path().join("curve.csv");
    let o = run(&["mi-curve", "--config", &cfg, "--out", out.to_str().unwrap(), "--plot-script"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("delta,mi_bits\n"));
    let script = std::fs::read_to_string(dir.path().join("curve.py")).unwrap();
    assert!(script.contains("import matplotlib") && script.contains("curve.csv"));

    assert_eq!(run(&["mi-curve", "--plot-script"]).status.code(), Some(1));
}

#[test]
fn invalid_inputs_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let broken = write_config(&dir, "[source]\nkind = \"binary\"\nq = \"high\"\n[service]\ndist = \"1:1\"\n");
    let o = run(&["solve", "--config", &broken]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("line 1") && err.contains("[source]") && err.contains("expected f64"), "{err}");

    let bad_q = write_config(&dir, "[source]\nkind = \"binary\"\nq = 0.9\n[service]\ndist = \"1:1\"\n");
    let o = run(&["solve", "--config", &bad_q]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("source.q"));

    assert_eq!(run(&["solve", "--config", "/nonexistent/x.toml"]).status.code(), Some(1));
    assert_eq!(run(&["solve", "--tol", "-1"]).status.code(), Some(1));
    assert_eq!(run(&["solve", "--frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
