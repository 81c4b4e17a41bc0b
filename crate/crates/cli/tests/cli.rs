use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn cascade(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cascade"))
        .arg("--out-dir")
        .arg(out)
        .arg("--no-timestamp")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = cascade(out, args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

/// Data rows of a CSV output: metadata and comments dropped, header split off.
fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

const SMALL: &[&str] = &["--network.tier_sizes=6,60,420,840", "--network.target_degree=20"];

fn with_small<'a>(args: &[&'a str]) -> Vec<&'a str> {
    let mut v = args.to_vec();
    v.extend_from_slice(SMALL);
    v
}

#[test]
fn reruns_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = with_small(&["simulate", "--run.horizon=300", "--seed=9", "--params.p_ext=0.02"]);
    ok(a.path(), &args);
    ok(b.path(), &args);
    let x = std::fs::read(a.path().join("trajectory.csv")).unwrap();
    let y = std::fs::read(b.path().join("trajectory.csv")).unwrap();
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    assert!(text.starts_with("# @version cascade"));
    assert!(text.contains("# @seed 9\n"));
    assert!(!text.contains("@created_unix"));
}

#[test]
fn seed_changes_output() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    ok(a.path(), &with_small(&["simulate", "--run.horizon=300", "--seed=1"]));
    ok(b.path(), &with_small(&["simulate", "--run.horizon=300", "--seed=2"]));
    assert_ne!(rows(&a.path().join("trajectory.csv")), rows(&b.path().join("trajectory.csv")));
}

#[test]
fn config_file_and_overrides_combine() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("exp.ini");
    std::fs::write(&cfg, "[params]\nt_h = 0.3\n[run]\nhorizon = 50\n").unwrap();
    let text = ok(dir.path(), &["config", "--config", cfg.to_str().unwrap(), "--run.horizon=70"]);
    assert!(text.contains("t_h = 0.3\n"));
    assert!(text.contains("horizon = 70\n"));
    // the dump is itself a valid config
    let dumped = dir.path().join("dump.ini");
    std::fs::write(&dumped, &text).unwrap();
    assert_eq!(ok(dir.path(), &["config", "--config", dumped.to_str().unwrap()]), text);
}

#[test]
fn invalid_input_exits_with_one() {
    let dir = TempDir::new().unwrap();
    for args in [
        vec!["simulate", "--params.bogus=1"],
        vec!["simulate", "--run.horizon=0"],
        vec!["simulate", "--params.p_ext=1.5"],
        vec!["riskmap", "--riskmap.axis2=t_h:0.1:0.2:2"],
        vec!["calibrate"],
        vec!["simulate", "--config", "/nonexistent/exp.ini"],
        vec!["nonsense"],
    ] {
        let o = cascade(dir.path(), &args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
    assert!(!dir.path().join("trajectory.csv").exists());
}

#[test]
fn zero_forcing_keeps_everyone_active() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &with_small(&["simulate", "--run.horizon=200", "--forcing.p_int=0", "--params.p_ext=0.5"]),
    );
    let rows = rows(&dir.path().join("trajectory.csv"));
    assert_eq!(rows.len(), 200);
    assert!(rows.iter().all(|r| r[1].parse::<f64>().unwrap() == 1.0));
}

#[test]
fn simulate_reads_a_generated_network() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &with_small(&["generate", "--seed=3"]));
    let net = dir.path().join("network.txt");
    let edges = std::fs::read_to_string(&net).unwrap();
    assert!(edges.starts_with("# @version"));
    let net_arg = format!("--network.file={}", net.display());
    ok(dir.path(), &["simulate", "--run.horizon=100", &net_arg]);
    assert_eq!(rows(&dir.path().join("trajectory.csv")).len(), 100);
}

#[test]
fn generate_without_links_has_zero_degree() {
    let dir = TempDir::new().unwrap();
    let stdout = ok(
        dir.path(),
        &["generate", "--network.tier_sizes=6,60,420,840", "--network.q=0,0,0", "--network.q4=0"],
    );
    assert!(stdout.contains("mean degree   0.000"), "{stdout}");
    let text = std::fs::read_to_string(dir.path().join("network.txt")).unwrap();
    assert!(text.lines().all(|l| l.starts_with('#')), "{text}");
}

#[test]
fn dfa_of_white_noise_fixture() {
    let dir = TempDir::new().unwrap();
    let input = format!("--dfa.input={}", fixture("white_noise.csv").display());
    let stdout = ok(dir.path(), &["dfa", &input]);
    let alpha: f64 = stdout.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((0.45..=0.55).contains(&alpha), "alpha {alpha}");
    assert_eq!(rows(&dir.path().join("dfa.csv")).len(), 12);
}

#[test]
fn riskmap_without_extrinsic_channel_is_regime_one() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &[
            "riskmap",
            "--network.tier_sizes=6,60,420,2520",
            "--riskmap.axis1=t_h:0.2:0.3:2",
            "--riskmap.axis2=p_ext:0:0.01:2",
            "--riskmap.settle_steps=600",
            "--riskmap.recovery_steps=300",
            "--run.replicates=3",
            "--threads=1",
            "--output.gnuplot=true",
        ],
    );
    let cells = rows(&dir.path().join("riskmap.csv"));
    assert_eq!(cells.len(), 4);
    for c in cells.iter().filter(|c| c[1].parse::<f64>().unwrap() == 0.0) {
        assert_eq!(c[2], "I", "{c:?}");
    }
    assert!(dir.path().join("boundaries.csv").exists());
    assert!(dir.path().join("riskmap.gp").exists());
}

#[test]
fn calibrate_fixture_reports_four_parameters() {
    let dir = TempDir::new().unwrap();
    let input = format!("--calibrate.input={}", fixture("grameen_like.csv").display());
    ok(
        dir.path(),
        &with_small(&[
            "calibrate",
            &input,
            "--calibrate.runs=3",
            "--calibrate.max_evals=8",
            "--calibrate.restarts=0",
            "--calibrate.burn_in=100",
        ]),
    );
    let report = std::fs::read_to_string(dir.path().join("estimate.csv")).unwrap();
    for name in ["p_int_bar", "t_h", "p_ext", "sigma"] {
        let line = report.lines().find(|l| l.starts_with(&format!("{name},"))).expect(name);
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(v.is_finite() && v > 0.0, "{line}");
    }
    let trace = rows(&dir.path().join("trace.csv"));
    assert!(!trace.is_empty() && trace.len() <= 9);
}

#[test]
fn sweep_and_warning_write_their_tables() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &with_small(&["sweep", "--sweep.ramp_rate=5e-5", "--run.replicates=2"]));
    assert!(!rows(&dir.path().join("hysteresis.csv")).is_empty());
    assert!(dir.path().join("critical_points.csv").exists());
    ok(
        dir.path(),
        &with_small(&["warning", "--warning.p_ext=0.001:0.01:3", "--run.horizon=400", "--run.replicates=2"]),
    );
    assert_eq!(rows(&dir.path().join("early_warning.csv")).len(), 3);
}
