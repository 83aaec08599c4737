//! The `kss` binary and its configuration layer.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use kss_cli::{preset, RunConfig, PRESETS};
use kss_core::problems::{table1_problem, table2_problem, table3_problem, table4_problem, variable_speed_problem};
use kss_core::ProblemSpec;

fn kss(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kss"))
        .args(args)
        .current_dir(dir)
        .env_remove("KSS_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn presets_round_trip_through_toml() {
    for name in PRESETS {
        let c = preset(name).unwrap();
        let text = c.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), c, "{name}:\n{text}");
    }
}

#[test]
fn presets_match_the_library_problems() {
    let pairs: [(&str, ProblemSpec, usize); 5] = [
        ("table1", table1_problem(), 64),
        ("table2", table2_problem(), 64),
        ("table3", table3_problem(), 64),
        ("table4", table4_problem(), 16),
        ("fig1", variable_speed_problem(), 64),
    ];
    for (name, want, n) in pairs {
        let got = preset(name).unwrap().problem(Path::new(".")).unwrap();
        assert_eq!(got.kind, want.kind, "{name}");
        assert_eq!(got.final_time, want.final_time, "{name}");
        let d = want.discretization(n).unwrap();
        for (a, b) in [(&got.p, &want.p), (&got.q, &want.q), (&got.u0, &want.u0), (&got.ut0, &want.ut0)] {
            let (a, b) = (a.sample(d.grid()).unwrap(), b.sample(d.grid()).unwrap());
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-14, "{name}: {x} vs {y}");
            }
        }
    }
}

const SMALL: &str = r#"
experiment = "convergence"
name = "small"
kind = "fd-periodic-1d"
n = [16, 32]
dt = ["pi/8", "pi/16", 0.09817477042468103]
final_time = 1.0

[coefficients]
p = 1.0
q = "1 + 0.5*sin(x)"

[initial]
u = "gaussian(x)"
"#;

#[test]
fn convergence_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let mut outputs = Vec::new();
    for out in ["a", "b"] {
        let o = kss(&["convergence", "--config", "small.toml", "--out", out, "--plot"], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(fs::read(dir.path().join(out).join("small_errors.csv")).unwrap());
        assert!(dir.path().join(out).join("small.gp").exists());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.remove(0)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("dt,16,32"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn odd_grid_size_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), SMALL.replace("n = [16, 32]", "n = 255")).unwrap();
    let o = kss(&["convergence", "--config", "bad.toml"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("255"), "{}", stderr(&o));
}

#[test]
fn parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), SMALL.replace("final_time = 1.0", "final_time = \"soon\"")).unwrap();
    let o = kss(&["convergence", "--config", "bad.toml"], dir.path());
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("line") && err.contains("final_time"), "{err}");

    fs::write(dir.path().join("typo.toml"), SMALL.replace("final_time", "final_tme")).unwrap();
    let o = kss(&["convergence", "--config", "typo.toml"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("final_tme"), "{}", stderr(&o));
}

#[test]
fn unknown_preset_lists_the_choices() {
    let dir = tempfile::tempdir().unwrap();
    let o = kss(&["convergence", "--preset", "table9"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("table1"));
}

const UNSTABLE: &str = r#"
experiment = "single-run"
name = "unstable"
kind = "spectral-periodic-1d"
n = 256
cfl = 1.0
final_time = 1.0
snapshot_times = [0.5]

[coefficients]
p = "1 - 0.5*sin(x) + 0.25*cos(2*x)"
q = "1 + 0.5*sin(x) + 0.25*cos(2*x) + 0.125*sin(3*x)"

[initial]
u = "gaussian(x)"
"#;

#[test]
fn blow_up_sets_the_exit_status_on_request() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("unstable.toml"), UNSTABLE).unwrap();
    let o = kss(&["single-run", "--config", "unstable.toml", "--fail-on-blowup"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("instability detected"));
    assert!(dir.path().join("out/sol_t0.5.csv").exists());

    let o = kss(&["single-run", "--config", "unstable.toml"], dir.path());
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn single_run_with_sample_file_and_thread_env() {
    let dir = tempfile::tempdir().unwrap();
    let n = 32;
    let samples: Vec<String> = (0..n)
        .map(|j| {
            let x = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            format!("{}", 1.0 + 0.2 * x.cos())
        })
        .collect();
    fs::create_dir(dir.path().join("data")).unwrap();
    fs::write(dir.path().join("data/q.txt"), samples.join("\n")).unwrap();
    let config = r#"
experiment = "single-run"
name = "sampled"
kind = "spectral-periodic-1d"
n = 32
dt = "pi/64"
final_time = 0.5
snapshot_times = [0.25]

[coefficients]
p = 1.0
q = { file = "q.txt" }

[initial]
u = "sin(x)"
ut = "cos(2*x)"
"#;
    fs::write(dir.path().join("data/run.toml"), config).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_kss"))
        .args(["single-run", "--config", "data/run.toml", "--out", "res"])
        .current_dir(dir.path())
        .env("KSS_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let snap = fs::read_to_string(dir.path().join("res/sol_t0.25.csv")).unwrap();
    let mut lines = snap.lines();
    assert_eq!(lines.next(), Some("x,u,ut"));
    assert_eq!(lines.count(), n);
    assert!(dir.path().join("res/sol_t0.5.csv").exists());
}

#[test]
fn stability_scan_and_dusty_gas_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let scan = r#"
experiment = "stability-scan"
name = "scan"
kind = "spectral-periodic-1d"
n = [16, 32]
dt = ["pi/32", "pi/64"]
final_time = 0.5

[initial]
u = "gaussian(x)"
"#;
    fs::write(dir.path().join("scan.toml"), scan).unwrap();
    let o = kss(&["stability-scan", "--config", "scan.toml"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/scan_stability.csv")).unwrap();
    assert!(csv.starts_with("n,dt,cfl,cn_norm,g11,g12,g21,g22,blowup_flag\n"));
    assert_eq!(csv.lines().count(), 5);

    let dusty = r#"
experiment = "dusty-gas"
name = "gas"
kind = "fd-dirichlet-1d"
n = 512
cfl = 2.0
final_time = 0.5
snapshot_times = [0.25, 0.5]
"#;
    fs::write(dir.path().join("gas.toml"), dusty).unwrap();
    let o = kss(&["dusty-gas", "--config", "gas.toml"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let fronts = fs::read_to_string(dir.path().join("out/gas_fronts.csv")).unwrap();
    assert!(fronts.starts_with("time,front,sigma,sup,ahead_ratio\n"));
    let snap = fs::read_to_string(dir.path().join("out/sol_t0.5.csv")).unwrap();
    assert!(snap.starts_with("z,w\n"));
    assert_eq!(snap.lines().count(), 514);
}
