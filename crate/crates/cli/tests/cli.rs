use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn holonomy(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holonomy"))
        .args(args)
        .current_dir(cwd)
        .env_remove("HOLONOMY_JOBS")
        .output()
        .expect("binary runs")
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("stderr is not JSON: {}", String::from_utf8_lossy(&out.stderr)))
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

#[test]
fn list_presets_names_every_experiment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = holonomy(&["list-presets"], tmp.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["fig2b", "fig2c", "fig2d", "fig3a", "fig3b", "fig3c", "fig3d", "fig4", "fig5a", "fig5b", "qs-table", "two-qubit"] {
        assert!(text.lines().any(|l| l.split_whitespace().next() == Some(name)), "{name} missing");
    }
}

#[test]
fn empty_config_reports_missing_fields() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("empty.toml"), "").unwrap();
    let out = holonomy(&["run", "empty.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "config");
    assert_eq!(err["missing"], serde_json::json!(["experiment", "output.dir"]));
}

#[test]
fn frequency_without_unit_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "experiment = \"single-gate\"\n[gate]\nname = \"not\"\nomega_max = 16\n[output]\ndir = \"o\"\n";
    std::fs::write(tmp.path().join("c.toml"), cfg).unwrap();
    let out = holonomy(&["run", "c.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_json(&out)["message"].as_str().unwrap().contains("no unit"));
}

#[test]
fn unreachable_duration_is_a_simulation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "experiment = \"single-gate\"\n[gate]\nname = \"not\"\nomega_max = \"16 MHz\"\ntau_ns = 20.0\n[output]\ndir = \"o\"\n";
    std::fs::write(tmp.path().join("c.toml"), cfg).unwrap();
    let out = holonomy(&["run", "c.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "simulation");
    assert!(err["message"].as_str().unwrap().contains("minimal duration"));
}

#[test]
fn missed_expectation_exits_with_four() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "experiment = \"single-gate\"\n[device]\ndecoherence = false\n[gate]\nname = \"not\"\nomega_max = \"16 MHz\"\n\
               [output]\ndir = \"o\"\n[assert]\nexpected = { not = 0.5 }\ntolerance = 0.01\n";
    std::fs::write(tmp.path().join("c.toml"), cfg).unwrap();
    assert_eq!(holonomy(&["run", "c.toml"], tmp.path()).status.code(), Some(0));
    let out = holonomy(&["run", "c.toml", "--assert"], tmp.path());
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_json(&out)["error"], "assert");
}

#[test]
fn unknown_preset_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = holonomy(&["preset", "fig9"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn qs_table_has_three_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = holonomy(&["preset", "qs-table", "--out", "q"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("q/qs.csv")).unwrap();
    let rows: Vec<Vec<f64>> =
        csv.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2][0], 1.0);
    assert!(rows[2][1] < 1e-8);
    assert!((rows[0][1] - std::f64::consts::PI.powi(2) / 4.0).abs() < 1e-6);
    for f in ["config.echo", "report.json"] {
        assert!(tmp.path().join("q").join(f).exists(), "{f}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for dir in ["a", "b"] {
        let out = holonomy(&["preset", "fig2b", "--out", dir, "--jobs", "2"], tmp.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["config.echo", "report.json", "trajectory.csv", "waveform.csv"] {
        let a = std::fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs between reruns");
    }
    let fidelity = report(&tmp.path().join("a"))["headline"]["not"].as_f64().unwrap();
    assert!((fidelity - 0.9979).abs() < 0.003, "{fidelity}");
}

#[test]
fn two_qubit_preset_writes_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let out = holonomy(&["preset", "two-qubit", "--initial", "fgg", "--compensation", "on", "--out", "t", "--assert"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("t/trajectory_fgg_on.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t_ns,pop_fgg,pop_geg,pop_ggf,loss,fidelity"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert!(rows[0][4] < 1e-3 && rows.last().unwrap()[4] < 1e-3);
    let r = report(&tmp.path().join("t"));
    assert!(r["headline"]["fgg/on"].as_f64().unwrap() > 0.98);
}

#[test]
fn overrides_only_apply_to_two_qubit_presets() {
    let tmp = tempfile::tempdir().unwrap();
    let out = holonomy(&["preset", "qs-table", "--initial", "fgf"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn not_gate_config_reaches_the_reference_fidelity() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = workspace_root().join("configs/not-gate.toml");
    let out = holonomy(&["run", cfg.to_str().unwrap(), "--out", "n", "--assert"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&tmp.path().join("n"));
    let fg = r["results"][0]["report"]["gate_fidelity"].as_f64().unwrap();
    assert!((fg - 0.9975).abs() < 0.003, "{fg}");
    let curve = std::fs::read_to_string(tmp.path().join("n/gate_fidelity_not.csv")).unwrap();
    assert_eq!(curve.lines().count(), 102);
}
