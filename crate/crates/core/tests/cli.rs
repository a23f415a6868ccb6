use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use rydberg_qubit::wavepacket::read_binary_grid;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rydberg-qubit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("golden")
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name).display().to_string()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().find(|l| l.starts_with('{')).expect("JSON error line");
    serde_json::from_str(line).unwrap()
}

fn manifest(path: &Path) -> Value {
    let mut name = path.as_os_str().to_owned();
    name.push(".manifest.json");
    serde_json::from_str(&std::fs::read_to_string(name).unwrap()).unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    let out = run(&["spectra", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "usage");
}

#[test]
fn bad_quantities_and_keys_exit_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("x.csv");
    let out = dir.path().to_str().unwrap();
    let o = run(&["spectra", "--omega", "1:2", "--out", out_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "quantity");
    let o = run(&["spectra", "--set", "bogus=1", "--out", out_path.to_str().unwrap()]);
    assert_eq!(stderr_json(&o)["error"], "config");
    let o = run(&["potential", "--B", "3 furlongs", "--out", out_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!Path::new(out).join("x.csv").exists());
}

#[test]
fn spectra_table_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let o = run(&["spectra", "--omega", "-5MHz:5MHz:11", "--branch", "plus", "--out", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "z,omega,branch,ReK,ImK");
    assert_eq!(lines.len(), 12);
    assert!(lines[1].starts_with(",") && lines[1].contains(",plus,"));
    let m = manifest(&path);
    assert_eq!(m["command"], "spectra");
    assert_eq!(m["params"]["inputs"]["density"], 3e10);
    assert_eq!(m["params"]["inputs"]["b_field"], 1.6);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    let cfg = config("fig2c_potential.conf");
    let o = run(&["potential", "--config", &cfg, "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let m = manifest(&path);
    let d3 = m["params"]["inputs"]["delta3"].as_f64().unwrap();
    assert!((d3 - 2.0 * std::f64::consts::PI * 100e6).abs() < 1e-3);
    assert_eq!(m["results"]["regimes"][0]["regime"], "Dispersive");
    let rb = m["results"]["blockade_radius_um"].as_f64().unwrap();
    assert!((rb - 6.0015).abs() < 1e-3);

    let o = run(&["potential", "--config", &cfg, "--delta3", "-50MHz", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let d3 = manifest(&path)["params"]["inputs"]["delta3"].as_f64().unwrap();
    assert!((d3 + 2.0 * std::f64::consts::PI * 50e6).abs() < 1e-3);
}

#[test]
fn magnetometer_roots_and_bracket_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    let o = run(&["magnetometer", "--B", "-10G:10G:21", "--find-pi", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let r = &manifest(&path)["results"];
    let plus = r["b_pi_phase_plus"].as_f64().unwrap();
    let minus = r["b_pi_phase_minus"].as_f64().unwrap();
    assert!((plus + minus).abs() < 2e-3);
    let header = std::fs::read_to_string(&path).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "B_G,eta_plus,eta_minus,phi_plus,phi_minus,vg_plus,vg_minus");

    let o = run(&["magnetometer", "--B", "-2G:2G:5", "--find-pi", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"], "bracket");
}

#[test]
fn wavepacket_binary_grid_matches_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("w.csv");
    let bin_path = dir.path().join("w.bin");
    let common = ["wavepacket", "--t0", "1us", "--samples", "2048", "--span-t0", "32", "--z-points", "3", "--t-stride", "8"];
    let o = run(&[&common[..], &["--out", csv.to_str().unwrap()]].concat());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&[&common[..], &["--format", "binary-grid", "--out", bin_path.to_str().unwrap()]].concat());
    assert!(o.status.success());
    let grid = read_binary_grid(std::fs::File::open(&bin_path).unwrap()).unwrap();
    assert_eq!(grid.z_grid.len(), 3);
    assert_eq!(grid.t_grid.len(), 256);
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows = text.lines().skip(1).count();
    assert_eq!(rows, 2 * 3 * 256);
    let m = manifest(&csv);
    assert!(m["results"]["norm_out"].as_f64().unwrap() <= m["results"]["norm_in"].as_f64().unwrap());
}

#[test]
fn delocalize_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = run(&["delocalize", "--scan", "none", "--samples", "20", "--seed", "11", "--out", p.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("# seed=11 mode=weighted_delta"));
    assert!(text.contains("\nindex,xi,eta_plus,eta_minus,phi_plus,phi_minus\n"));
    assert!(text.contains("\n# mean,"));
}

#[test]
fn regress_passes_on_shipped_goldens() {
    let o = run(&["regress", golden_dir().to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}{}", String::from_utf8_lossy(&o.stderr));
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn regress_detects_one_percent_decoherence_change() {
    // +1% of γ31 ≈ 2π × 30.3 kHz of extra dephasing
    let o = run(&["regress", golden_dir().to_str().unwrap(), "--set", "dephasing31=30.3kHz"]);
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("FAIL switch_curve"));
    assert!(stdout.contains("FAIL spectra_eit"));
    assert!(stdout.contains("manifest params.gamma31"));
    assert_eq!(stderr_json(&o)["error"], "regression");
}

#[test]
fn bless_then_regress_and_missing_goldens() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    let o = run(&["regress", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "missing_golden");

    let fresh = dir.path().join("fresh");
    assert!(run(&["bless", fresh.to_str().unwrap()]).status.success());
    for entry in std::fs::read_dir(golden_dir()).unwrap() {
        let name = entry.unwrap().file_name();
        let shipped = std::fs::read(golden_dir().join(&name)).unwrap();
        assert_eq!(shipped, std::fs::read(fresh.join(&name)).unwrap(), "{name:?} differs from shipped golden");
    }
    assert!(run(&["regress", fresh.to_str().unwrap()]).status.success());
}
