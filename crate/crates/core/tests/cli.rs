use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nbofdma::cli::{parse_config, MetricRegistry};
use tempfile::TempDir;

fn nbofdma(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nbofdma"))
        .args(args)
        .output()
        .expect("spawn nbofdma")
}

fn write_config(dir: &TempDir, text: &str) -> PathBuf {
    let path = dir.path().join("sweep.cfg");
    fs::write(&path, text).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analytic_sweep_to_stdout() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "sweep.grid = 0, 100\nsweep.outputs = ici_exact, ici_bounds\n");
    let out = nbofdma(&["sweep", "--config", path_arg(&cfg)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(
        stdout(&out),
        "max_velocity_mps,ici_exact,ici_lower,ici_upper\n\
         0,0,0,0\n\
         100,0.00782875945797,0.00749170853854,0.00823232933948\n"
    );
}

#[test]
fn json_output_to_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "sweep.grid = 50\nsweep.outputs = capacity_exact, sum_rate\nsystem.snr_db = 20\n");
    let target = dir.path().join("out.json");
    let out = nbofdma(&["sweep", "--config", path_arg(&cfg), "--format", "json", "--output", path_arg(&target)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let parsed: serde_json::Value = serde_json::from_str(&fs::read_to_string(&target).unwrap()).unwrap();
    let row = &parsed[0];
    assert_eq!(row["max_velocity_mps"], 50.0);
    assert!(row["capacity_exact"].as_f64().unwrap() > 6.0);
    assert!(row.get("error").is_none());
}

#[test]
fn monte_carlo_overrides_and_determinism() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "sweep.grid = 100\nsweep.outputs = ici_mc\nsystem.half_subcarriers = 4\n");
    let run = |seed: &str| nbofdma(&["sweep", "--config", path_arg(&cfg), "--trials", "500", "--seed", seed]);
    let (a, b, c) = (run("7"), run("7"), run("8"));
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert!(stdout(&a).starts_with("max_velocity_mps,ici_mc,ici_mc_stderr\n"));
}

#[test]
fn too_few_trials_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "sweep.outputs = ici_mc\n");
    let out = nbofdma(&["sweep", "--config", path_arg(&cfg), "--trials", "10"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("mc.trials"), "{}", stderr(&out));
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "system.carrier = 9e8\n");
    let out = nbofdma(&["sweep", "--config", path_arg(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("system.carrier"), "{}", stderr(&out));
}

#[test]
fn missing_config_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("absent.cfg");
    let out = nbofdma(&["sweep", "--config", path_arg(&missing)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn failed_point_is_reported_and_marked() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "sweep.grid = 0, 50\nsweep.outputs = capacity_exact\nsystem.noise_variance = 0\n",
    );
    let out = nbofdma(&["sweep", "--config", path_arg(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("max_velocity_mps,capacity_exact,error"));
    assert!(lines.next().unwrap().starts_with("0,,\""));
    assert!(lines.next().unwrap().starts_with("50,"));
}

#[test]
fn analytic_point_report() {
    let out = nbofdma(&["analytic", "--v-max", "100"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("normalized_doppler = 0.376991118431\n"), "{text}");
    assert!(text.contains("useful_power = 0.992171240542\n"), "{text}");
    assert!(text.contains("ici_exact = 0.00782875945797\n"), "{text}");

    let high = nbofdma(&["analytic", "--carrier-frequency-hz", "3e9"]);
    assert!(stdout(&high).contains("approx_threshold_mps = 39.788735773\n"), "{}", stdout(&high));

    let bad = nbofdma(&["analytic", "--v-max=-5"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn check_subcommand_passes() {
    let out = nbofdma(&["check"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(!stdout(&out).contains("[FAIL]"));
}

#[test]
fn presets_are_valid() {
    let registry = MetricRegistry::builtin();
    for name in ["fig3.cfg", "fig4.cfg", "fig5.cfg"] {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("presets").join(name);
        let spec = parse_config(&fs::read_to_string(&path).unwrap(), &registry).unwrap();
        spec.validate(&registry).unwrap();
        assert_eq!(spec.grid.first(), Some(&0.0));
        assert_eq!(spec.grid.last(), Some(&100.0));
    }
}
