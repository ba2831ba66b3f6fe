use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = r#"
[grid]
n = 1
points = 256
half_width = 24.0

[oscillator]
kind = "inverse_square_attractive"
sigma0 = 0.1875
t_start = 1.0
T0 = 1.0

[nonlinearity]
p = 3.0
lambda_im = -1.0

[run]
t0 = 1.0
t_end = 3.0
dt = 0.02
record_every = 5
initial_data = { kind = "fourier_bump", amplitude = 0.3, modes = 3 }
"#;

const SWEEP_AXES: &str = r#"
[sweep]
amplitudes = [0.1, 0.2]
refinement_levels = 2

[compare]
cross_validate = true
"#;

fn tdnls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdnls")).args(args).output().unwrap()
}

fn run_ok(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> String {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = tdnls(&args);
    assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn summary(out: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn simulate_writes_the_full_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL);
    let out = dir.path().join("sim");
    let stdout = run_ok("simulate", &cfg, &out, &[]);
    assert!(stdout.contains("terminal ledger residual"));
    let run = fs::read_to_string(out.join("series/run.csv")).unwrap();
    assert_eq!(run.lines().next().unwrap(), "t,l2,linf,ledger_residual,hs_half,x_norm");
    let osc = fs::read_to_string(out.join("series/oscillator.csv")).unwrap();
    assert_eq!(osc.lines().next().unwrap(), "t,y1,y2,dy1,dy2,wronskian");
    assert!(out.join("fields/initial.bin").exists() && out.join("fields/final.bin").exists());
    assert!(out.join("report.txt").exists());
    let s = summary(&out);
    assert!(s["run"]["terminal_ledger_residual"].as_f64().unwrap().abs() < 1e-4);
    assert_eq!(s["config"]["grid"]["points"], 256);
}

#[test]
fn classify_reports_the_class_and_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", &SMALL.replace("t_end = 3.0", "t_end = 400.0"));
    let out = dir.path().join("cls");
    let stdout = run_ok("classify", &cfg, &out, &[]);
    assert!(stdout.contains("SubCritical"), "{stdout}");
    let s = summary(&out);
    assert_eq!(s["class"], "sub_critical");
    assert!(!s["predicted"].as_array().unwrap().is_empty());
}

#[test]
fn lens_check_profile_fit_and_korotyaev_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL);

    let out = dir.path().join("lens");
    run_ok("lens-check", &cfg, &out, &[]);
    assert!(summary(&out)["terminal_l2"].as_f64().unwrap() < 1e-3);
    assert!(out.join("series/lens_check.csv").exists());

    let out = dir.path().join("profile");
    run_ok("profile", &cfg, &out, &["--snapshot-every", "10"]);
    let csv = fs::read_to_string(out.join("series/profile.csv")).unwrap();
    assert!(csv.starts_with("t,xi,amp_pde,amp_ode,remainder_linf\n"));
    assert!(summary(&out)["all_within_budget"].as_bool().unwrap());
    assert!(out.join("fields/profile_0000.csv").exists());

    let out = dir.path().join("fit");
    let stdout = run_ok("fit", &cfg, &out, &[]);
    assert!(stdout.contains("predicted") && stdout.contains("measured"), "{stdout}");
    let fits = summary(&out)["points"][0]["fits"].as_array().unwrap().clone();
    assert!(fits.iter().any(|f| f["model"]["model"] == "power_of_y2"), "{fits:?}");

    let kcfg = write_config(
        dir.path(),
        "lin.toml",
        &SMALL.replace("lambda_im = -1.0", "").replace("t0 = 1.0", "t0 = 0.0\nframe = \"original\""),
    );
    let out = dir.path().join("kor");
    run_ok("korotyaev", &kcfg, &out, &[]);
    let s = summary(&out);
    assert!(s["worst_normalised"].as_f64().unwrap() <= 1.1);
    assert!(out.join("series/korotyaev_0.csv").exists());
}

#[test]
fn sweep_is_reproducible_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.toml", &format!("{SMALL}{SWEEP_AXES}"));
    let read = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        run_ok("sweep", &cfg, &out, &["--seed", seed]);
        fs::read(out.join("summary.json")).unwrap()
    };
    let a = read("a", "5");
    let b = read("b", "5");
    let c = read("c", "6");
    assert_eq!(a, b);
    assert_ne!(a, c);
    let series = fs::read_dir(dir.path().join("a/series")).unwrap().count();
    assert_eq!(series, 4);
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let o = tdnls(&["simulate", "--config", missing.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.toml"));
    let cfg = write_config(dir.path(), "bad.toml", &SMALL.replace("dt = 0.02", "dt = -1.0"));
    let o = tdnls(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("x").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(!tdnls(&["frobnicate"]).status.success());
}
