use std::path::Path;
use std::process::{Command, Output};

use gcalc_cli::RunManifest;
use serde_json::Value;

fn gcalc(args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gcalc"));
    for var in ["GCALC_CONFIG", "GCALC_SEED", "GCALC_OUT", "GCALC_GRID_POINTS", "GCALC_PATHS", "GCALC_FORMAT"] {
        cmd.env_remove(var);
    }
    cmd.args(args).output().expect("gcalc runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn price_with(payoff: &str, t: f64) -> f64 {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("[price]\nt = {t}\n\n[price.payoff]\n{payoff}\n"));
    let out = gcalc(&["--config", &cfg, "price"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    json(&out)["value"].as_f64().unwrap()
}

#[test]
fn default_price_is_the_call_value() {
    let out = gcalc(&["price"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let exact = (1.0 / (2.0 * std::f64::consts::PI)).sqrt();
    assert!((v["value"].as_f64().unwrap() - exact).abs() < 1e-3);
    assert!(v["abs_error"].as_f64().unwrap() < 1e-3);
    assert!(v["diagnostics"]["steps"].as_u64().unwrap() > 0);
}

#[test]
fn constant_and_square_payoffs() {
    assert_eq!(price_with("kind = \"constant\"\nvalue = 3.0", 1.0), 3.0);
    assert!((price_with("kind = \"power\"\nn = 2", 2.0) - 2.0).abs() < 2e-3);
    // concave payoff sees the low volatility
    assert!((price_with("kind = \"negated\"\nof = { kind = \"power\", n = 2 }", 2.0) + 0.5).abs() < 2e-3);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for text in [
        "[pde]\ngrid_pts = 11\n",
        "[pde]\ncfl_factor = 0.9\n",
        "[gamma]\nkind = \"interval1d\"\nsigma_low = 2.0\nsigma_high = 1.0\n",
        "[price]\ndirection = [1.0, 0.0]\n",
        "not toml at all",
    ] {
        let cfg = write_config(dir.path(), text);
        let out = gcalc(&["--config", &cfg, "price"]);
        assert_eq!(out.status.code(), Some(2), "{text}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
    let missing = dir.path().join("absent.toml");
    assert_eq!(gcalc(&["--config", missing.to_str().unwrap(), "price"]).status.code(), Some(2));
    assert_eq!(gcalc(&["suite", "nonesuch"]).status.code(), Some(2));
}

#[test]
fn effective_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = gcalc(&["--seed", "11", "--grid-points", "801", "config"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("grid_points = 801"));
    let cfg = write_config(dir.path(), &text);
    let again = gcalc(&["--config", &cfg, "config"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn same_seed_gives_identical_reports_and_manifests_verify() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let out_dir = dir.path().join(name);
        let out = gcalc(&["--seed", seed, "--paths", "500", "--out", out_dir.to_str().unwrap(), "risk-demo"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        (out_dir, out.stdout)
    };
    let (first, stdout1) = run("a", "5");
    let (second, stdout2) = run("b", "5");
    let (_, stdout3) = run("c", "6");
    assert_eq!(stdout1, stdout2);
    assert_ne!(stdout1, stdout3);
    for name in ["risk-demo.json", "risk-demo.csv"] {
        assert_eq!(std::fs::read(first.join(name)).unwrap(), std::fs::read(second.join(name)).unwrap());
    }
    assert_eq!(std::fs::read(first.join("risk-demo.json")).unwrap(), stdout1);

    let manifest = RunManifest::load(&first.join("manifest.json")).unwrap();
    assert_eq!(manifest.seeds.risk, 5);
    assert_eq!(manifest.config.risk.n_paths, 500);
    assert_eq!(manifest.outputs.len(), 2);
    assert!(manifest.verify(&first).unwrap().is_empty());
    std::fs::write(first.join("risk-demo.csv"), "tampered\n").unwrap();
    assert_eq!(manifest.verify(&first).unwrap(), vec!["risk-demo.csv".to_string()]);
}

#[test]
fn csv_output_and_env_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[paths]\nsteps = 200\nn_paths = 300\n");
    let out = Command::new(env!("CARGO_BIN_EXE_gcalc"))
        .env("GCALC_CONFIG", &cfg)
        .env("GCALC_FORMAT", "csv")
        .env_remove("GCALC_SEED")
        .env_remove("GCALC_PATHS")
        .arg("qv")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("path,qv,identity_error"));
    assert_eq!(lines.count(), 300);

    let moments = gcalc(&["--format", "csv", "moments"]);
    let text = String::from_utf8(moments.stdout).unwrap();
    assert!(text.starts_with("n,closed_form,pde_value,abs_error\n"));
    assert!(text.lines().any(|l| l.starts_with("-2,-0.25,")));
}

#[test]
fn jensen_and_sde_commands_pass() {
    let out = gcalc(&["jensen"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["g_convex"]["verdict"], Value::Bool(true));
    assert!((v["jensen"]["delta"].as_f64().unwrap() - 1.0).abs() < 5e-3);

    let out = gcalc(&["--paths", "400", "sde"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json(&out)["picard"]["max_ratio"].as_f64().unwrap() <= 0.6);
}

#[test]
fn failed_checks_exit_with_one() {
    // one step per path: <B>_1 is a single squared normal, whose third moment is 15
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[paths]\nsteps = 1\nn_paths = 200\n");
    let out = gcalc(&["--config", &cfg, "qv"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("check failed"));
    assert!(json(&out)["moments"][2]["rel_error"].as_f64().unwrap() > 1.0);
}
