//! Contract tests for the command-line surface: output schemas, exit codes,
//! and config-file precedence.

use std::path::PathBuf;
use std::process::Command;

fn bvar() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bvar"))
}

fn work_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bvar_cli_{}_{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn fit_summary_schema_under_adaptive_scheme() {
    let dir = work_dir("fit_schema");
    let sim = dir.join("sim");
    let status = bvar()
        .args(["simulate", "--m", "3", "--t", "60", "--nu-true", "10", "--seed", "4"])
        .args(["--out", sim.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let fit = dir.join("fit");
    let status = bvar()
        .args(["fit", "--data", sim.join("data.csv").to_str().unwrap()])
        .args(["--p", "1", "--nu-scheme", "loss", "--iterations", "200", "--burn-in", "50"])
        .args(["--seed", "5", "--out", fit.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fit.join("summary.json")).unwrap()).unwrap();
    for field in ["nu_mean", "nu_hpd_low", "nu_hpd_high", "mh_acceptance"] {
        assert!(
            summary.get(field).is_some_and(|v| v.is_number()),
            "summary.json missing numeric `{field}`"
        );
    }
    assert!(fit.join("alpha_draws.csv").exists());
    assert!(fit.join("sigma_draws.csv").exists());
    assert!(fit.join("nu_draws.csv").exists());
    assert!(fit.join("config.txt").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn forecast_report_shape() {
    let dir = work_dir("fc_shape");
    let sim = dir.join("sim");
    assert!(bvar()
        .args(["simulate", "--m", "3", "--t", "44", "--nu-true", "10", "--seed", "4"])
        .args(["--out", sim.to_str().unwrap()])
        .status()
        .unwrap()
        .success());
    let fc = dir.join("fc");
    assert!(bvar()
        .args(["forecast", "--data", sim.join("data.csv").to_str().unwrap()])
        .args(["--p", "1", "--window", "40", "--iterations", "120", "--burn-in", "20"])
        .args(["--seed", "6", "--threads", "1", "--out", fc.to_str().unwrap()])
        .status()
        .unwrap()
        .success());
    let report = std::fs::read_to_string(fc.join("metric_report.csv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    // header plus one row per variable
    assert_eq!(lines.len(), 4);
    assert_eq!(
        lines[0],
        "variable,rmse_fixed,rmse_loss,rmse_ratio,crps_fixed,crps_loss,crps_ratio"
    );
    for row in &lines[1..] {
        // variable name plus six metric columns
        assert_eq!(row.split(',').count(), 7);
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn exit_codes_distinguish_config_and_runtime() {
    let dir = work_dir("exits");
    // config error: missing required setting
    let out = bvar()
        .args(["forecast", "--data", "nope.csv", "--window", "10"])
        .args(["--out", dir.join("a").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    // runtime error: explosive generator is rejected after validation
    let out = bvar()
        .args(["simulate", "--m", "2", "--t", "30", "--ar-coeff", "1.2"])
        .args(["--out", dir.join("b").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    // clap usage errors also exit 2
    let out = bvar().args(["fit", "--bogus-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_fills_values_and_flags_override() {
    let dir = work_dir("cfg");
    let cfg = dir.join("run.conf");
    std::fs::write(
        &cfg,
        "# simulation settings\nm = 2\nt = 30\nseed = 11\nnu_true = 6\n",
    )
    .unwrap();
    let out_a = dir.join("a");
    assert!(bvar()
        .args(["simulate", "--config", cfg.to_str().unwrap()])
        .args(["--out", out_a.to_str().unwrap()])
        .status()
        .unwrap()
        .success());
    let echoed = std::fs::read_to_string(out_a.join("config.txt")).unwrap();
    assert!(echoed.contains("seed = 11"));
    assert!(echoed.contains("m = 2"));
    // flag overrides the file value and the echo reflects it
    let out_b = dir.join("b");
    assert!(bvar()
        .args(["simulate", "--config", cfg.to_str().unwrap(), "--seed", "99"])
        .args(["--out", out_b.to_str().unwrap()])
        .status()
        .unwrap()
        .success());
    let echoed = std::fs::read_to_string(out_b.join("config.txt")).unwrap();
    assert!(echoed.contains("seed = 99"));
    // unknown keys are rejected before compute
    let bad = dir.join("bad.conf");
    std::fs::write(&bad, "m = 2\nt = 30\nmystery_knob = 1\n").unwrap();
    let out = bvar()
        .args(["simulate", "--config", bad.to_str().unwrap()])
        .args(["--out", dir.join("c").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mystery_knob"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn simulated_data_round_trips_through_ingestion() {
    let dir = work_dir("roundtrip");
    let sim = dir.join("sim");
    assert!(bvar()
        .args(["simulate", "--m", "2", "--t", "25", "--seed", "3"])
        .args(["--out", sim.to_str().unwrap()])
        .status()
        .unwrap()
        .success());
    let body = std::fs::read_to_string(sim.join("data.csv")).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next().unwrap(), "y1,y2");
    assert_eq!(lines.count(), 25);
    // a fit on the emitted file works end to end
    assert!(bvar()
        .args(["fit", "--data", sim.join("data.csv").to_str().unwrap()])
        .args(["--iterations", "60", "--burn-in", "10", "--nu-scheme", "fixed:3"])
        .args(["--seed", "8", "--out", dir.join("fit").to_str().unwrap()])
        .status()
        .unwrap()
        .success());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("fit/summary.json")).unwrap())
            .unwrap();
    // fixed scheme: adaptive-only fields are null
    assert!(summary["nu_mean"].is_null());
    assert!(summary["mh_acceptance"].is_null());
    std::fs::remove_dir_all(&dir).ok();
}
