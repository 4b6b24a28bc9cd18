//! End-to-end checks of the command line: subcommands, exit codes, and
//! deterministic file output.

use std::path::Path;
use std::process::{Command, Output};

fn wavetank(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavetank"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL_ANALYTIC: &str = "\
# small analytic scenario
k0 = 20.0
a0 = 0.003
t0 = 0.8
epsilon = 0.06
omega_detuning = 2.0
force_F = -24.4
gauge_positions = 1.0,2.0,3.0,4.0
mode = analytic
";

#[test]
fn list_scenarios_names_the_bundled_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let out = wavetank(&["list-scenarios"], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    for name in ["fig1a", "fig1b", "fig1c", "fig2"] {
        assert!(stdout.contains(name), "missing {name} in {stdout}");
    }
}

#[test]
fn validate_accepts_bundled_and_custom_configs() {
    let dir = tempfile::tempdir().unwrap();
    let out = wavetank(&["validate", "fig1b"], dir.path());
    assert!(out.status.success());

    let path = write_config(dir.path(), "ok.cfg", SMALL_ANALYTIC);
    let out = wavetank(&["validate", &path], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("ok:"));
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();

    // unknown key, with a line-anchored message
    let path = write_config(
        dir.path(),
        "bad_key.cfg",
        &format!("{SMALL_ANALYTIC}mystery = 1\n"),
    );
    let out = wavetank(&["validate", &path], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 10"), "{stderr}");
    assert!(stderr.contains("mystery"), "{stderr}");

    // empty gauge list (here: missing key entirely)
    let no_gauges = SMALL_ANALYTIC.replace("gauge_positions = 1.0,2.0,3.0,4.0\n", "");
    let path = write_config(dir.path(), "no_gauges.cfg", &no_gauges);
    let out = wavetank(&["run", &path], dir.path());
    assert_eq!(out.status.code(), Some(2));

    // nonexistent config file
    let out = wavetank(&["run", "does_not_exist.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    // half a pulse width of tail pad cannot hold the packet: boundary leak
    let text = format!("{SMALL_ANALYTIC}grid_pad = 0.5\n").replace(
        "mode = analytic",
        "mode = numeric",
    );
    let path = write_config(dir.path(), "leak.cfg", &text);
    let out = wavetank(&["run", &path, "--output-dir", "out"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("boundary leak"));

    // an undersampled carrier is a runtime failure of the gauge stage
    let text = format!("{SMALL_ANALYTIC}sampling_rate = 5.0\n")
        .replace("mode = analytic", "mode = full-pipeline");
    let path = write_config(dir.path(), "undersampled.cfg", &text);
    let out = wavetank(&["run", &path, "--output-dir", "out2"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sampling"));
}

#[test]
fn run_writes_expected_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "small.cfg", SMALL_ANALYTIC);
    let out = wavetank(&["run", &path, "--output-dir", "out"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let base = dir.path().join("out/small");
    for file in [
        "report.txt",
        "trajectory_om+2.00_noflow.csv",
        "trajectory_om+2.00_flow.csv",
        "fit_om+2.00_flow.csv",
        "phase_curve_om+2.00.csv",
        "profile_om+2.00_flow.csv",
    ] {
        assert!(base.join(file).is_file(), "missing {file}");
    }
    let report = std::fs::read_to_string(base.join("report.txt")).unwrap();
    assert!(report.contains("c_g"));
}

#[test]
fn mode_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "small.cfg", SMALL_ANALYTIC);
    let out = wavetank(
        &["run", &path, "--output-dir", "out", "--mode", "numeric", "--quiet"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().is_empty());
    let report = std::fs::read_to_string(dir.path().join("out/small/report.txt")).unwrap();
    assert!(report.contains("mode = numeric"));

    let out = wavetank(&["run", &path, "--mode", "bogus"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = SMALL_ANALYTIC.replace("mode = analytic", "mode = full-pipeline");
    let path = write_config(dir.path(), "pipe.cfg", &config);
    for out_dir in ["a", "b"] {
        let out = wavetank(&["run", &path, "--output-dir", out_dir, "--quiet"], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let base_a = dir.path().join("a/pipe");
    let base_b = dir.path().join("b/pipe");
    let mut names: Vec<_> = std::fs::read_dir(&base_a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for name in names {
        let a = base_a.join(&name);
        if a.is_dir() {
            continue; // records/ compared below
        }
        assert_eq!(
            std::fs::read(&a).unwrap(),
            std::fs::read(base_b.join(&name)).unwrap(),
            "{name:?}"
        );
    }
    let records_a = base_a.join("records");
    let mut record_names: Vec<_> = std::fs::read_dir(&records_a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    record_names.sort();
    assert_eq!(record_names.len(), 16); // 4 gauges x 2 branches x (gauge + demod)
    for name in record_names {
        assert_eq!(
            std::fs::read(records_a.join(&name)).unwrap(),
            std::fs::read(base_b.join("records").join(&name)).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn compare_reports_cross_mode_deviations() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "small.cfg", SMALL_ANALYTIC);
    let out = wavetank(&["compare", &path, "--output-dir", "cmp"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("numeric vs analytic"));
    let csv = std::fs::read_to_string(dir.path().join("cmp/compare_small.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 8); // header + 4 gauges x 2 branches
}
