use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twinphoton"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn value(report: &str, key: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in\n{report}"))
        .to_string()
}

fn footer(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("# {key} = ")))
        .unwrap_or_else(|| panic!("no footer {key}"))
        .to_string()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn entangled_mirror_sweep_has_full_visibility() {
    let out = run(&[
        "simulate",
        "--variant",
        "entangled",
        "--psi-deg",
        "45",
        "--delta-deg",
        "0",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 182);
    assert!(text.contains("theta1_deg,theta2_deg,duration_s,rate_cps"));
    assert_eq!(footer(&text, "visibility"), "1");
}

#[test]
fn single_step_gives_single_row() {
    let out = run(&["simulate", "--steps", "1", "--theta2-start", "30"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 2);
    assert!(data[1].starts_with("45,30,1,"));
}

#[test]
fn noisy_simulation_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        assert!(
            run(&["simulate", "--noise", "--seed", "42", "--out", path_str(p)])
                .status
                .success()
        );
    }
    let (ta, tb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert!(text.contains("theta1_deg,theta2_deg,duration_s,counts"));
    let other = stdout(&run(&["simulate", "--noise", "--seed", "43"]));
    assert_ne!(other, text);
}

#[test]
fn estimate_round_trip_from_worked_example() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("sweep.csv");
    assert!(run(&[
        "simulate",
        "--c",
        "1000",
        "--psi-deg",
        "30",
        "--delta-deg",
        "60",
        "--out",
        path_str(&file)
    ])
    .status
    .success());
    for mode in ["three-point", "fit"] {
        let out = run(&["estimate", path_str(&file), "--mode", mode]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let report = stdout(&out);
        let psi: f64 = value(&report, "psi_deg").parse().unwrap();
        let delta: f64 = value(&report, "delta_deg").parse().unwrap();
        let c: f64 = value(&report, "c_hat").parse().unwrap();
        assert!((psi - 30.0).abs() < 1e-6, "{report}");
        assert!((delta - 60.0).abs() < 1e-6, "{report}");
        assert!((c - 1000.0).abs() < 1e-4, "{report}");
        assert_eq!(value(&report, "clamped_cosdelta"), "false");
    }
}

#[test]
fn noisy_file_is_accepted_by_estimate() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("noisy.csv");
    let args = [
        "simulate",
        "--variant",
        "entangled",
        "--noise",
        "--duration",
        "100",
        "--out",
        path_str(&file),
    ];
    assert!(run(&args).status.success());
    let out = run(&["estimate", path_str(&file), "--mode", "fit"]);
    assert!(out.status.success());
    let report = stdout(&out);
    assert_eq!(value(&report, "variant"), "entangled");
    let psi: f64 = value(&report, "psi_deg").parse().unwrap();
    let std: f64 = value(&report, "std_psi_deg").parse().unwrap();
    assert!((psi - 30.0).abs() < 5.0 * std, "{report}");
}

#[test]
fn washed_out_delay_flags_delta() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("washed.csv");
    let args = [
        "simulate",
        "--variant",
        "compensated",
        "--tau",
        "1e-12",
        "--bandwidth",
        "1e13",
        "--out",
        path_str(&file),
    ];
    assert!(run(&args).status.success());
    let out = run(&["estimate", path_str(&file), "--mode", "fit"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = stdout(&out);
    assert_eq!(value(&report, "delta_unidentifiable"), "true");
    assert_eq!(value(&report, "std_delta_deg"), "none");
}

#[test]
fn degenerate_theta1_exits_3() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("deg.csv");
    assert!(
        run(&["simulate", "--theta1-deg", "90", "--out", path_str(&file)])
            .status
            .success()
    );
    let out = run(&["estimate", path_str(&file)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate"));
}

#[test]
fn missing_three_point_rows_exit_2() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("partial.csv");
    let args = [
        "simulate",
        "--theta2-start",
        "10",
        "--theta2-stop",
        "80",
        "--steps",
        "8",
        "--out",
        path_str(&file),
    ];
    assert!(run(&args).status.success());
    assert_eq!(run(&["estimate", path_str(&file)]).status.code(), Some(2));
    // the same rows are enough for a fit
    assert!(run(&["estimate", path_str(&file), "--mode", "fit"])
        .status
        .success());
}

#[test]
fn malformed_inputs_exit_2() {
    let dir = TempDir::new().unwrap();
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "c = 1000\nduration_s = soon\n").unwrap();
    let out = run(&["simulate", "--config", path_str(&conf)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("bad.conf:2") && err.contains("duration_s"),
        "{err}"
    );

    let csv = dir.path().join("bad.csv");
    fs::write(&csv, "angle,counts\n1,2\n").unwrap();
    assert_eq!(run(&["estimate", path_str(&csv)]).status.code(), Some(2));
    assert_eq!(
        run(&["simulate", "--variant", "sideways"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["simulate", "--c", "-5"]).status.code(), Some(2));
    assert_eq!(
        run(&["estimate", "/nonexistent/file.csv"]).status.code(),
        Some(2)
    );
}

#[test]
fn flags_override_config_file() {
    let dir = TempDir::new().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "# run\nvariant = entangled\nsteps = 3\nc = 200\n").unwrap();
    let text = stdout(&run(&[
        "simulate",
        "--config",
        path_str(&conf),
        "--c",
        "400",
    ]));
    assert!(text.contains("# variant = entangled"));
    assert!(text.contains("# c = 400"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);
}

#[test]
fn oracle_agrees_at_zero_delay() {
    for variant in ["unentangled", "entangled"] {
        let out = run(&[
            "oracle",
            "--variant",
            variant,
            "--grid",
            "64",
            "--draws",
            "20",
        ]);
        assert_eq!(out.status.code(), Some(0));
        let dev: f64 = value(&stdout(&out), "max_rel_deviation").parse().unwrap();
        assert!(dev < 1e-6);
    }
}

#[test]
fn oracle_on_mirror_is_exact() {
    let out = run(&[
        "oracle",
        "--fixed-sample",
        "--psi-deg",
        "45",
        "--delta-deg",
        "0",
        "--tolerance",
        "1e-9",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let dev: f64 = value(&stdout(&out), "max_rel_deviation").parse().unwrap();
    assert!(dev < 1e-9);
}

#[test]
fn coarse_oracle_grid_reports_deviation() {
    let out = run(&[
        "oracle",
        "--variant",
        "compensated",
        "--grid",
        "2",
        "--tau",
        "1e-13",
    ]);
    let code = out.status.code();
    assert!(code == Some(0) || code == Some(4));
    let report = stdout(&out);
    let dev: f64 = value(&report, "max_rel_deviation").parse().unwrap();
    assert_eq!(code == Some(4), dev > 1e-6);
    assert_eq!(
        value(&report, "result"),
        if dev > 1e-6 { "fail" } else { "pass" }
    );
}

#[test]
fn oracle_rejects_bad_grid() {
    for grid in ["48", "1", "2048"] {
        assert_eq!(run(&["oracle", "--grid", grid]).status.code(), Some(2));
    }
}

#[test]
fn montecarlo_reports_shot_noise_slope() {
    let out = run(&["montecarlo"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("total_counts,bias_psi,std_psi,bias_delta,std_delta"));
    let slope: f64 = footer(&text, "slope_psi").parse().unwrap();
    assert!((slope + 0.5).abs() <= 0.05, "{slope}");
}

#[test]
fn montecarlo_zero_noise_has_zero_spread() {
    let text = stdout(&run(&["montecarlo", "--zero-noise", "--trials", "100"]));
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[2], "0");
        assert_eq!(cols[4], "0");
    }
}

#[test]
fn montecarlo_needs_100_trials() {
    assert_eq!(
        run(&["montecarlo", "--trials", "99"]).status.code(),
        Some(2)
    );
}
