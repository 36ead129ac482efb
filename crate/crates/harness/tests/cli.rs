use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const BASE: &str = "\
model.m1 = 3
model.m = 1
model.e = 0.5
model.lambda = 1
background.T1 = 1
";

fn dissipa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dissipa"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, extra: &str) -> String {
    let overridden: Vec<&str> = extra
        .lines()
        .filter_map(|l| l.split('=').next())
        .map(str::trim)
        .collect();
    let base: String = BASE
        .lines()
        .filter(|l| !overridden.contains(&l.split('=').next().unwrap().trim()))
        .map(|l| format!("{l}\n"))
        .collect();
    let path = dir.join(name);
    fs::write(&path, format!("{base}{extra}")).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn print_commands() {
    let tmp = TempDir::new().unwrap();
    let o = dissipa(&["print-schema"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("model.lambda = <required>"));

    let cfg = write_config(tmp.path(), "c.txt", "");
    let o = dissipa(&["print-params", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("a = 0.5625"), "{text}");
    assert!(text.contains("kappa1_initial = 1.5"), "{text}");

    // print-config output is itself a valid config describing the same scenario
    let o = dissipa(&["print-config", "--config", &cfg]);
    let printed = tmp.path().join("printed.txt");
    fs::write(&printed, stdout(&o)).unwrap();
    let again = dissipa(&["print-config", "--config", printed.to_str().unwrap()]);
    assert_eq!(stdout(&o), stdout(&again));
}

#[test]
fn exit_codes_distinguish_validation_from_runtime() {
    let tmp = TempDir::new().unwrap();
    let bad = write_config(tmp.path(), "bad.txt", "model.e = 1.5\n");
    let o = dissipa(&[
        "run-odes",
        "--config",
        &bad,
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("e must lie in (0,1]"), "{}", stderr(&o));

    assert_eq!(dissipa(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(dissipa(&["run-odes"]).status.code(), Some(1));
    let missing = dissipa(&["run-odes", "--config", "/nonexistent/config.txt"]);
    assert_eq!(missing.status.code(), Some(1));

    // a step that violates the rate guard is a runtime failure
    let cfg = write_config(
        tmp.path(),
        "stiff.txt",
        "model.lambda = 0.01\ndsmc.n_particles = 100\ntime.t_end = 0.1\n",
    );
    let o = dissipa(&[
        "run-dsmc",
        "--config",
        &cfg,
        "--out",
        tmp.path().join("s").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn odes_at_the_fixed_point_are_stationary() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "fp.txt", "initial.T = 1.2857142857142858\ntime.t_end = 5\n");
    let out = tmp.path().join("odes");
    let o = dissipa(&["run-odes", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o);
    let rate: f64 = line
        .split("max |dT/dt| = ")
        .nth(1)
        .and_then(|s| s.split(',').next())
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| panic!("summary: {line}"));
    assert!(rate < 1e-12, "{line}");
    assert!(out.join("trajectory.csv").exists() && out.join("meta.txt").exists());
}

#[test]
fn dsmc_runs_are_reproducible_from_seed_and_meta() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "d.txt",
        "dsmc.n_particles = 4000\ndsmc.mode = slab1d\ngrid.n_cells = 8\ninitial.kind = sine\n\
         closure.kind = expected_relative_speed\ntime.t_end = 0.5\n",
    );
    let dirs: Vec<_> = ["a", "b", "c"].iter().map(|d| tmp.path().join(d)).collect();
    for (dir, threads) in dirs.iter().zip(["1", "1", "3"]) {
        let o = dissipa(&[
            "run-dsmc",
            "--config",
            &cfg,
            "--seed",
            "42",
            "--threads",
            threads,
            "--out",
            dir.to_str().unwrap(),
            "--quiet",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).is_empty());
    }
    for f in ["fields.csv", "sigma.csv", "diagnostics.csv"] {
        let a = fs::read(dirs[0].join(f)).unwrap();
        assert_eq!(a, fs::read(dirs[1].join(f)).unwrap(), "{f}");
        assert_eq!(a, fs::read(dirs[2].join(f)).unwrap(), "{f} with 3 threads");
    }
    let meta = fs::read_to_string(dirs[0].join("meta.txt")).unwrap();
    assert!(meta.contains("dsmc.seed = 42"));
    assert!(meta.contains("run.kind = dsmc"));

    let rerun = tmp.path().join("rerun");
    let o = dissipa(&[
        "run-dsmc",
        "--config",
        dirs[0].join("meta.txt").to_str().unwrap(),
        "--out",
        rerun.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["fields.csv", "sigma.csv", "diagnostics.csv", "meta.txt"] {
        assert_eq!(
            fs::read(dirs[0].join(f)).unwrap(),
            fs::read(rerun.join(f)).unwrap(),
            "{f}"
        );
    }
    let other = tmp.path().join("other");
    dissipa(&[
        "run-dsmc",
        "--config",
        &cfg,
        "--seed",
        "43",
        "--out",
        other.to_str().unwrap(),
    ]);
    assert_ne!(
        fs::read(dirs[0].join("fields.csv")).unwrap(),
        fs::read(other.join("fields.csv")).unwrap()
    );
}

#[test]
fn euler_sod_reports_mass_drift() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "sod.txt",
        "model.lambda = inf\ninitial.kind = sod\ngrid.n_cells = 400\neuler.bc = transmissive\ntime.t_end = 0.2\ntime.output_interval = 0.1\n",
    );
    let out = tmp.path().join("sod");
    let o = dissipa(&["run-euler", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o);
    let drift: f64 = line
        .split("mass drift = ")
        .nth(1)
        .and_then(|s| s.split(',').next())
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| panic!("summary: {line}"));
    assert!(drift < 1e-12, "{line}");
    let fields = fs::read_to_string(out.join("fields.csv")).unwrap();
    assert!(fields.starts_with("t,cell,x_center,rho,ux,uy,uz,T,S\n"));
    assert_eq!(fields.lines().count(), 1 + 3 * 400);
}

#[test]
fn compare_identity_symmetry_and_incompatibility() {
    let tmp = TempDir::new().unwrap();
    let p = |s: &str| tmp.path().join(s).to_str().unwrap().to_string();
    let grad_free =
        "initial.u = 1, -0.5, 0.25\ninitial.T = 3\ngrid.n_cells = 8\ntime.t_end = 5\ntime.output_interval = 0.5\n";
    let cfg = write_config(tmp.path(), "g.txt", grad_free);
    assert!(dissipa(&["run-odes", "--config", &cfg, "--out", &p("odes")])
        .status
        .success());
    assert!(dissipa(&["run-euler", "--config", &cfg, "--out", &p("euler")])
        .status
        .success());

    let o = dissipa(&["compare", &p("odes"), &p("odes"), "--out", &p("self")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("self/compare.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        for c in &cols[2..5] {
            assert_eq!(c.parse::<f64>().unwrap(), 0.0, "{line}");
        }
    }

    let ab = dissipa(&["compare", &p("odes"), &p("euler"), "--out", &p("ab")]);
    assert!(ab.status.success(), "{}", stderr(&ab));
    dissipa(&["compare", &p("euler"), &p("odes"), "--out", &p("ba")]);
    let read = |d: &str| fs::read_to_string(tmp.path().join(d).join("compare.csv")).unwrap();
    assert_eq!(read("ab"), read("ba"));
    for line in read("ab").lines().skip(1) {
        let linf: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!(linf < 1e-6, "{line}");
    }

    let cfg2 = write_config(
        tmp.path(),
        "g2.txt",
        &grad_free.replace("time.t_end = 5", "time.t_end = 4"),
    );
    assert!(dissipa(&["run-odes", "--config", &cfg2, "--out", &p("short")])
        .status
        .success());
    let o = dissipa(&["compare", &p("odes"), &p("short"), "--out", &p("bad")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("time.t_end"), "{}", stderr(&o));
}

#[test]
fn dsmc_compare_flags_against_sigma() {
    let tmp = TempDir::new().unwrap();
    let p = |s: &str| tmp.path().join(s).to_str().unwrap().to_string();
    let cfg = write_config(
        tmp.path(),
        "r.txt",
        "initial.u = 1, 0, 0\ndsmc.n_particles = 20000\ntime.t_end = 2\ntime.output_interval = 0.5\n",
    );
    assert!(dissipa(&["run-dsmc", "--config", &cfg, "--out", &p("dsmc")])
        .status
        .success());
    assert!(dissipa(&["run-odes", "--config", &cfg, "--out", &p("odes")])
        .status
        .success());
    let o = dissipa(&["compare", &p("dsmc"), &p("odes"), "--out", &p("cmp")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = stdout(&o);
    assert!(summary.contains("cells beyond 3 sigma"), "{summary}");
    assert!(summary.contains("predicted kappa1: 1.5"), "{summary}");
    let csv = fs::read_to_string(tmp.path().join("cmp/compare.csv")).unwrap();
    for line in csv
        .lines()
        .skip(1)
        .filter(|l| ["ux", "uy", "uz", "T"].iter().any(|f| l.contains(&format!(",{f},"))))
    {
        assert!(!line.ends_with(','), "sigma ratio missing: {line}");
    }
}

#[test]
fn sweeps_report_orders() {
    let tmp = TempDir::new().unwrap();
    let p = |s: &str| tmp.path().join(s).to_str().unwrap().to_string();
    let cfg = write_config(
        tmp.path(),
        "s.txt",
        "initial.u = 1, 0, 0\ninitial.T = 3\ntime.t_end = 2\ntime.output_interval = 0.5\n",
    );
    let o = dissipa(&[
        "sweep",
        "--config",
        &cfg,
        "--kind",
        "odes",
        "--axis",
        "dt",
        "--values",
        "0.1,0.05,0.025",
        "--out",
        &p("dt"),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let order: f64 = stdout(&o)
        .split("fitted order ")
        .nth(1)
        .and_then(|s| s.lines().next())
        .and_then(|s| s.parse().ok())
        .unwrap();
    assert!((order - 4.0).abs() < 0.3, "{}", stdout(&o));

    let o = dissipa(&[
        "sweep",
        "--config",
        &cfg,
        "--kind",
        "odes",
        "--axis",
        "dt",
        "--values",
        "0.4,0.2",
        "--out",
        &p("x"),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = dissipa(&[
        "sweep",
        "--config",
        &cfg,
        "--kind",
        "odes",
        "--axis",
        "n_cells",
        "--values",
        "8,16,32",
        "--out",
        &p("x"),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not available for odes runs"), "{}", stderr(&o));
    assert!(fs::read_to_string(tmp.path().join("dt/sweep.csv"))
        .unwrap()
        .starts_with("dt,error,local_order\n"));
}
