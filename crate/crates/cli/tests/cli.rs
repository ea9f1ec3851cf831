use std::fs;
use std::path::Path;
use std::process::Command;

use nems_cli::config::parse_config;
use nems_cli::runner::evaluate;

fn nems() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nems"))
}

fn config(task: serde_json::Value, solver: serde_json::Value) -> serde_json::Value {
    serde_json::json!({
        "schema": 1,
        "solver": solver,
        "system": { "mu_tilde": 0.5, "omega": 1.0, "lambda": 0.8 },
        "leads": {
            "left": { "gamma_rate": 0.05, "temperature": 1.0, "chem_potential": 1.0, "lorentz_center": 0.0, "lorentz_width": 2.0 },
            "right": { "gamma_rate": 0.05, "temperature": 1.5, "chem_potential": -1.0, "lorentz_center": 1.0, "lorentz_width": 2.5 }
        },
        "task": task
    })
}

fn write(dir: &Path, name: &str, v: &serde_json::Value) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, v.to_string()).unwrap();
    p
}

fn run(args: &[&str], cfg: &Path, out: &Path) -> i32 {
    let status = nems()
        .args(args)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .status()
        .unwrap();
    status.code().unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn validate_reports_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", &config(serde_json::json!({"type": "point"}), serde_json::json!({})));
    assert_eq!(nems().arg("validate").arg("--config").arg(&good).status().unwrap().code(), Some(0));
    let mut bad = config(serde_json::json!({"type": "point"}), serde_json::json!({"n_fokc": 4}));
    let bad_path = write(dir.path(), "bad.json", &bad);
    let out = nems().args(["validate", "--strict", "--config"]).arg(&bad_path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("solver.n_fokc"));
    bad["schema"] = serde_json::json!("one");
    let bad_path = write(dir.path(), "bad.json", &bad);
    assert_eq!(run(&["run"], &bad_path, &dir.path().join("o")), 2);
    assert_eq!(run(&["run"], &dir.path().join("missing.json"), &dir.path().join("o")), 2);
}

#[test]
fn point_results_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(serde_json::json!({"type": "point"}), serde_json::json!({"n_fock": 6}));
    let path = write(dir.path(), "c.json", &cfg);
    let out = dir.path().join("out");
    assert_eq!(run(&["run"], &path, &out), 0);
    let (header, rows) = read_csv(&out.join("results.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][column(&header, "status")], "ok");
    let (parsed, _) = parse_config(&cfg.to_string(), true).unwrap();
    let expected = evaluate(&parsed, &parsed.resolve(6).unwrap()).unwrap();
    let get = |name: &str| rows[0][column(&header, name)].parse::<f64>().unwrap();
    assert_eq!(get("I_R"), expected.current_right);
    assert_eq!(get("I_L"), expected.current_left);
    assert_eq!(get("dot_population"), expected.dot_population);
    assert_eq!(get("n_fock"), 6.0);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["n_fock"], 6);
    assert_eq!(meta["points"], 1);
    assert!(meta["total_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn bias_scan_has_conductance_column() {
    let dir = tempfile::tempdir().unwrap();
    let task = serde_json::json!({"type": "scan", "axis": {"param": "delta_mu", "values": [-2.0, -1.0, 0.5, 2.0]}});
    let path = write(dir.path(), "c.json", &config(task, serde_json::json!({"n_fock": 5})));
    let out = dir.path().join("out");
    assert_eq!(run(&["run"], &path, &out), 0);
    let (header, rows) = read_csv(&out.join("results.csv"));
    let (ci, cg, cd) = (column(&header, "I_R"), column(&header, "dIR_ddelta_mu"), column(&header, "delta_mu"));
    let num = |r: usize, c: usize| rows[r][c].parse::<f64>().unwrap();
    let d: Vec<f64> = (0..4).map(|r| num(r, cd)).collect();
    assert_eq!(d, vec![-2.0, -1.0, 0.5, 2.0]);
    let mu_l: Vec<f64> = (0..4).map(|r| num(r, column(&header, "mu_L"))).collect();
    assert_eq!(mu_l, vec![-1.0, -0.5, 0.25, 1.0]);
    assert_eq!(num(0, cg), (num(1, ci) - num(0, ci)) / (d[1] - d[0]));
    assert_eq!(num(1, cg), (num(2, ci) - num(0, ci)) / (d[2] - d[0]));
    assert_eq!(num(3, cg), (num(3, ci) - num(2, ci)) / (d[3] - d[2]));
}

#[test]
fn map_rows_follow_grid_order_and_threads_do_not_change_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let task = serde_json::json!({
        "type": "map",
        "x": {"param": "mu_tilde", "values": {"from": -2.0, "to": 2.0, "steps": 3}},
        "y": {"param": "delta_mu", "values": {"from": -1.0, "to": 1.0, "steps": 4}}
    });
    let path = write(dir.path(), "c.json", &config(task, serde_json::json!({"n_fock": 4})));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run(&["run", "--threads", "1"], &path, &a), 0);
    assert_eq!(run(&["run", "--threads", "3"], &path, &b), 0);
    let bytes_a = fs::read(a.join("results.csv")).unwrap();
    assert_eq!(bytes_a, fs::read(b.join("results.csv")).unwrap());
    let (header, rows) = read_csv(&a.join("results.csv"));
    assert_eq!(rows.len(), 12);
    let (cm, cd) = (column(&header, "mu_tilde"), column(&header, "delta_mu"));
    assert_eq!(rows[0][cm], rows[3][cm]);
    assert_ne!(rows[3][cm], rows[4][cm]);
    assert_ne!(rows[0][cd], rows[1][cd]);
    assert!(header.contains(&"dIR_ddelta_mu".to_string()));
}

#[test]
fn every_point_failing_gives_exit_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(serde_json::json!({"type": "point"}), serde_json::json!({"n_fock": 40, "memory_budget_mb": 1}));
    let path = write(dir.path(), "c.json", &cfg);
    let out = dir.path().join("out");
    assert_eq!(run(&["run"], &path, &out), 3);
    let (header, rows) = read_csv(&out.join("results.csv"));
    assert!(rows[0][column(&header, "status")].starts_with("error"));
    assert_eq!(rows[0][column(&header, "I_R")], "NaN");
}

#[test]
fn guard_violations_fail_only_under_strict() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(serde_json::json!({"type": "point"}), serde_json::json!({"kind": "gkls", "n_fock": 6}));
    cfg["leads"]["left"]["gamma_rate"] = serde_json::json!(0.5);
    let path = write(dir.path(), "c.json", &cfg);
    assert_eq!(run(&["run"], &path, &dir.path().join("a")), 0);
    assert_eq!(run(&["run", "--strict"], &path, &dir.path().join("b")), 4);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("b/meta.json")).unwrap()).unwrap();
    assert!(meta["violations"][0].as_str().unwrap().contains("secular"));
}

#[test]
fn transient_writes_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let task = serde_json::json!({
        "type": "transient",
        "initial": {"kind": "fock", "dot": 1, "level": 0, "frame": "lab"},
        "times": {"from": 0.0, "to": 5.0, "steps": 11}
    });
    let path = write(dir.path(), "c.json", &config(task, serde_json::json!({"n_fock": 8})));
    let out = dir.path().join("out");
    assert_eq!(run(&["run"], &path, &out), 0);
    let (header, rows) = read_csv(&out.join("trajectory.csv"));
    assert_eq!(rows.len(), 11);
    let pop = column(&header, "dot_population");
    let tr0: f64 = rows[0][column(&header, "trace")].parse().unwrap();
    assert!((tr0 - 1.0).abs() < 1e-6, "truncation loss {}", 1.0 - tr0);
    assert_eq!(rows[0][pop].parse::<f64>().unwrap(), tr0);
    let n0: f64 = rows[0][column(&header, "n_phonon")].parse().unwrap();
    assert!(n0.abs() < 1e-3, "lab-frame vacuum has {n0} phonons");
    for r in &rows {
        let tr: f64 = r[column(&header, "trace")].parse().unwrap();
        assert!((tr - tr0).abs() < 1e-12);
    }
    assert!(out.join("results.csv").exists());
}

#[test]
fn auto_converge_records_history() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        serde_json::json!({"type": "point"}),
        serde_json::json!({"auto_converge": true, "n_max": 20, "converge_tol": 1e-6}),
    );
    let path = write(dir.path(), "c.json", &cfg);
    let out = dir.path().join("out");
    assert_eq!(run(&["run"], &path, &out), 0);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    let history = meta["convergence"]["history"].as_array().unwrap();
    assert_eq!(history[0]["n_fock"], 8);
    let n = meta["n_fock"].as_u64().unwrap();
    assert_eq!(history.last().unwrap()["n_fock"].as_u64().unwrap(), n);
    if meta["convergence"]["converged"].as_bool().unwrap() {
        assert!(history.last().unwrap()["max_change"].as_f64().unwrap() < 1e-6);
    }
}

#[test]
fn diagnostics_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(serde_json::json!({"type": "point"}), serde_json::json!({}));
    cfg["diagnostics"] = serde_json::json!({"times": {"from": 0.0, "to": 10.0, "steps": 201}, "energies": [-1.0, 0.0, 2.0]});
    let path = write(dir.path(), "c.json", &cfg);
    let out = dir.path().join("out");
    assert_eq!(run(&["diagnostics"], &path, &out), 0);
    let (h, rows) = read_csv(&out.join("diagnostics/correlation.csv"));
    assert_eq!(h, ["lead", "channel", "t", "re", "im", "abs"]);
    assert_eq!(rows.len(), 4 * 201);
    let (h, rows) = read_csv(&out.join("diagnostics/lamb_shift.csv"));
    assert_eq!(rows.len(), 2 * 2 * 3);
    assert!(rows.iter().all(|r| r[column(&h, "status")] == "ok"));
    let (_, rows) = read_csv(&out.join("diagnostics/secular.csv"));
    assert_eq!(rows.len(), 2);

    cfg["leads"]["left"]["lorentz_width"] = serde_json::json!(4.0);
    let path = write(dir.path(), "c.json", &cfg);
    assert_eq!(run(&["diagnostics", "--strict"], &path, &dir.path().join("guard")), 4);
}

#[test]
fn rerunning_from_meta_config_reproduces_results() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(
        serde_json::json!({"type": "scan", "axis": {"param": "T_R", "values": {"from": 1.0, "to": 3.0, "steps": 3}}}),
        serde_json::json!({"n_fock": 5}),
    );
    cfg["system"]["omega"] = serde_json::json!({"over_2pi": 0.2});
    cfg["leads"]["left"]["temperature"] = serde_json::json!({"mK": 10.0});
    let path = write(dir.path(), "c.json", &cfg);
    let first = dir.path().join("first");
    assert_eq!(run(&["run"], &path, &first), 0);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(first.join("meta.json")).unwrap()).unwrap();
    let again = write(dir.path(), "again.json", &meta["config"]);
    let second = dir.path().join("second");
    let status = nems().args(["validate", "--strict", "--config"]).arg(&again).status().unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(run(&["run"], &again, &second), 0);
    assert_eq!(fs::read(first.join("results.csv")).unwrap(), fs::read(second.join("results.csv")).unwrap());
}

#[test]
fn diagnostics_task_matches_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(serde_json::json!({"type": "diagnostics"}), serde_json::json!({}));
    cfg["diagnostics"] = serde_json::json!({"times": [0.0, 0.5, 1.0], "energies": [0.0]});
    let path = write(dir.path(), "c.json", &cfg);
    assert_eq!(run(&["run"], &path, &dir.path().join("a")), 0);
    assert_eq!(run(&["diagnostics"], &path, &dir.path().join("b")), 0);
    for f in ["correlation.csv", "lamb_shift.csv", "secular.csv"] {
        let a = fs::read(dir.path().join("a/diagnostics").join(f)).unwrap();
        assert_eq!(a, fs::read(dir.path().join("b/diagnostics").join(f)).unwrap(), "{f}");
    }
    assert!(!dir.path().join("a/results.csv").exists());
}

#[test]
fn regime_warnings_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(serde_json::json!({"type": "point"}), serde_json::json!({"n_fock": 4}));
    cfg["leads"]["right"]["gamma_rate"] = serde_json::json!(0.5);
    let path = write(dir.path(), "c.json", &cfg);
    let out = dir.path().join("out");
    assert_eq!(run(&["run"], &path, &out), 0);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    let w: Vec<&str> = meta["warnings"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(w.iter().any(|w| w.starts_with("right lead: Gamma/T")), "{w:?}");
    assert!(!w.iter().any(|w| w.starts_with("left lead")), "{w:?}");
}

#[test]
fn point_conserves_current() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "c.json", &config(serde_json::json!({"type": "point"}), serde_json::json!({"n_fock": 8})));
    let out = dir.path().join("out");
    assert_eq!(run(&["run"], &path, &out), 0);
    let (header, rows) = read_csv(&out.join("results.csv"));
    let get = |name: &str| rows[0][column(&header, name)].parse::<f64>().unwrap();
    assert!(get("conservation_residual") <= 1e-9 * get("I_R").abs());
}

#[test]
fn shipped_configs_validate_strictly() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let status = nems().args(["validate", "--strict", "--config"]).arg(&path).status().unwrap();
        assert_eq!(status.code(), Some(0), "{}", path.display());
        n += 1;
    }
    assert!(n >= 4);
}
