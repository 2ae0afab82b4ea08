use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pstcube(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pstcube")).args(args).output().expect("binary runs")
}

fn pstcube_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pstcube")).args(args).env(key, value).output().expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

fn column(rows: &[Vec<String>], k: usize) -> Vec<f64> {
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn plan_finds_subcube() {
    let doc = json_stdout(&pstcube(&["plan", "--n", "4", "--x", "0000", "--y", "0101"]));
    assert_eq!(doc["summary"]["d"], 2);
    assert_eq!(doc["summary"]["vertices"], serde_json::json!(["0000", "0001", "0100", "0101"]));
    assert_eq!(doc["summary"]["antipodal"], true);
    assert_eq!(doc["config"]["command"], "plan");

    let doc = json_stdout(&pstcube(&["plan", "--n", "3", "--x", "000", "--y", "111"]));
    assert_eq!(doc["summary"]["d"], 3);
    assert_eq!(doc["summary"]["vertices"].as_array().unwrap().len(), 8);
}

#[test]
fn plan_accepts_integer_labels_and_echoes_bit_strings() {
    let doc = json_stdout(&pstcube(&["plan", "--n", "4", "--x", "0", "--y", "5"]));
    assert_eq!(doc["config"]["x"], "0000");
    assert_eq!(doc["config"]["y"], "0101");
    assert_eq!(doc["summary"]["d"], 2);
}

#[test]
fn plan_rejects_degenerate_pair() {
    let out = pstcube(&["plan", "--n", "4", "--x", "0000", "--y", "0000"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn bad_arguments_are_validation_errors() {
    assert_eq!(pstcube(&["plan", "--n", "4", "--x", "0000"]).status.code(), Some(2));
    assert_eq!(pstcube(&["plan", "--n", "4", "--x", "0000", "--y", "2x"]).status.code(), Some(2));
    assert_eq!(pstcube(&["evolve", "--n", "11", "--x", "0", "--y", "1"]).status.code(), Some(2));
}

#[test]
fn evolve_reaches_unit_fidelity_at_half_pi() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let status = pstcube(&["evolve", "--n", "4", "--x", "0000", "--y", "0101", "--out", path_str(&out)]);
    assert!(status.status.success());
    let rows = csv_rows(&fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 201);
    let (ts, fs_) = (column(&rows, 0), column(&rows, 3));
    let peak = (0..ts.len()).max_by(|&a, &b| fs_[a].total_cmp(&fs_[b])).unwrap();
    assert!((ts[peak] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    assert!((fs_[peak] - 1.0).abs() < 1e-9);

    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("curve.csv.meta.json")).unwrap()).unwrap();
    assert!((meta["summary"]["fidelity_at_t0"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(meta["summary"]["block_structure"], true);
    assert_eq!(meta["config"]["t_steps"], 200);
    assert_eq!(meta["config"]["model"], "adjacency");
}

#[test]
fn evolve_single_point_grid() {
    let out = pstcube(&["evolve", "--n", "3", "--x", "000", "--y", "011", "--t-steps", "0"]);
    assert!(out.status.success());
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 1);
    assert_eq!(column(&rows, 0), vec![0.0]);
    assert!(column(&rows, 3)[0] < 1e-12);
}

#[test]
fn laplacian_curve_matches_adjacency() {
    let run = |model: &str| {
        let out = pstcube(&["evolve", "--n", "4", "--x", "0010", "--y", "1011", "--model", model, "--t-steps", "64"]);
        assert!(out.status.success());
        column(&csv_rows(&String::from_utf8(out.stdout).unwrap()), 3)
    };
    let (a, l) = (run("adjacency"), run("laplacian"));
    assert_eq!(a.len(), l.len());
    for (x, y) in a.iter().zip(&l) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn coupling_curve_crosses_at_cutoff() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("j.csv");
    assert!(pstcube(&["coupling-curve", "--out", path_str(&out)]).status.success());
    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("j.csv.meta.json")).unwrap()).unwrap();
    let crossings = meta["summary"]["crossings"].as_array().unwrap();
    assert_eq!(crossings.len(), 1);
    assert!((crossings[0].as_f64().unwrap() + 1.426).abs() < 1e-3);
    assert!((meta["summary"]["cutoff"]["omega_off"].as_f64().unwrap() - 5.426).abs() < 1e-3);

    let again = dir.path().join("j2.csv");
    assert!(pstcube(&["coupling-curve", "--out", path_str(&again)]).status.success());
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn coupling_curve_without_eta_never_crosses() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("params.json");
    fs::write(
        &params,
        r#"{"c_i": 70, "c_j": 72, "c_c": 200, "c_ic": 0, "c_jc": 4.2, "c_ij": 0.1, "omega_i": 4, "omega_j": 4, "omega_c": 5.426}"#,
    )
    .unwrap();
    let out = pstcube(&["coupling-curve", "--params", path_str(&params), "--format", "json"]);
    let doc = json_stdout(&out);
    assert_eq!(doc["summary"]["crossings"], serde_json::json!([]));
    assert_eq!(doc["summary"]["cutoff"], Value::Null);
    assert_eq!(doc["data"].as_array().unwrap().len(), 201);
}

#[test]
fn coupling_curve_input_errors() {
    assert_eq!(pstcube(&["coupling-curve", "--params", "/nonexistent/params.json"]).status.code(), Some(4));
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("broken.json");
    fs::write(&params, "{ not json").unwrap();
    assert_eq!(pstcube(&["coupling-curve", "--params", path_str(&params)]).status.code(), Some(2));
    assert_eq!(pstcube(&["coupling-curve", "--delta-min", "-1", "--delta-max", "1"]).status.code(), Some(2));
}

#[test]
fn schedule_edge_counts() {
    let doc = json_stdout(&pstcube(&["schedule", "--n", "4", "--x", "0000", "--y", "0101", "--omega-on", "5.0"]));
    assert_eq!(doc["summary"]["on"], 4);
    assert_eq!(doc["summary"]["off"], 28);
    let t0 = doc["summary"]["t0_ns"].as_f64().unwrap();
    let j = doc["summary"]["j_on"].as_f64().unwrap();
    assert!((t0 - std::f64::consts::FRAC_PI_2 / j.abs()).abs() < 1e-9);
    assert_eq!(doc["data"]["edges"].as_array().unwrap().len(), 32);

    let doc = json_stdout(&pstcube(&["schedule", "--n", "3", "--x", "000", "--y", "111", "--omega-on", "5.0"]));
    assert_eq!(doc["summary"]["on"], 12);
    assert_eq!(doc["summary"]["off"], 0);
}

#[test]
fn schedule_rejects_non_dispersive_coupler() {
    let out = pstcube(&["schedule", "--n", "4", "--x", "0000", "--y", "0101", "--omega-on", "4.3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dispersive"));
}

#[test]
fn robustness_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mc.csv");
    let run = pstcube(&["robustness", "--n", "4", "--x", "0000", "--y", "0101", "--trials", "1000", "--seed", "42", "--out", path_str(&out)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let rows = csv_rows(&fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 1000);
    let (fid, bound) = (column(&rows, 3), column(&rows, 4));
    for (f, b) in fid.iter().zip(&bound) {
        assert!(*f >= b - 1e-12);
        assert!(*b > 0.0 && *b < 1.0);
    }
    assert!(fid.iter().all(|&f| f >= 0.97));

    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("mc.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["summary"]["soundness_violations"], 0);
    assert!(meta["summary"]["bound_spectral"].as_f64().unwrap() >= meta["summary"]["bound_frobenius"].as_f64().unwrap());
    assert!(meta["summary"].get("per_trial").is_none());
    assert_eq!(meta["config"]["t0"], std::f64::consts::FRAC_PI_2);
}

#[test]
fn robustness_without_errors_is_perfect() {
    let doc = json_stdout(&pstcube(&["robustness", "--n", "4", "--x", "0000", "--y", "0101", "--delta-rel", "0", "--trials", "50", "--format", "json"]));
    for r in doc["data"].as_array().unwrap() {
        assert!((r["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    }
    assert_eq!(doc["summary"]["bound_spectral"], 1.0);
}

#[test]
fn robustness_is_reproducible_and_thread_independent() {
    let args = ["robustness", "--n", "4", "--x", "0000", "--y", "0110", "--trials", "300", "--seed", "9", "--leakage", "0.001"];
    let a = pstcube(&args);
    let b = pstcube_env(&args, "PSTCUBE_THREADS", "1");
    let c = pstcube_env(&args, "PSTCUBE_THREADS", "3");
    assert!(a.status.success() && b.status.success() && c.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn rerun_from_metadata_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    for (name, args) in [
        ("mc.json", vec!["robustness", "--n", "3", "--x", "1", "--y", "6", "--trials", "100", "--format", "json"]),
        ("curve.csv", vec!["evolve", "--n", "3", "--x", "1", "--y", "6", "--t-max", "2.5", "--t-steps", "40"]),
        ("sched.json", vec!["schedule", "--n", "3", "--x", "0", "--y", "3", "--omega-on", "5.1"]),
    ] {
        let first = dir.path().join(name);
        let mut full = args.clone();
        full.extend(["--out", path_str(&first)]);
        assert!(pstcube(&full).status.success());

        let meta = if name.ends_with(".csv") { dir.path().join(format!("{name}.meta.json")) } else { first.clone() };
        let second = dir.path().join(format!("again-{name}"));
        let rerun = pstcube(&["rerun", path_str(&meta), "--out", path_str(&second)]);
        assert!(rerun.status.success(), "{}", String::from_utf8_lossy(&rerun.stderr));
        assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap(), "{name}");
    }
}

#[test]
fn spin_check_passes_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("h.txt");
    let doc = json_stdout(&pstcube(&["spin-check", "--dump", path_str(&dump)]));
    assert_eq!(doc["summary"]["failed"], serde_json::json!([]));
    assert_eq!(doc["summary"]["sw_scaling"]["points"].as_array().unwrap().len(), 3);

    let text = fs::read_to_string(&dump).unwrap();
    assert!(text.starts_with("# dim 16 qubits 4 nnz 32"));
    let entries: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(entries.len(), 32);
    for line in entries {
        let f: Vec<&str> = line.split(' ').collect();
        assert_eq!(f.len(), 4);
        let (r, c): (usize, usize) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        assert_eq!((r ^ c).count_ones(), 2);
        assert_eq!(f[2].parse::<f64>().unwrap(), 1.0);
        assert_eq!(f[3].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn unwritable_output_is_an_io_error() {
    let out = pstcube(&["plan", "--n", "2", "--x", "00", "--y", "11", "--out", "/nonexistent/dir/plan.json"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn invalid_thread_count() {
    let out = pstcube_env(&["plan", "--n", "2", "--x", "00", "--y", "11"], "PSTCUBE_THREADS", "many");
    assert_eq!(out.status.code(), Some(2));
}
