use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

use qcuntz::rep::{build_generators, GeneratorExport, RepSpec, SparseOperator, Truncation, C64};

fn qcuntz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcuntz")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited")
}

const GRID_VERIFY: &[&str] =
    &["verify", "--family", "unbounded", "--n", "2", "--j", "1", "--q", "0.5", "--x", "2.8", "--L", "6", "--smin", "-8", "--smax", "8"];

#[test]
fn normalize_example() {
    let out = qcuntz(&["normalize", "--q", "0.5", "--x0", "3", "--y", "2.2"]);
    assert_eq!(code(&out), 0);
    let v = json_of(&out);
    assert!((v["x"].as_f64().unwrap() - 2.8).abs() < 1e-12);
    assert_eq!(v["shift"], 2);
    assert_eq!(v["display"], "x=2.8 (shift +2 from 2.2)");
    assert_eq!(v["schema_version"], "1");
}

#[test]
fn normalize_out_of_range_is_invalid_input() {
    let out = qcuntz(&["normalize", "--q", "0.5", "--y", "1.5"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("1/(1-q)"));
}

#[test]
fn classify_examples() {
    let out = qcuntz(&["classify", "--spec1", "unbounded:1:2.2", "--spec2", "unbounded:1:2.8", "--q", "0.5"]);
    assert_eq!(code(&out), 0);
    let v = json_of(&out);
    assert_eq!(v["equivalent"], true);
    assert_eq!(v["certificate"]["kind"], "matched_x");
    assert_eq!(v["config"]["x0"], 4.0);

    let v = json_of(&qcuntz(&["classify", "--spec1", "unbounded:1:2.8", "--spec2", "unbounded:2:2.8", "--q", "0.5"]));
    assert_eq!(v["equivalent"], false);
    let v = json_of(&qcuntz(&[
        "classify", "--spec1", "unbounded:1:2.8", "--spec2", "unbounded:1:2.9", "--q", "0.5", "--x0", "3",
    ]));
    assert_eq!(v["equivalent"], false);

    assert_eq!(code(&qcuntz(&["classify", "--spec1", "unbounded:1", "--spec2", "fockn", "--q", "0.5"])), 2);
}

#[test]
fn wick_example() {
    let out = qcuntz(&["wick", "--n", "2", "--expr", "a1* a1* a1 a1"]);
    assert_eq!(code(&out), 0);
    let v = json_of(&out);
    assert_eq!(v["normal_form"], "(1 + q) + (q + 2 q^2 + q^3) a1 a1* + q^4 a1 a1 a1* a1*");
    assert_eq!(v["monomials"].as_array().unwrap().len(), 3);
    assert_eq!(code(&qcuntz(&["wick", "--n", "2", "--expr", "a3 a1"])), 2);
}

#[test]
fn confluence_runs_clean() {
    let out = qcuntz(&["confluence", "--n", "3", "--trials", "50"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json_of(&out)["mismatches"], 0);
}

#[test]
fn build_examples() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let out = qcuntz(&[
        "build", "--family", "unbounded", "--n", "2", "--j", "1", "--q", "0.5", "--x", "2.8", "--L", "4", "--smin", "-4",
        "--smax", "4", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["schema_version"], "1");
    assert_eq!(v["generators"].as_array().unwrap().len(), 2);
    assert_eq!(v["basis"]["labels"].as_array().unwrap().len(), v["dim"].as_u64().unwrap() as usize);

    let v = json_of(&qcuntz(&["build", "--family", "fock1", "--q", "0", "--smax", "8"]));
    let entries = v["generators"][0]["operator"]["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 8);
    for e in entries {
        assert_eq!(e[0].as_u64().unwrap(), e[1].as_u64().unwrap() + 1);
        assert_eq!(e[2], 1.0);
        assert_eq!(e[3], 0.0);
    }

    let bad = qcuntz(&["build", "--family", "unbounded", "--q", "0", "--n", "2", "--j", "1", "--x", "3"]);
    assert_eq!(code(&bad), 2);
    assert_eq!(code(&qcuntz(&["build", "--family", "fock1", "--q", "0.5", "--x", "3"])), 2);
    assert_eq!(code(&qcuntz(&["build", "--family", "bounded", "--q", "0.5", "--n", "2", "--phi", "0.2"])), 2);
    assert_eq!(code(&qcuntz(&["build", "--family", "linez", "--q", "1.5", "--x", "3"])), 2);
}

#[test]
fn verify_grid_point_passes() {
    let out = qcuntz(GRID_VERIFY);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let v = json_of(&out);
    assert_eq!(v["pass"], true);
    let checks = v["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["status"] == "pass"));
    let names: Vec<&str> = checks.iter().map(|c| c["check"].as_str().unwrap()).collect();
    for want in ["relations", "shift_identity[k=1]", "structure_bc", "eigenvalue_laws", "spectrum[k=2]", "series"] {
        assert!(names.contains(&want), "missing {want}");
    }
}

#[test]
fn verify_negative_controls() {
    let mut args = GRID_VERIFY.to_vec();
    args.extend(["--corrupt", "1e-3"]);
    let out = qcuntz(&args);
    assert_eq!(code(&out), 1);
    assert_eq!(json_of(&out)["status"], "fail");

    let out = qcuntz(&[
        "verify", "--family", "unbounded", "--n", "2", "--j", "1", "--q", "0.5", "--x", "2.8", "--L", "0", "--smin", "0",
        "--smax", "0",
    ]);
    assert_eq!(code(&out), 1);
    assert_eq!(json_of(&out)["status"], "inconclusive");
}

#[test]
fn reports_are_deterministic_and_echo_config() {
    let a = qcuntz(GRID_VERIFY);
    let b = qcuntz(GRID_VERIFY);
    assert_eq!(a.stdout, b.stdout);
    let v = json_of(&a);
    let config = &v["config"];
    for key in ["tol", "seed", "intervals", "terms", "format"] {
        assert!(!config[key].is_null(), "config lacks {key}");
    }
    assert_eq!(config["truncation"], json!({ "max_len": 6, "s_min": -8, "s_max": 8 }));
    assert!(v.get("wall_time_ms").is_none());

    let mut timed = GRID_VERIFY.to_vec();
    timed.push("--timing");
    assert!(json_of(&qcuntz(&timed))["wall_time_ms"].is_number());
}

#[test]
fn verify_csv_has_one_row_per_check() {
    let mut args = GRID_VERIFY.to_vec();
    args.extend(["--format", "csv"]);
    let out = qcuntz(&args);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("check,status,max_residual,tolerance,vectors_checked"));
    let json_checks = json_of(&qcuntz(GRID_VERIFY))["checks"].as_array().unwrap().len();
    assert_eq!(lines.count(), json_checks);
}

fn write_matrix_file(path: &Path, q: f64, ops: &[(SparseOperator, Vec<usize>)]) {
    let generators: Vec<GeneratorExport> =
        ops.iter().map(|(op, interior)| GeneratorExport { operator: op.to_coo(), interior: interior.clone() }).collect();
    let doc = json!({ "schema_version": "1", "q": q, "generators": generators });
    std::fs::write(path, serde_json::to_string(&doc).unwrap()).unwrap();
}

#[test]
fn wold_on_built_file_detects_family() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let built = qcuntz(&[
        "build", "--family", "unbounded", "--n", "2", "--j", "2", "--q", "0.5", "--x", "2.8", "--L", "4", "--smin", "-6",
        "--smax", "6", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(code(&built), 0);
    let out = qcuntz(&["wold", "--input", path.to_str().unwrap(), "--x0", "3"]);
    assert_eq!(code(&out), 0);
    let v = json_of(&out);
    assert_eq!(v["detected"]["family"], "unbounded");
    assert_eq!(v["detected"]["j"], 2);
    assert!((v["detected"]["x"].as_f64().unwrap() - 2.8).abs() < 1e-10);
}

#[test]
fn wold_planted_and_rejected_inputs() {
    let q = 0.5;
    let dir = tempfile::tempdir().unwrap();

    let fock = build_generators(&RepSpec::FockQ1 { q }, &Truncation::new(0, 0, 8)).unwrap();
    let line = build_generators(&RepSpec::LineZ { q, x: 2.8 }, &Truncation::new(0, -5, 5)).unwrap();
    let s = C64::new(2.0f64.sqrt(), 0.0);
    let unitary = SparseOperator::from_triplets(1, 1, [(0, 0, s)]).unwrap();
    let a = SparseOperator::direct_sum(&[fock.generator(1), &unitary, line.generator(1)]);
    let mut interior = fock.interior(1);
    interior.push(fock.dim());
    interior.extend(line.interior(1).into_iter().map(|i| i + fock.dim() + 1));
    let planted = dir.path().join("planted.json");
    write_matrix_file(&planted, q, &[(a, interior)]);
    let out = qcuntz(&["wold", "--input", planted.to_str().unwrap(), "--x0", "3"]);
    assert_eq!(code(&out), 0);
    let w = &json_of(&out)["decompositions"][0]["decomposition"];
    assert_eq!(w["fock_blocks"].as_array().unwrap().len(), 1);
    assert_eq!(w["unitary_block"]["ordinals"], json!([fock.dim()]));
    assert_eq!(w["unbounded_blocks"].as_array().unwrap().len(), 1);
    assert!((w["unbounded_blocks"][0]["x"].as_f64().unwrap() - 2.8).abs() < 1e-10);

    let cycle = SparseOperator::from_triplets(2, 2, [(1, 0, s), (0, 1, s)]).unwrap();
    let unit_path = dir.path().join("unitary.json");
    write_matrix_file(&unit_path, q, &[(cycle, vec![0, 1])]);
    let v = json_of(&qcuntz(&["wold", "--input", unit_path.to_str().unwrap()]));
    let w = &v["decompositions"][0]["decomposition"];
    assert_eq!(w["unitary_block"]["ordinals"], json!([0, 1]));
    assert!(w["fock_blocks"].as_array().unwrap().is_empty());

    let trips: Vec<_> = (0..25).map(|i| (i / 5, i % 5, C64::new((i as f64 * 1.7).sin(), (i as f64 * 0.3).cos()))).collect();
    let random = SparseOperator::from_triplets(5, 5, trips).unwrap();
    let random_path = dir.path().join("random.json");
    write_matrix_file(&random_path, q, &[(random, (0..5).collect())]);
    let out = qcuntz(&["wold", "--input", random_path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert_eq!(json_of(&out)["decompositions"][0]["reason"]["kind"], "reject_input");

    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{\"schema_version\": \"2\"}").unwrap();
    assert_eq!(code(&qcuntz(&["wold", "--input", garbage.to_str().unwrap()])), 2);
    assert_eq!(code(&qcuntz(&["wold", "--input", dir.path().join("missing.json").to_str().unwrap()])), 2);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&qcuntz(&["verify", "--family", "fock1"])), 2);
    assert_eq!(code(&qcuntz(&["nonsense"])), 2);
    assert_eq!(code(&qcuntz(&["verify", "--family", "wat", "--q", "0.5"])), 2);
}
