mod common;

use std::path::PathBuf;
use std::process::{Command, Output};

use common::{parrott, triple, zero_tuple};
use dilation_forge::io::{parse_model, parse_tuple, tuple_to_string, ReportBody, ReportFile};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dilation-forge"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dilation-forge-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write(name: &str, text: &str) -> String {
    let p = scratch(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn classify_exit_codes() {
    let zero = write("zero.json", &tuple_to_string(&zero_tuple(3, 2)));
    assert_eq!(code(&run(&["classify", "--input", &zero])), 0);

    let parrott = write("parrott.json", &tuple_to_string(&parrott()));
    let o = run(&["classify", "--input", &parrott]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("not PSD"), "{}", stdout(&o));

    let o = run(&["classify", "--input", &parrott, "--format", "json"]);
    let report = ReportFile::from_json(&stdout(&o)).unwrap();
    let ReportBody::Classification(r) = &report.body else { panic!("wrong report kind") };
    assert!(!r.in_t1n);
    assert_eq!(ReportFile::from_json(&report.to_json()).unwrap(), report);
}

#[test]
fn malformed_input_exits_one() {
    let bad = write("bad.json", "{\"n\": 1, \"dimH\": 1, \"matrices\": [[[[0.5, ]]]]}");
    let o = run(&["classify", "--input", &bad]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
    let shape = write("shape.json", "{\"n\": 1, \"dimH\": 1, \"matrices\": [[[[[0.5, \"x\"]]]]]}");
    let o = run(&["classify", "--input", &shape]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("$.matrices[0][0][0][0][1]"), "{}", stderr(&o));
    assert_eq!(code(&run(&["classify", "--input", "/nonexistent/tuple.json"])), 1);
    assert_eq!(code(&run(&["classify"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn dilate_and_verify_a_model_file() {
    let input = write("triple.json", &tuple_to_string(&triple()));
    let model_path = scratch("triple_model.json").to_string_lossy().into_owned();
    let o = run(&["dilate", "--input", &input, "--degree", "4", "--output", &model_path, "--format", "json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["cells"], 15);
    let text = std::fs::read_to_string(&model_path).unwrap();
    assert_eq!(parse_model(&text).unwrap().model.fock.num_cells(), 15);

    let o = run(&["verify", "--input", &model_path]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("stored_pi"));

    // flip the sign of the largest entry of U
    let mut v: Value = serde_json::from_str(&text).unwrap();
    let entries = v["coupling"]["u"]["entries"].as_array_mut().unwrap();
    let mut best = (0, 0, 0.0f64);
    for (i, row) in entries.iter().enumerate() {
        for (j, z) in row.as_array().unwrap().iter().enumerate() {
            let (re, im) = (z[0].as_f64().unwrap(), z[1].as_f64().unwrap());
            if re.hypot(im) > best.2 {
                best = (i, j, re.hypot(im));
            }
        }
    }
    let z = &mut entries[best.0][best.1];
    z[0] = Value::from(-z[0].as_f64().unwrap());
    z[1] = Value::from(-z[1].as_f64().unwrap());
    let mutated = write("mutated.json", &serde_json::to_string(&v).unwrap());
    let o = run(&["verify", "--input", &mutated]);
    assert_eq!(code(&o), 5);
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn verify_accepts_a_tuple() {
    let input = write("zero_for_verify.json", &tuple_to_string(&zero_tuple(2, 2)));
    let o = run(&["verify", "--input", &input, "--degree", "2", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let report = ReportFile::from_json(&stdout(&o)).unwrap();
    assert!(matches!(report.body, ReportBody::Verification(ref r) if r.passed() && r.degree == 2));
}

#[test]
fn dilate_refusals() {
    let parrott = write("parrott_dilate.json", &tuple_to_string(&parrott()));
    let o = run(&["dilate", "--input", &parrott]);
    assert_eq!(code(&o), 2);
    let d2 = write("d2.json", "{\"n\": 1, \"dimH\": 1, \"d\": 2, \"matrices\": [[[[[0.1, 0]]], [[[0.2, 0]]]]]}");
    let o = run(&["dilate", "--input", &d2]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("multiplicity"), "{}", stderr(&o));
}

#[test]
fn random_is_deterministic_and_in_class() {
    let a = run(&["random", "--n", "3", "--dimH", "3", "--seed", "42", "--style", "jointly-nilpotent"]);
    let b = run(&["random", "--n", "3", "--dimH", "3", "--seed", "42", "--style", "jointly-nilpotent"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let spec = parse_tuple(&stdout(&a)).unwrap();
    assert_eq!(tuple_to_string(&spec), stdout(&a));
    let path = write("random.json", &stdout(&a));
    assert_eq!(code(&run(&["classify", "--input", &path])), 0);
}

#[test]
fn demo_lists_every_identity() {
    let o = run(&["demo", "--degree", "3"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("N = 3"));
    for name in ["defect_identity_first", "u_unitary", "transfer_last_lemma_top", "intertwine_merged", "commute_2_3", "factor_last_first", "moments", "pi_isometry", "pi_tail_match"] {
        assert!(out.contains(name), "missing {name}");
    }
}
