use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use atlplus::checker::{random_instance, shrink, Limits};
use atlplus::strategy::{verify_witness, Transducer, TransducerDocument};
use atlplus::{parse_formula, Cgm, Labeling, StateFormula};

const PSI: &str = "<<a1>> ((!(X p3) & <<a2>> X p1) | (F p1 & (!p1) U p2))";
const M3_GOAL: &str = "<<a2>>(G p1 | F p2)";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atlplus"))
        .args(args)
        .env_remove("ATLPLUS_JOBS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn verdict_at(o: &Output, state: &str) -> bool {
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    doc["states"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["state"] == state)
        .and_then(|s| s["value"].as_bool())
        .unwrap()
}

#[test]
fn running_example_holds() {
    let o = run(&[
        "check",
        "--model",
        "mstar",
        "--formula",
        PSI,
        "--state",
        "q0",
        "--engine",
        "buchi",
        "--format",
        "structured",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(verdict_at(&o, "q0"));
}

#[test]
fn m3_goal_holds_with_the_stable_timer() {
    let o = run(&[
        "check",
        "--model",
        "m3",
        "--formula",
        M3_GOAL,
        "--state",
        "q0",
        "--engine",
        "bounded",
        "--timer",
        "6",
        "--format",
        "structured",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(verdict_at(&o, "q0"));

    let o = run(&[
        "check",
        "--model",
        "m3",
        "--formula",
        M3_GOAL,
        "--state",
        "q1",
        "--format",
        "structured",
    ]);
    assert!(verdict_at(&o, "q1"));
}

#[test]
fn exit_codes_separate_input_errors_from_false_verdicts() {
    let code = |args: &[&str]| run(args).status.code();
    assert_eq!(
        code(&["check", "--model", "m3", "--formula", "p1"]),
        Some(0)
    );
    assert_eq!(
        code(&[
            "check",
            "--model",
            "m3",
            "--formula",
            "p1",
            "--state",
            "q1",
            "--fail-on-false"
        ]),
        Some(3)
    );
    assert_eq!(
        code(&[
            "check",
            "--model",
            "m3",
            "--formula",
            "p1",
            "--state",
            "q0",
            "--fail-on-false"
        ]),
        Some(0)
    );
    assert_eq!(
        code(&["check", "--model", "no-such-model", "--formula", "p1"]),
        Some(2)
    );
    assert_eq!(
        code(&["check", "--model", "m3", "--formula", "nope"]),
        Some(2)
    );
    assert_eq!(
        code(&["check", "--model", "m3", "--formula", "p1", "--state", "q9"]),
        Some(2)
    );
    assert_eq!(
        code(&["check", "--model", "m3", "--formula", "p1", "--timer", "0"]),
        Some(2)
    );
    assert_eq!(
        code(&[
            "check",
            "--model",
            "m3",
            "--formula",
            "p1",
            "--engine",
            "magic"
        ]),
        Some(2)
    );
    assert_eq!(
        code(&["witness", "--model", "m3", "--formula", "<<a2>> G p2"]),
        Some(3)
    );
    assert_eq!(
        code(&["witness", "--model", "m3", "--formula", "p1"]),
        Some(2)
    );
}

#[test]
fn parse_errors_point_at_the_offending_input() {
    let o = run(&["check", "--model", "m3", "--formula", "<<a2>> (G p1 | F"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("offset"), "{err}");
    assert!(err.contains('^'), "{err}");

    let o = run(&["check", "--model", "m3", "--formula", "<<zed>> F p1"]);
    assert!(String::from_utf8(o.stderr).unwrap().contains("zed"));
}

#[test]
fn structured_output_is_byte_stable() {
    let args = [
        "check",
        "--model",
        "mstar",
        "--formula",
        PSI,
        "--format",
        "structured",
    ];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let args = [
        "report",
        "--model",
        "mstar",
        "--formula",
        PSI,
        "--format",
        "structured",
    ];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn report_shows_width_timer_and_bound() {
    let o = run(&[
        "report",
        "--model",
        "m3",
        "--formula",
        M3_GOAL,
        "--format",
        "structured",
    ]);
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["width"], 2);
    assert_eq!(doc["memory_bound"], 5);
    assert_eq!(doc["subformulas"][0]["stable_timer"], 6);

    let o = run(&[
        "report",
        "--model",
        "mstar",
        "--formula",
        PSI,
        "--format",
        "structured",
    ]);
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["width"], 4);
    let last = doc["subformulas"]
        .as_array()
        .unwrap()
        .last()
        .unwrap()
        .clone();
    assert_eq!(last["atoms"], 4);
    assert_eq!(last["stable_timer"], 20);

    let o = run(&[
        "report",
        "--model",
        "m3",
        "--formula",
        "p1",
        "--format",
        "structured",
    ]);
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["width"], 0);
    assert!(doc["subformulas"].as_array().unwrap().is_empty());
}

fn verify_file(model: &str, formula: &str, state: &str, path: &Path) -> bool {
    let m = Cgm::fixture(model).unwrap();
    let doc: TransducerDocument = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let t = Transducer::from_document(&m, &doc).unwrap();
    let StateFormula::Coalition(c, body) = parse_formula(formula).unwrap().expand() else {
        panic!()
    };
    let agents = m.resolve_coalition(&c).unwrap();
    verify_witness(
        &m,
        &agents,
        &body,
        &Labeling::new(),
        &t,
        m.state_id(state).unwrap(),
    )
    .unwrap()
}

#[test]
fn witness_files_verify_independently() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("m3", M3_GOAL, "q0", 5),
        ("hub", "<<a>> (F p & F q)", "h", 0),
    ];
    for (model, formula, state, bound) in cases {
        let path = dir.path().join(format!("{model}.json"));
        let o = run(&[
            "witness",
            "--model",
            model,
            "--formula",
            formula,
            "--state",
            state,
            "--output",
            path.to_str().unwrap(),
        ]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        let out = stdout(&o);
        assert!(out.contains("memory:"), "{out}");
        if bound > 0 {
            assert!(out.contains(&format!("= {bound}")), "{out}");
        }
        assert!(verify_file(model, formula, state, &path));
    }
}

#[test]
fn fuzz_is_deterministic_across_job_counts() {
    let a = run(&[
        "fuzz",
        "--seed",
        "7",
        "--count",
        "12",
        "--jobs",
        "1",
        "--format",
        "structured",
    ]);
    let b = run(&[
        "fuzz",
        "--seed",
        "7",
        "--count",
        "12",
        "--jobs",
        "3",
        "--format",
        "structured",
    ]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let doc: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(doc["disagreements"], 0);

    let one = run(&["fuzz", "--count", "1", "--format", "structured"]);
    assert_eq!(
        one.stdout,
        run(&["fuzz", "--count", "1", "--format", "structured"]).stdout
    );
}

#[test]
fn reproducer_files_run_through_check() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..5 {
        let (m, phi) = random_instance(seed, Limits::default());
        let (model, formula) = shrink(m.to_document(), phi.clone());
        let model_path = dir.path().join(format!("repro-{seed}.model.json"));
        let formula_path = dir.path().join(format!("repro-{seed}.formula"));
        fs::write(
            &model_path,
            serde_json::to_string_pretty(&model).unwrap() + "\n",
        )
        .unwrap();
        fs::write(&formula_path, format!("{formula}\n")).unwrap();
        let o = run(&[
            "check",
            "--model",
            model_path.to_str().unwrap(),
            "--formula-file",
            formula_path.to_str().unwrap(),
        ]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}
