use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str, body: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn negdep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_negdep")).args(args).env_remove("NEGDEP_NUM_MODE").output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

const ANTI: &str = r#"{"dim":2,"atoms":[{"x":["0","1"],"p":"1/2"},{"x":["1","0"],"p":"1/2"}],"number_mode":"rational"}"#;
const COMONOTONE: &str = r#"{"dim":2,"atoms":[{"x":[0,0],"p":0.5},{"x":[1,1],"p":0.5}],"number_mode":"float"}"#;
const UNIFORM3: &str = r#"{"identical":{"support":["-1","0","1"],"probs":["1/3","1/3","1/3"]},"n":3}"#;

#[test]
fn check_antithetic_pair_holds_everywhere() {
    let d = fixture("anti.json", ANTI);
    let out = negdep(&["check", d.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let verdicts = r["result"]["report"]["verdicts"].as_object().unwrap();
    assert_eq!(verdicts.len(), 8);
    assert!(verdicts.values().all(|v| v["status"] == "holds"));
    assert_eq!(r["config"]["number_mode"], "rational");
    assert_eq!(r["outcome"], "completed");
}

#[test]
fn check_reports_violation_with_exit_two() {
    let d = fixture("comonotone.json", COMONOTONE);
    let out = negdep(&["check", d.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let r = report(&out);
    assert_eq!(r["result"]["report"]["verdicts"]["NCD"]["status"], "fails");
    assert_eq!(r["outcome"], "negative");
}

#[test]
fn construct_rejects_variance_condition() {
    let out = negdep(&["construct-gaussian", "--variances", "4,4,9"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("precondition failed"));
}

#[test]
fn construct_exact_trace() {
    let out = negdep(&["construct-gaussian", "--variances", "1,1,1", "--mode", "rational"]);
    assert_eq!(out.status.code(), Some(0));
    let cov = &report(&out)["result"]["cov"];
    assert_eq!(cov[0][1], "-1/2");
    assert_eq!(cov[2][2], "1");
}

#[test]
fn jm_cov3_flags_non_psd() {
    assert_eq!(negdep(&["jm-cov3", "--variances", "1,1,1"]).status.code(), Some(0));
    // sd condition fails: 2·3 > 1 + 1
    assert_eq!(negdep(&["jm-cov3", "--variances", "1,1,9"]).status.code(), Some(2));
}

#[test]
fn ot_solve_uniform_three() {
    let m = fixture("uniform3.json", UNIFORM3);
    let out = negdep(&["ot-solve", "--marginals", m.to_str().unwrap(), "--uncertainty", "all", "--mode", "rational"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["value"], "2/3");
    let corr = &r["result"]["corr"];
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 1.0 } else { -0.5 };
            assert!((corr[i][j].as_f64().unwrap() - want).abs() <= 1e-6);
        }
    }
}

#[test]
fn env_mode_overrides_default() {
    let m = fixture("uniform3_env.json", UNIFORM3);
    let out = Command::new(env!("CARGO_BIN_EXE_negdep"))
        .args(["jm-feasible", m.to_str().unwrap()])
        .env("NEGDEP_NUM_MODE", "rational")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["config"]["number_mode"], "rational");
    assert_eq!(r["result"]["jointly_mixable"], true);
}

#[test]
fn reports_are_reproducible_apart_from_timestamp() {
    let d = fixture("anti_repro.json", ANTI);
    let strip = |out: Output| {
        let mut v = report(&out);
        v.as_object_mut().unwrap().remove("timestamp");
        serde_json::to_string(&v).unwrap()
    };
    let a = strip(negdep(&["theorem1", d.to_str().unwrap()]));
    let b = strip(negdep(&["theorem1", d.to_str().unwrap()]));
    assert_eq!(a, b);
}

#[test]
fn sample_needs_a_seed_and_is_deterministic() {
    let model = fixture("model.json", r#"{"mean":[0,0,0],"cov":[[1,-0.5,-0.5],[-0.5,1,-0.5],[-0.5,-0.5,1]]}"#);
    let m = model.to_str().unwrap();
    assert_eq!(negdep(&["sample", m, "--count", "5"]).status.code(), Some(1));
    let a = report(&negdep(&["sample", m, "--count", "5", "--seed", "3"]));
    let b = report(&negdep(&["sample", m, "--count", "5", "--seed", "3"]));
    assert_eq!(a["result"]["samples"], b["result"]["samples"]);
    assert_eq!(a["config"]["seed"], 3);
    for x in a["result"]["samples"].as_array().unwrap() {
        let s: f64 = x.as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
        assert!(s.abs() <= 1e-9);
    }
}

#[test]
fn decompose_symmetrize_and_orbits() {
    let d = fixture("anti_decomp.json", ANTI);
    let p = d.to_str().unwrap();
    let dec = report(&negdep(&["decompose", p]));
    assert!(dec["result"]["coefficients"].as_array().is_some_and(|c| !c.is_empty()));
    let sym = report(&negdep(&["symmetrize", p]));
    assert_eq!(sym["result"]["atoms"].as_array().unwrap().len(), 2);
    let orb = report(&negdep(&["orbit-mixture", p]));
    assert_eq!(orb["result"]["weights"], serde_json::json!(["1"]));
}

#[test]
fn decompose_rejects_non_joint_mix() {
    let d = fixture("comonotone_decomp.json", COMONOTONE);
    assert_eq!(negdep(&["decompose", d.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn verify_thm_opt_on_uniform_marginal() {
    let m = fixture("marginal.json", r#"{"support":["-1","0","1"],"probs":["1/3","1/3","1/3"]}"#);
    let out = negdep(&["verify-thm-opt", m.to_str().unwrap(), "--n", "4", "--k", "2", "--mode", "rational"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["all_passed"], true);
}

#[test]
fn demo_t_nod_writes_output_file() {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("demo.json");
    let out = negdep(&["demo-t-nod", "--nu", "3", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(r["result"]["student_t"]["max_violation"].as_f64().unwrap() > 1e-4);
    assert!(r["result"]["gaussian_control"]["max_violation"].as_f64().unwrap().abs() <= 1e-6);
}

#[test]
fn usage_errors_are_nonzero() {
    let out = negdep(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    assert_eq!(negdep(&["check"]).status.code(), Some(1));
}
