use std::path::{Path, PathBuf};
use std::process::Command;

use cxa::config::Params;
use cxa::{parse_config, parse_sweep_values, CliError, ScenarioKind};
use proptest::prelude::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cxa"))
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn config_error(text: &str) -> String {
    match parse_config(text) {
        Err(CliError::Config(m)) => m,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn minimal_config_for_every_kind_uses_defaults() {
    for kind in ScenarioKind::ALL {
        let text = format!(r#"{{"schema_version": 1, "kind": "{}"}}"#, kind.name());
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.kind, kind);
        assert_eq!(cfg.seed, 0);
    }
}

#[test]
fn unknown_keys_are_rejected_at_every_level() {
    let top = config_error(r#"{"schema_version": 1, "kind": "tape", "sed": 3}"#);
    assert!(top.contains("unknown field `sed`"), "{top}");
    let param = config_error(r#"{"schema_version": 1, "kind": "double-slit", "params": {"depth": 1}}"#);
    assert!(param.contains("unknown field `depth`"), "{param}");
    let nested = config_error(r#"{"schema_version": 1, "kind": "double-slit", "params": {"lattice": {"nx": 3}}}"#);
    assert!(nested.contains("unknown field `nx`"), "{nested}");
    let noise = config_error(
        r#"{"schema_version": 1, "kind": "measurement", "params": {"branches": [
            {"label": "a", "amplitude": [1, 0], "noise": {"model": "gaussian", "sigma": 1, "skew": 2}}]}}"#,
    );
    assert!(noise.contains("unknown field `skew`"), "{noise}");
}

#[test]
fn syntax_errors_report_line_and_column() {
    let m = config_error("{\n  \"schema_version\": 1,\n  \"kind\": \"tape\",\n  \"params\": {\"generations\": -1}\n}");
    assert!(m.contains("line 4"), "{m}");
}

#[test]
fn range_errors_name_the_field() {
    let cases = [
        (
            r#"{"schema_version":1,"kind":"propagator-check","params":{"lattice":{"n_x":1}}}"#,
            "params.lattice.n_x",
        ),
        (
            r#"{"schema_version":1,"kind":"propagator-check","params":{"lattice":{"dt":0}}}"#,
            "params.lattice.dt",
        ),
        (
            r#"{"schema_version":1,"kind":"classical-select","params":{"n_seeds":0}}"#,
            "params.n_seeds",
        ),
        (
            r#"{"schema_version":1,"kind":"measurement","params":{"n_trials":0}}"#,
            "params.n_trials",
        ),
        (
            r#"{"schema_version":1,"kind":"measurement","params":{"branches":[{"label":"a","amplitude":[1,0],"noise":{"model":"gaussian","sigma":-1}}]}}"#,
            "params.branches[0].noise.sigma",
        ),
        (
            r#"{"schema_version":1,"kind":"double-slit","params":{"delta":-1}}"#,
            "params.delta",
        ),
        (
            r#"{"schema_version":1,"kind":"double-slit","params":{"window_b":[112]}}"#,
            "params.window_b",
        ),
        (
            r#"{"schema_version":1,"kind":"double-slit","params":{"construction":"split-step"}}"#,
            "params.construction",
        ),
        (
            r#"{"schema_version":1,"kind":"higgs-toy","params":{"duration":0}}"#,
            "params.duration",
        ),
        (
            r#"{"schema_version":1,"kind":"tape","params":{"system":"koch"}}"#,
            "params.system",
        ),
        (
            r#"{"schema_version":1,"kind":"tape","params":{"rules":"A->"}}"#,
            "params.rules",
        ),
        (
            r#"{"schema_version":1,"kind":"tape","params":{"patterns":["Z"]}}"#,
            "params.patterns[0]",
        ),
        (r#"{"schema_version":2,"kind":"tape"}"#, "schema_version"),
    ];
    for (text, field) in cases {
        let m = config_error(text);
        assert!(m.contains(field), "{text}: {m}");
    }
}

#[test]
fn config_hash_tracks_effective_content() {
    let a = parse_config(r#"{"schema_version":1,"kind":"tape","seed":1}"#).unwrap();
    let b = parse_config(r#"{ "kind":"tape", "seed":1, "schema_version":1, "params": {"generations": 20} }"#).unwrap();
    assert_eq!(a.hash(), b.hash(), "defaults and key order do not matter");
    let c = parse_config(r#"{"schema_version":1,"kind":"tape","seed":2}"#).unwrap();
    assert_ne!(a.hash(), c.hash());
    let d = parse_config(r#"{"schema_version":1,"kind":"tape","seed":1,"output_dir":"elsewhere"}"#).unwrap();
    assert_eq!(a.hash(), d.hash(), "the output location is not part of the result");
}

#[test]
fn set_param_only_accepts_declared_fields() {
    let mut cfg = parse_config(r#"{"schema_version":1,"kind":"double-slit"}"#).unwrap();
    cfg.set_param("delta", 2.5).unwrap();
    match &cfg.params {
        Params::DoubleSlit(p) => assert_eq!(p.delta, 2.5),
        _ => unreachable!(),
    }
    assert!(matches!(cfg.set_param("depth", 1.0), Err(CliError::Config(_))));
    assert!(matches!(cfg.set_param("tau", 1.5), Err(CliError::Config(_))));
    assert!(matches!(cfg.set_param("delta", -1.0), Err(CliError::Config(_))));
}

#[test]
fn propagator_check_example_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(shipped("propagator-check.json"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let results: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("results.json")).unwrap()).unwrap();
    assert!(results["summary"]["max_scaled_diff"].as_f64().unwrap() <= 1e-10);
    assert_eq!(results["artifact_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(results["seed"], 20240611);
    assert_eq!(results["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(results["all_checks_passed"], true);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = |cfg: &Path, extra: &[&str]| {
        let o = bin()
            .arg("run")
            .arg("--config")
            .arg(cfg)
            .arg("--out")
            .arg(d.join("o"))
            .args(extra)
            .output()
            .unwrap();
        (
            o.status.code().unwrap(),
            String::from_utf8_lossy(&o.stderr).into_owned(),
        )
    };

    let bad = write(
        d,
        "bad.json",
        r#"{"schema_version":1,"kind":"propagator-check","params":{"lattice":{"n_x":1}}}"#,
    );
    let (code, err) = run(&bad, &[]);
    assert_eq!(code, 2);
    assert!(err.contains("params.lattice.n_x"), "{err}");

    let (code, _) = run(&d.join("missing.json"), &[]);
    assert_eq!(code, 2);

    let cap = write(
        d,
        "cap.json",
        r#"{"schema_version":1,"kind":"propagator-check","params":{"lattice":{"n_x":7,"n_t":12},"cap":1000}}"#,
    );
    assert_eq!(run(&cap, &[]).0, 3);

    let tape_cap = write(
        d,
        "tape.json",
        r#"{"schema_version":1,"kind":"tape","params":{"generations":60}}"#,
    );
    assert_eq!(run(&tape_cap, &[]).0, 3);

    // Boundary far outside the grid: every Newton start escapes.
    let lost = write(
        d,
        "lost.json",
        r#"{"schema_version":1,"kind":"classical-select","params":{"boundary":[-1, 50], "n_seeds": 2}}"#,
    );
    let (code, err) = run(&lost, &[]);
    assert_eq!(code, 4, "{err}");

    // A check that cannot pass: the saddle-shift slope window excludes 2.
    let failing = write(
        d,
        "fail.json",
        r#"{"schema_version":1,"kind":"classical-select","params":{
            "lattice":{"n_t":50,"dt":0.05,"x_min":-3,"dx":0.05,"n_x":121},
            "potential":[[0,0],[0,0],[0.5,0]], "boundary":[0,1], "n_seeds":2,
            "saddle_shift":{"slope_range":[0.5,1.0]}}}"#,
    );
    assert_eq!(run(&failing, &[]).0, 1);

    assert_eq!(run(&shipped("higgs-toy.json"), &["--workers", "0"]).0, 2);
}

#[test]
fn sweep_verb_contracts() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = |cfg: &str, param: &str, values: &str| {
        let o = bin()
            .args(["sweep", "--config"])
            .arg(shipped(cfg))
            .args(["--param", param, "--values", values, "--out"])
            .arg(dir.path())
            .output()
            .unwrap();
        o.status.code().unwrap()
    };
    assert_eq!(sweep("double-slit.json", "delta", ""), 2);
    assert_eq!(sweep("double-slit.json", "depth", "1,2"), 2);

    assert_eq!(sweep("double-slit.json", "delta", "0,0.5,1,2"), 0);
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let vis: Vec<f64> = rdr.records().map(|r| r.unwrap()[2].parse().unwrap()).collect();
    assert_eq!(vis.len(), 4);
    assert!(vis.windows(2).all(|w| w[1] <= w[0]), "{vis:?}");

    assert_eq!(sweep("higgs-toy.json", "m2_i", "-1,0,1"), 0);
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let selected: Vec<String> = rdr.records().map(|r| r.unwrap()[2].to_string()).collect();
    assert_eq!(selected, ["machine-on", "machine-off", "machine-off"]);
}

#[test]
fn validate_and_list_verbs() {
    let o = bin()
        .arg("validate")
        .arg("--config")
        .arg(shipped("tape-swap.json"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("ok (tape"));
    let o = bin().arg("list-scenarios").output().unwrap();
    let text = String::from_utf8_lossy(&o.stdout);
    for kind in ScenarioKind::ALL {
        assert!(text.contains(kind.name()));
    }
}

proptest! {
    #[test]
    fn config_parser_never_panics(text in ".{0,300}") {
        let _ = parse_config(&text);
    }

    #[test]
    fn config_parser_never_panics_on_json_shaped_input(
        kind in prop::sample::select(vec!["tape", "double-slit", "measurement", "higgs-toy", "propagator-check", "classical-select", "x"]),
        key in "[a-z_]{1,12}",
        value in prop_oneof![Just("0".to_string()), Just("-1".to_string()), Just("1e308".to_string()),
                             Just("\"A->AB\"".to_string()), Just("[]".to_string()), Just("null".to_string())],
    ) {
        let text = format!(r#"{{"schema_version":1,"kind":"{kind}","params":{{"{key}":{value}}}}}"#);
        let _ = parse_config(&text);
    }

    #[test]
    fn sweep_parser_never_panics(text in "[0-9eE:,. +-]{0,40}") {
        if let Ok(v) = parse_sweep_values(&text) {
            prop_assert!(!v.is_empty() && v.iter().all(|x| x.is_finite()));
        }
    }

    #[test]
    fn rule_parser_never_panics(text in "[AB>;,\\- \n]{0,40}", seed in "[AB]{0,4}") {
        let _ = complex_action::tape::SubstitutionSystem::parse(&text, &seed, false);
    }
}
