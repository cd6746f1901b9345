use std::io::Write;
use std::process::Command;

use serde_json::Value;
use solvmetric::scalar::parse_rational;
use solvmetric::Rational;
use solvmetric_cli::catalog::{self, parse_expected};
use solvmetric_cli::AlgebraDocument;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_solvmetric"))
}

/// Runs the binary with `--json` and returns (exit code, parsed stdout).
fn json(args: &[&str]) -> (i32, Value) {
    let out = bin().arg("--json").args(args).output().expect("binary runs");
    let text = String::from_utf8(out.stdout).expect("utf-8");
    let value: Value = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{args:?}: {e}\n{text}"));
    (out.status.code().expect("exit code"), value)
}

fn text(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn temp_doc(contents: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f
}

fn sorted_rationals(v: &[String]) -> Vec<Rational> {
    let mut out: Vec<Rational> = v.iter().map(|s| parse_rational(s).unwrap()).collect();
    out.sort();
    out
}

fn strings(v: &Value) -> Vec<String> {
    v.as_array().unwrap().iter().map(|s| s.as_str().unwrap().to_string()).collect()
}

#[test]
fn every_catalog_document_round_trips() {
    for entry in catalog::entries() {
        let text = entry.document.to_json();
        let back = AlgebraDocument::from_json(&text).unwrap();
        assert_eq!(back, entry.document, "{}", entry.name);
        assert_eq!(back.to_json(), text);
    }
}

#[test]
fn every_catalog_entry_validates_exactly() {
    for entry in catalog::entries() {
        let (code, out) = json(&["validate", "--exact", &entry.name]);
        assert_eq!(code, 0, "{}", entry.name);
        assert_eq!(out["result"]["jacobi"], true);
    }
}

#[test]
fn catalog_expectations_hold() {
    for entry in catalog::entries() {
        let e = &entry.expected;
        let name = entry.name.as_str();
        if let Some(want) = &e.pre_einstein_spectrum {
            let (code, out) = json(&["pre-einstein", name]);
            assert_eq!(code, 0, "{name}");
            assert_eq!(sorted_rationals(&strings(&out["result"]["spectrum"])), sorted_rationals(want), "{name}");
        }
        if let Some(want) = e.nilsoliton {
            let (code, out) = json(&["nilsoliton-check", name]);
            assert_eq!(out["result"]["nilsoliton"], want, "{name}");
            assert_eq!(code, if want { 0 } else { 1 }, "{name}");
            if let Some(c) = &e.soliton_constant {
                let got = out["result"]["c"].as_f64().unwrap();
                let want = solvmetric::Scalar::to_f64(&parse_expected(c));
                assert!((got - want).abs() < 1e-9, "{name}: c {got} vs {want}");
            }
        }
        if let Some(want) = e.einstein {
            let (code, out) = json(&["einstein-check", name]);
            assert_eq!(out["result"]["einstein"], want, "{name}");
            assert_eq!(code, if want { 0 } else { 1 }, "{name}");
            if let Some(c) = &e.einstein_constant {
                let got = out["result"]["einstein_constant"].as_f64().unwrap();
                let want = solvmetric::Scalar::to_f64(&parse_expected(c));
                assert!((got - want).abs() < 1e-9, "{name}: c {got} vs {want}");
            }
        }
        if let Some(want) = e.derivation_dim {
            let (_, out) = json(&["derivations", name]);
            assert_eq!(out["result"]["dim"], want, "{name}");
        }
    }
}

#[test]
fn heisenberg_soliton_constant_matches_closed_form() {
    // unit metric: Ric = diag(-1/2, -1/2, 1/2) = c + t diag(1, 1, 2) gives t = 1, c = -3/2
    let (t, c) = {
        let t = 0.5 - (-0.5);
        (t, -0.5 - t)
    };
    assert_eq!(t, 1.0);
    let entry = catalog::find("heisenberg3").unwrap();
    assert_eq!(
        solvmetric::Scalar::to_f64(&parse_expected(entry.expected.soliton_constant.as_deref().unwrap())),
        c
    );
}

#[test]
fn rank_one_extensions_share_the_soliton_constant() {
    let (_, soliton) = json(&["nilsoliton-check", "heisenberg3"]);
    let (_, ext) = json(&["ricci", "ch2"]);
    let a = soliton["result"]["c"].as_f64().unwrap();
    let b = ext["result"]["einstein_constant"].as_f64().unwrap();
    assert!((a - b).abs() < 1e-9);
}

#[test]
fn hyperbolic_space_has_constant_minus_dim_minus_one() {
    // sym(ad A) = Id on R^2: constant curvature -1, so Ric = -(3 - 1) Id
    let (code, out) = json(&["ricci", "hyperbolic-rot"]);
    assert_eq!(code, 0);
    assert!((out["result"]["einstein_constant"].as_f64().unwrap() + 2.0).abs() < 1e-12);
}

#[test]
fn every_subcommand_emits_one_json_object() {
    let invocations: Vec<Vec<&str>> = vec![
        vec!["validate", "heisenberg3"],
        vec!["killing", "ch2"],
        vec!["derivations", "heisenberg3"],
        vec!["skew-derivations", "heisenberg3"],
        vec!["pre-einstein", "heisenberg3"],
        vec!["ricci", "ch2"],
        vec!["einstein-check", "ch2"],
        vec!["nilsoliton-check", "heisenberg3"],
        vec!["nilsoliton-flow", "heisenberg3", "--runs", "2"],
        vec!["extend-abelian", "heisenberg3"],
        vec!["extend-semisimple", "sl2-iwasawa-ext"],
        vec!["standard-modification", "ch2"],
        vec!["g-phi", "heisenberg3"],
        vec!["torus-closed", "heisenberg3"],
        vec!["catalog", "list"],
        vec!["catalog", "show", "paper-n11"],
        vec!["ricci", "no-such-entry"],
    ];
    for args in invocations {
        let (_, out) = json(&args);
        let obj = out.as_object().unwrap_or_else(|| panic!("{args:?}"));
        assert!(obj.contains_key("result"), "{args:?}");
        assert!(obj["diagnostics"].is_array(), "{args:?}");
    }
}

#[test]
fn pre_einstein_of_heisenberg() {
    let (code, out) = json(&["pre-einstein", "heisenberg3"]);
    assert_eq!(code, 0);
    assert_eq!(strings(&out["result"]["spectrum"]), ["2/3", "2/3", "4/3"]);
}

#[test]
fn s12_catalog_entry_is_einstein() {
    let (code, out) = json(&["ricci", "paper-s12"]);
    assert_eq!(code, 0);
    assert!(out["result"]["deviation"].as_f64().unwrap() < 1e-8);
    assert_eq!(out["result"]["einstein"], true);
}

const BROKEN: &str = r#"{
  "schema_version": "1",
  "dim": 3,
  "basis": ["x", "y", "z"],
  "brackets": [
    {"i": 0, "j": 1, "k": 1, "c": "1"},
    {"i": 0, "j": 2, "k": 0, "c": "1"},
    {"i": 1, "j": 2, "k": 2, "c": "1"}
  ]
}"#;

#[test]
fn broken_jacobi_reports_the_triple() {
    let f = temp_doc(BROKEN);
    let path = f.path().to_str().unwrap();
    let (code, out) = json(&["validate", path]);
    assert_eq!(code, 1);
    let failures = out["result"]["failures"].as_array().unwrap();
    assert_eq!(failures[0]["triple"], serde_json::json!([0, 1, 2]));
    let (code, stdout, _) = text(&["validate", path]);
    assert_eq!(code, 1);
    assert!(stdout.contains("(x, y, z)"), "{stdout}");
}

#[test]
fn input_errors_exit_with_two_and_distinct_messages() {
    let bad_schema = temp_doc(&BROKEN.replace("\"1\",\n  \"dim\"", "\"9\",\n  \"dim\""));
    let short_basis = temp_doc(&BROKEN.replace("[\"x\", \"y\", \"z\"]", "[\"x\", \"y\"]"));
    let bad_metric = temp_doc(&BROKEN.replace(
        "\"brackets\": [",
        "\"metric\": [[1, 0], [0, 1]],\n  \"brackets\": [",
    ));
    let not_json = temp_doc("{ nope");
    let paths = [&bad_schema, &short_basis, &bad_metric, &not_json];
    let mut messages = Vec::new();
    for p in paths {
        let (code, _, err) = text(&["validate", p.path().to_str().unwrap()]);
        assert_eq!(code, 2, "{err}");
        messages.push(err);
    }
    let (code, _, err) = text(&["ricci", "no-such-entry"]);
    assert_eq!(code, 2);
    assert!(err.contains("unknown catalog entry"));
    messages.push(err);
    let (code, _, err) = text(&["extend-abelian", "heisenberg3", "--diag", "1,1"]);
    assert_eq!(code, 2);
    assert!(err.contains("expected 3"), "{err}");
    messages.push(err);
    for (a, m) in messages.iter().enumerate() {
        for b in &messages[a + 1..] {
            assert_ne!(m, b);
        }
    }
}

#[test]
fn nilpotent_only_commands_reject_solvable_input() {
    for cmd in ["nilsoliton-check", "g-phi", "torus-closed"] {
        let (code, _, _) = text(&[cmd, "paper-s12"]);
        assert_eq!(code, 2, "{cmd}");
    }
}

#[test]
fn extend_abelian_with_explicit_family() {
    let (code, out) = json(&["extend-abelian", "heisenberg3", "--diag", "1,1,2"]);
    assert_eq!(code, 0);
    assert_eq!(out["result"]["dim"], 4);
    assert!(out["result"]["deviation"].as_f64().unwrap() < 1e-8);
    let doc: AlgebraDocument = serde_json::from_value(out["result"]["document"].clone()).unwrap();
    assert_eq!(doc.dim, 4);
    assert!(doc.algebra().unwrap().validate().passed());
}

#[test]
fn unhalved_alpha_rule_is_a_check_failure() {
    let (code, out) = json(&["extend-semisimple", "sl2-iwasawa-ext", "--alpha-rule", "unhalved"]);
    assert_eq!(code, 1);
    assert!(!out["diagnostics"].as_array().unwrap().is_empty());
}

#[test]
fn gauge_fixed_flow_converges_on_paper_n11() {
    let (code, out) = json(&["nilsoliton-flow", "paper-n11", "--scheme", "gauge-fixed", "--runs", "2"]);
    assert_eq!(code, 0);
    assert_eq!(out["result"]["all_converged"], true);
}

#[test]
fn unconverged_flow_is_labeled_non_certifying() {
    let (code, out) = json(&["nilsoliton-flow", "paper-n2-10", "--max-iter", "50"]);
    assert_eq!(code, 1);
    assert_eq!(out["result"]["certifying"], false);
    assert!(out["result"]["note"].as_str().unwrap().contains("non-certifying"));
}

#[test]
fn torus_verdicts() {
    let (code, out) = json(&["torus-closed", "heisenberg3"]);
    assert_eq!(code, 0);
    assert_eq!(out["result"]["verdict"], "closed");
    let (code, out) = json(&["torus-closed", "abelian-2"]);
    assert_eq!(code, 0);
    assert_eq!(out["result"]["closed"], true);
}

#[test]
fn g_phi_agrees_with_derivations() {
    let (code, out) = json(&["g-phi", "paper-n11"]);
    assert_eq!(code, 0);
    assert_eq!(out["result"]["agrees"], true);
}
