//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any
//! criterion fails.

use std::time::{Duration, Instant};

use clap::Parser;
use nalgebra::DMatrix;
use serde_json::Value;
use solvmetric::extension::{extend_semisimple, AlphaRule};
use solvmetric::orbit::{torus_closed, OrbitProblem, Verdict};
use solvmetric::{laws, models, BracketEntry, LieAlgebra};
use solvmetric_cli::{catalog, run, Cli};

struct Check {
    ok: bool,
    notes: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Self {
            ok: true,
            notes: Vec::new(),
        }
    }

    fn that(&mut self, ok: bool, note: impl Into<String>) {
        let note = note.into();
        if ok {
            self.notes.push(note);
        } else {
            self.ok = false;
            self.notes.push(format!("FAILED {note}"));
        }
    }

    fn within(&mut self, start: Instant, limit: Duration) {
        let took = start.elapsed();
        self.that(took < limit, format!("runtime {:.2?} < {:?}", took, limit));
    }
}

fn cli(args: &[&str]) -> (i32, Value) {
    let mut argv = vec!["solvmetric", "--json"];
    argv.extend_from_slice(args);
    let parsed = Cli::try_parse_from(argv).expect("arguments parse");
    let outcome = run(&parsed);
    (outcome.code(), outcome.to_json())
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().map(|a| a.iter().map(f).collect()).unwrap_or_default()
}

fn strings(v: &Value) -> Vec<String> {
    v.as_array()
        .map(|a| a.iter().filter_map(|s| s.as_str().map(String::from)).collect())
        .unwrap_or_default()
}

fn ac1() -> Check {
    let mut c = Check::new();
    let start = Instant::now();
    let (code, out) = cli(&["ricci", "paper-s12"]);
    c.within(start, Duration::from_secs(1));
    let r = &out["result"];
    c.that(code == 0, format!("exit {code}"));
    let dev = f(&r["deviation"]);
    let constant = f(&r["einstein_constant"]);
    c.that(dev < 1e-8, format!("deviation {dev:.2e} < 1e-8"));
    c.that(constant < 0.0, format!("c = {constant:.6} < 0"));
    c
}

fn ac2() -> Check {
    let mut c = Check::new();
    let start = Instant::now();
    let (code, out) = cli(&["nilsoliton-check", "paper-n11"]);
    c.within(start, Duration::from_secs(1));
    let r = &out["result"];
    c.that(code == 0, format!("exit {code}"));
    let residual = f(&r["residual"]);
    c.that(residual < 1e-8, format!("residual {residual:.2e} < 1e-8"));
    let mut got: Vec<i64> = r["integer_spectrum"]
        .as_array()
        .map(|a| a.iter().filter_map(Value::as_i64).collect())
        .unwrap_or_default();
    got.sort_unstable();
    let mut want = vec![21, 17, 21, 19, 19, 19, 19, 19, 19, 38, 38];
    want.sort_unstable();
    c.that(got == want, format!("integer spectrum {got:?}"));
    c
}

fn ac3() -> Check {
    let mut c = Check::new();
    let cases: [(&str, Vec<&str>); 2] = [
        ("heisenberg3", vec!["2/3", "2/3", "4/3"]),
        (
            "paper-n11",
            vec![
                "17/25", "19/25", "19/25", "19/25", "19/25", "19/25", "19/25", "21/25", "21/25", "38/25",
                "38/25",
            ],
        ),
    ];
    for (name, want) in cases {
        let start = Instant::now();
        let (code, out) = cli(&["pre-einstein", name]);
        c.within(start, Duration::from_secs(1));
        let r = &out["result"];
        c.that(code == 0, format!("{name}: exit {code}"));
        let mut got = strings(&r["spectrum"]);
        let mut want: Vec<String> = want.into_iter().map(String::from).collect();
        got.sort();
        want.sort();
        c.that(got == want, format!("{name}: spectrum {got:?}"));
        let t = f(&r["trace_identity_residual"]);
        c.that(t < 1e-9, format!("{name}: |tr(phi^2) - tr(phi)| = {t:.2e}"));
    }
    c
}

fn ac4() -> Check {
    let mut c = Check::new();
    let start = Instant::now();
    let (code, out) = cli(&["nilsoliton-flow", "heisenberg3", "--runs", "5", "--seed", "11", "--max-iter", "20000"]);
    c.within(start, Duration::from_secs(30));
    c.that(code == 0, format!("exit {code}"));
    let runs = out["result"]["runs"].as_array().cloned().unwrap_or_default();
    c.that(runs.len() == 5, format!("{} runs", runs.len()));
    for run in &runs {
        let seed = &run["seed"];
        let best = f(&run["best_residual"]);
        c.that(
            run["converged"] == Value::Bool(true) && best < 1e-6,
            format!("seed {seed}: residual {best:.2e}"),
        );
        let mut s = floats(&run["normalized_ricci_spectrum"]);
        s.sort_by(f64::total_cmp);
        let target = [-1.0, -1.0, 1.0];
        let err = s.iter().zip(target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        c.that(s.len() == 3 && err < 1e-4, format!("seed {seed}: Ricci shape error {err:.2e}"));
    }
    c
}

fn ac5() -> Check {
    let mut c = Check::new();
    let start = Instant::now();

    let (code, out) = cli(&["extend-abelian", "heisenberg3", "--diag", "1,1,2"]);
    let r = &out["result"];
    let dev = f(&r["deviation"]);
    c.that(code == 0, format!("abelian: exit {code}"));
    c.that(r["dim"] == 4 && dev < 1e-8, format!("abelian: dim {}, deviation {dev:.2e}", r["dim"]));

    let (code, out) = cli(&["extend-semisimple", "sl2-times-ch2"]);
    let r = &out["result"];
    c.that(code == 0, format!("rho = 0: exit {code}"));
    let cross = f(&r["cross_block"]);
    c.that(cross < 1e-10, format!("rho = 0: cross block {cross:.2e}"));
    let constant = f(&r["einstein_constant"]);
    let alpha = floats(&r["alphas"]).first().copied().unwrap_or(f64::NAN);
    let want = -1.0 / constant;
    c.that(
        (alpha - want).abs() < 1e-8,
        format!("rho = 0: alpha {alpha:.6} vs -1/c = {want:.6}"),
    );

    let (code, out) = cli(&["extend-semisimple", "sl2-iwasawa-ext"]);
    let r = &out["result"];
    c.that(code == 0, format!("sl2-iwasawa-ext: exit {code}"));
    let dev = f(&r["deviation"]);
    c.that(dev < 1e-6, format!("sl2-iwasawa-ext: deviation {dev:.2e}"));
    let beta = floats(&r["betas"]).first().copied().unwrap_or(f64::NAN);
    let alpha = floats(&r["alphas"]).first().copied().unwrap_or(f64::NAN);
    let constant = f(&r["einstein_constant"]);
    c.that(beta > 0.0, format!("beta_1 = {beta:.6} > 0"));
    let want = (-1.0 - beta) / constant;
    c.that(
        (alpha - want).abs() < 1e-8,
        format!("alpha_1 {alpha:.6} vs (-1 - beta_1)/c = {want:.6}"),
    );

    let unhalved = extend_semisimple(&models::sl2_iwasawa_ext(), AlphaRule::Unhalved);
    c.that(
        true,
        format!(
            "(info) alpha_1 = (-1 - beta_1)/c gives {}",
            match unhalved {
                Ok(res) => format!("deviation {:.2e}", res.deviation),
                Err(e) => e.to_string(),
            }
        ),
    );
    c.within(start, Duration::from_secs(5));
    c
}

fn ac6() -> Check {
    let mut c = Check::new();
    for entry in catalog::entries().into_iter().filter(|e| e.solvable) {
        let (code, out) = cli(&["standard-modification", &entry.name, "--steps", "3"]);
        let d = f(&out["result"]["last_two_differ_by"]);
        c.that(
            code == 0 && d <= 1e-10,
            format!("{}: steps 2 and 3 differ by {d:.2e}", entry.name),
        );
    }
    c
}

fn ac7() -> Check {
    let mut c = Check::new();
    let start = Instant::now();
    let (code, out) = cli(&["torus-closed", "heisenberg3"]);
    let r = &out["result"];
    c.that(code == 0 && r["verdict"] == "closed", format!("heisenberg3: {}", r["verdict"]));
    let set = r["weight_set"].as_array().cloned().unwrap_or_default();
    let zero = set.len() == 1 && floats(&set[0]).iter().all(|w| *w == 0.0);
    c.that(zero, format!("weight set {}", r["weight_set"]));

    let mu = LieAlgebra::new(
        vec!["e1".into(), "e2".into()],
        vec![BracketEntry::new(0, 1, 0, 1.0)],
    )
    .expect("valid bracket");
    let norm0 = mu.structure_scale();
    let problem = OrbitProblem {
        mu,
        group_basis: vec![DMatrix::from_diagonal(&nalgebra::dvector![1.0, -1.0])],
    };
    match torus_closed(&problem) {
        Ok(res) => {
            c.that(res.verdict == Verdict::NotClosed, format!("one-sided: {:?}", res.verdict));
            match res.destabilizer {
                Some(d) => {
                    let last = d.flow.last().map(|p| p.1).unwrap_or(f64::INFINITY);
                    c.that(
                        d.verified && last < 1e-6 * norm0,
                        format!("destabilizer {:?} flows to {last:.2e}", d.direction),
                    );
                }
                None => c.that(false, "one-sided: no destabilizer"),
            }
        }
        Err(e) => c.that(false, format!("one-sided: {e}")),
    }
    c.within(start, Duration::from_secs(1));
    c
}

fn ac8() -> Check {
    let mut c = Check::new();
    let start = Instant::now();
    let (code, out) = cli(&["nilsoliton-flow", "paper-n2-10", "--runs", "20", "--seed", "1"]);
    c.within(start, Duration::from_secs(120));
    let r = &out["result"];
    c.that(code == 1, format!("exit {code}"));
    let runs = r["runs"].as_array().cloned().unwrap_or_default();
    c.that(runs.len() == 20, format!("{} runs", runs.len()));
    let stalled = runs
        .iter()
        .filter(|run| run["converged"] == Value::Bool(false) && f(&run["best_residual"]) > 1e-2)
        .count();
    c.that(stalled == runs.len(), format!("{stalled} runs stagnate above 1e-2"));
    let best = f(&r["best_residual"]);
    c.that(best > 1e-2, format!("best residual {best:.3e}"));
    let labeled = r["certifying"] == Value::Bool(false) && r["note"].as_str().is_some_and(|s| s.contains("non-certifying"));
    c.that(labeled, "labeled non-certifying");
    c
}

fn ac9() -> Check {
    let mut c = Check::new();
    for report in laws::run_all(100, 2024) {
        c.that(
            report.passed() && report.trials >= 100,
            format!("{} {}/{} (worst {:.1e})", report.name, report.trials - report.failures, report.trials, report.worst),
        );
    }
    c
}

fn main() {
    let criteria: [(&str, &str, fn() -> Check); 9] = [
        ("AC1", "paper-s12 is Einstein", ac1),
        ("AC2", "nilsoliton on paper-n11", ac2),
        ("AC3", "pre-Einstein derivations", ac3),
        ("AC4", "flow recovery on heisenberg3", ac4),
        ("AC5", "extension correctness", ac5),
        ("AC6", "standard modification stability", ac6),
        ("AC7", "torus closedness", ac7),
        ("AC8", "no nilsoliton on paper-n2-10 (non-certifying)", ac8),
        ("AC9", "randomized laws", ac9),
    ];
    let mut failed = 0;
    for (id, title, check) in criteria {
        let c = check();
        if !c.ok {
            failed += 1;
        }
        println!(
            "{id} {} {title}: {}",
            if c.ok { "PASS" } else { "FAIL" },
            c.notes.join("; ")
        );
    }
    println!("{} of 9 criteria pass", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
