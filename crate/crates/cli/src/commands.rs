//! Subcommand dispatch. Every command yields an [`Outcome`] with a JSON
//! `result`, human-readable lines and diagnostics.

use std::path::Path;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde_json::{json, Value};
use solvmetric::curvature::{einstein_check, ricci_operator, ReductiveSplit, RicciReport};
use solvmetric::derivations::{derivation_basis, pre_einstein, skew_derivations};
use solvmetric::extension::{
    extend_abelian, extend_semisimple, iterate_standard_modification, AbelianExtensionSpec,
    AbelianMetricRule, AlphaRule,
};
use solvmetric::orbit::{build_g_phi, torus_closed, Verdict};
use solvmetric::scalar::format_rational;
use solvmetric::soliton::{
    nilsoliton_residual, normalize_derivation, normalized_spectrum, seeded_flows, FlowParams,
    FlowScheme,
};
use solvmetric::{gauss, laws, Error, ExactAlgebra, LieAlgebra, RealAlgebra};

use crate::catalog;
use crate::document::{rational_of, AlgebraDocument};

#[derive(Parser, Debug)]
#[command(name = "solvmetric", version, about = "Curvature, nilsolitons and Einstein extensions of metric Lie algebras")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Options {
    /// Tolerance; the default depends on the subcommand.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Seed for randomized runs.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Print one JSON object on standard output.
    #[arg(long, global = true)]
    pub json: bool,
    /// Rational validation only.
    #[arg(long, global = true)]
    pub exact: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum AlphaChoice {
    #[default]
    KillingNormalized,
    Unhalved,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum SchemeChoice {
    #[default]
    Additive,
    GaugeFixed,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum AMetricChoice {
    #[default]
    TraceOfProduct,
    ProductOfTraces,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Jacobi identity on every basis triple.
    Validate { input: String },
    /// Killing form, exactly.
    Killing { input: String },
    /// Basis of the derivation algebra.
    Derivations { input: String },
    /// Derivations that are skew for the declared metric.
    SkewDerivations { input: String },
    /// Pre-Einstein derivation and its snapped spectrum.
    PreEinstein { input: String },
    /// Ricci curvature of the declared metric.
    Ricci { input: String },
    /// Exit 1 unless the declared metric is Einstein with negative constant.
    EinsteinCheck { input: String },
    /// Fit Ric = c Id + D and report the residual.
    NilsolitonCheck { input: String },
    /// Seeded nilsoliton flows from random metrics.
    NilsolitonFlow {
        input: String,
        /// Number of runs, with seeds seed, seed + 1, ...
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, value_enum, default_value_t)]
        scheme: SchemeChoice,
    },
    /// Einstein extension by an abelian family of symmetric derivations.
    ExtendAbelian {
        input: String,
        /// Diagonal derivation as comma-separated entries; repeat for more.
        #[arg(long = "diag")]
        diag: Vec<String>,
        #[arg(long, value_enum, default_value_t)]
        a_metric: AMetricChoice,
    },
    /// Einstein extension by a semisimple algebra (bundled specifications).
    ExtendSemisimple {
        input: String,
        #[arg(long, value_enum, default_value_t)]
        alpha_rule: AlphaChoice,
    },
    /// Repeated standard modification.
    StandardModification {
        input: String,
        #[arg(long, default_value_t = 3)]
        steps: usize,
    },
    /// The group data g_phi and the stabilizer of the bracket.
    GPhi { input: String },
    /// Closedness of the torus orbit of the bracket.
    TorusClosed { input: String },
    /// Bundled algebras.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Subcommand, Debug)]
pub enum CatalogAction {
    List,
    Show { name: String },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Killing { .. } => "killing",
            Command::Derivations { .. } => "derivations",
            Command::SkewDerivations { .. } => "skew-derivations",
            Command::PreEinstein { .. } => "pre-einstein",
            Command::Ricci { .. } => "ricci",
            Command::EinsteinCheck { .. } => "einstein-check",
            Command::NilsolitonCheck { .. } => "nilsoliton-check",
            Command::NilsolitonFlow { .. } => "nilsoliton-flow",
            Command::ExtendAbelian { .. } => "extend-abelian",
            Command::ExtendSemisimple { .. } => "extend-semisimple",
            Command::StandardModification { .. } => "standard-modification",
            Command::GPhi { .. } => "g-phi",
            Command::TorusClosed { .. } => "torus-closed",
            Command::Catalog { .. } => "catalog",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    CheckFailed,
    InputError,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::CheckFailed => 1,
            Status::InputError => 2,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::CheckFailed => "check-failed",
            Status::InputError => "input-error",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub command: String,
    pub status: Status,
    pub result: Value,
    pub lines: Vec<String>,
    pub diagnostics: Vec<String>,
}

impl Outcome {
    pub fn code(&self) -> i32 {
        self.status.code()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "command": self.command,
            "status": self.status.label(),
            "result": self.result,
            "diagnostics": self.diagnostics,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = self.lines.join("\n");
        out.push('\n');
        out
    }
}

/// Failure before a report could be produced.
#[derive(Debug)]
struct Failure {
    status: Status,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            status: Status::InputError,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::PreEinsteinNotFound { .. }
            | Error::NotEinsteinCandidate(_)
            | Error::BetaFit { .. }
            | Error::ConstructionFailure { .. }
            | Error::DegeneratePairing { .. } => Status::CheckFailed,
            _ => Status::InputError,
        };
        Self {
            status,
            message: e.to_string(),
        }
    }
}

struct Report {
    ok: bool,
    result: Value,
    lines: Vec<String>,
    diagnostics: Vec<String>,
}

impl Report {
    fn new(ok: bool, result: Value, lines: Vec<String>) -> Self {
        Self {
            ok,
            result,
            lines,
            diagnostics: Vec::new(),
        }
    }
}

type Run = std::result::Result<Report, Failure>;

struct Loaded {
    doc: AlgebraDocument,
    alg: ExactAlgebra,
}

fn load(input: &str) -> std::result::Result<Loaded, Failure> {
    let doc = if Path::new(input).is_file() {
        let text = std::fs::read_to_string(input)
            .map_err(|e| Failure::input(format!("cannot read {input}: {e}")))?;
        AlgebraDocument::from_json(&text).map_err(|e| Failure::input(format!("{input}: {e}")))?
    } else if let Some(entry) = catalog::find(input) {
        entry.document
    } else {
        return Err(Failure::input(format!(
            "unknown catalog entry or file: {input} (known: {})",
            catalog::names().join(", ")
        )));
    };
    let alg = doc.algebra().map_err(|e| Failure::input(format!("{input}: {e}")))?;
    Ok(Loaded { doc, alg })
}

/// Metric on the whole algebra; a reductive document is rejected.
fn full_metric(loaded: &Loaded) -> std::result::Result<DMatrix<f64>, Failure> {
    if loaded.doc.reductive.is_some() {
        return Err(Failure::input(
            "this subcommand needs a metric on the whole algebra, not on q",
        ));
    }
    Ok(loaded.doc.metric_or_identity())
}

fn split_of(loaded: &Loaded) -> std::result::Result<ReductiveSplit<f64>, Failure> {
    let alg = loaded.alg.to_f64();
    let metric = loaded.doc.metric_or_identity();
    Ok(match &loaded.doc.reductive {
        Some(r) => ReductiveSplit::new(alg, r.k.clone(), r.q.clone(), metric)?,
        None => ReductiveSplit::trivial(alg, metric)?,
    })
}

fn matrix(m: &DMatrix<f64>) -> Value {
    Value::from(
        (0..m.nrows())
            .map(|r| m.row(r).iter().copied().collect::<Vec<f64>>())
            .collect::<Vec<_>>(),
    )
}

fn exact_matrix(m: &DMatrix<solvmetric::Rational>) -> Value {
    Value::from(
        (0..m.nrows())
            .map(|r| m.row(r).iter().map(format_rational).collect::<Vec<String>>())
            .collect::<Vec<_>>(),
    )
}

/// Structure constants of a float algebra as a document, snapping short
/// fractions.
fn document_of(alg: &RealAlgebra, metric: Option<&DMatrix<f64>>) -> AlgebraDocument {
    let exact = alg.map_scalar(|v| rational_of(*v));
    let doc = AlgebraDocument::from_algebra(&exact);
    match metric {
        Some(g) => doc.with_metric(g),
        None => doc,
    }
}

fn fmt_list(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

pub fn run(cli: &Cli) -> Outcome {
    let command = cli.command.name().to_string();
    let outcome = dispatch(&cli.command, &cli.options);
    match outcome {
        Ok(report) => {
            let status = if report.ok { Status::Ok } else { Status::CheckFailed };
            Outcome {
                command,
                status,
                result: report.result,
                lines: report.lines,
                diagnostics: report.diagnostics,
            }
        }
        Err(f) => Outcome {
            command,
            status: f.status,
            result: Value::Null,
            lines: vec![format!("error: {}", f.message)],
            diagnostics: vec![f.message],
        },
    }
}

fn dispatch(command: &Command, opts: &Options) -> Run {
    match command {
        Command::Validate { input } => validate(&load(input)?, opts),
        Command::Killing { input } => killing(&load(input)?),
        Command::Derivations { input } => derivations(&load(input)?),
        Command::SkewDerivations { input } => skew(&load(input)?),
        Command::PreEinstein { input } => pre_einstein_cmd(&load(input)?, opts),
        Command::Ricci { input } => ricci(&load(input)?, opts, false),
        Command::EinsteinCheck { input } => ricci(&load(input)?, opts, true),
        Command::NilsolitonCheck { input } => nilsoliton_check(&load(input)?, opts),
        Command::NilsolitonFlow { input, runs, step, scheme } => {
            flow(&load(input)?, opts, *runs, *step, *scheme)
        }
        Command::ExtendAbelian { input, diag, a_metric } => {
            extend_abelian_cmd(&load(input)?, diag, *a_metric)
        }
        Command::ExtendSemisimple { input, alpha_rule } => extend_semisimple_cmd(input, *alpha_rule),
        Command::StandardModification { input, steps } => standard_modification(&load(input)?, *steps),
        Command::GPhi { input } => g_phi(&load(input)?),
        Command::TorusClosed { input } => torus(&load(input)?),
        Command::Catalog { action } => catalog_cmd(action),
    }
}

fn validate(l: &Loaded, opts: &Options) -> Run {
    let report = l.alg.validate();
    let names = l.alg.names();
    let failures: Vec<Value> = report
        .failures
        .iter()
        .map(|f| {
            let (i, j, k) = f.triple;
            json!({
                "triple": [i, j, k],
                "names": [names[i], names[j], names[k]],
                "residual": f.residual.iter().map(format_rational).collect::<Vec<_>>(),
            })
        })
        .collect();
    let mut result = json!({
        "dim": l.alg.dim(),
        "triples_checked": report.triples_checked,
        "jacobi": report.passed(),
        "failures": failures,
    });
    let mut lines = Vec::new();
    if report.passed() {
        lines.push(format!("Jacobi holds exactly on all {} triples", report.triples_checked));
    } else {
        for f in &report.failures {
            let (i, j, k) = f.triple;
            let r: Vec<String> = f.residual.iter().map(format_rational).collect();
            lines.push(format!(
                "Jacobi fails on ({}, {}, {}): residual [{}]",
                names[i],
                names[j],
                names[k],
                r.join(", ")
            ));
        }
    }
    if !opts.exact {
        let float = l.alg.to_f64().validate();
        result["float_max_residual"] = json!(float.max_residual);
        lines.push(format!("floating-point max residual {:.3e}", float.max_residual));
    }
    Ok(Report::new(report.passed(), result, lines))
}

fn killing(l: &Loaded) -> Run {
    let b = l.alg.killing_form();
    let rank = gauss::rank(&b, 0.0);
    let n = l.alg.dim();
    let result = json!({
        "killing_form": exact_matrix(&b),
        "rank": rank,
        "nondegenerate": rank == n,
    });
    let mut lines = vec![format!("Killing form rank {rank} of {n}")];
    for r in 0..n {
        let row: Vec<String> = b.row(r).iter().map(format_rational).collect();
        lines.push(format!("  [{}]", row.join(", ")));
    }
    Ok(Report::new(true, result, lines))
}

fn derivations(l: &Loaded) -> Run {
    let basis = derivation_basis(&l.alg);
    let residual = basis.max_leibniz_residual(&l.alg);
    let result = json!({
        "dim": basis.dim(),
        "max_leibniz_residual": residual,
        "basis": basis.matrices.iter().map(matrix).collect::<Vec<_>>(),
    });
    let lines = vec![format!(
        "Der has dimension {} (max Leibniz residual {residual:.3e})",
        basis.dim()
    )];
    Ok(Report::new(true, result, lines))
}

fn skew(l: &Loaded) -> Run {
    let g = full_metric(l)?;
    let basis = skew_derivations(&l.alg, &g)?;
    let result = json!({
        "dim": basis.dim(),
        "basis": basis.matrices.iter().map(matrix).collect::<Vec<_>>(),
    });
    Ok(Report::new(
        true,
        result,
        vec![format!("skew-symmetric derivations: dimension {}", basis.dim())],
    ))
}

fn pre_einstein_cmd(l: &Loaded, opts: &Options) -> Run {
    let tol = opts.tol.unwrap_or(1e-9);
    let phi = pre_einstein(&l.alg)?;
    let spectrum: Vec<String> = phi.snapped.iter().map(|s| format_rational(&s.to_rational())).collect();
    let normalized = solvmetric::soliton::einstein_derivation_normalized(&phi).ok();
    let ok = phi.residual < tol && phi.self_residual < tol;
    let result = json!({
        "spectrum": spectrum,
        "eigenvalues": phi.eigenvalues,
        "snap_error": phi.snap_error(),
        "residual": phi.residual,
        "trace_identity_residual": phi.self_residual,
        "used_semisimple_part": phi.used_semisimple_part,
        "integer_spectrum": normalized.as_ref().map(|n| n.integers.clone()),
        "matrix": matrix(&phi.matrix),
    });
    let mut lines = vec![
        format!("pre-Einstein spectrum [{}]", spectrum.join(", ")),
        format!(
            "residual {:.3e}, |trace(phi^2) - trace(phi)| = {:.3e}",
            phi.residual, phi.self_residual
        ),
    ];
    if let Some(n) = &normalized {
        lines.push(format!("integer normalization {:?}", n.integers));
    }
    let mut report = Report::new(ok, result, lines);
    if phi.used_semisimple_part {
        report.diagnostics.push("least-squares solution was replaced by its semisimple part".into());
    }
    Ok(report)
}

fn ricci_json(r: &RicciReport, tol: f64) -> Value {
    json!({
        "einstein": einstein_check(r, tol),
        "einstein_constant": r.einstein_constant,
        "deviation": r.deviation,
        "scalar_curvature": r.scalar_curvature,
        "spectrum": r.spectrum,
        "mean_curvature": r.mean_curvature.iter().copied().collect::<Vec<f64>>(),
        "ricci_operator": matrix(&r.ricci_operator),
    })
}

fn ricci(l: &Loaded, opts: &Options, check: bool) -> Run {
    let tol = opts.tol.unwrap_or(1e-8);
    let split = split_of(l)?;
    let r = ricci_operator(&split)?;
    let einstein = einstein_check(&r, tol);
    let lines = vec![
        format!("Ricci spectrum {}", fmt_list(&r.spectrum)),
        format!(
            "c = {:.10}, deviation {:.3e}, scalar curvature {:.6}",
            r.einstein_constant, r.deviation, r.scalar_curvature
        ),
        format!("Einstein: {}", if einstein { "yes" } else { "no" }),
    ];
    Ok(Report::new(!check || einstein, ricci_json(&r, tol), lines))
}

fn nilsoliton_check(l: &Loaded, opts: &Options) -> Run {
    let tol = opts.tol.unwrap_or(1e-8);
    let g = full_metric(l)?;
    let fit = nilsoliton_residual(&l.alg, &g)?;
    let ok = fit.is_nilsoliton(tol);
    let mut diagnostics = Vec::new();
    let normalized = if ok && fit.derivation.amax() > 0.0 {
        match normalize_derivation(&fit.derivation) {
            Ok(n) => Some(n.integers),
            Err(e) => {
                diagnostics.push(e.to_string());
                None
            }
        }
    } else {
        None
    };
    let result = json!({
        "nilsoliton": ok,
        "residual": fit.residual,
        "c": fit.c,
        "derivation": matrix(&fit.derivation),
        "integer_spectrum": normalized,
        "ricci_spectrum": fit.ricci.spectrum,
    });
    let mut lines = vec![
        format!("fit Ric = c Id + D: c = {:.10}, residual {:.3e}", fit.c, fit.residual),
        format!("nilsoliton: {}", if ok { "yes" } else { "no" }),
    ];
    if let Some(ints) = &normalized {
        lines.push(format!("D normalizes to {ints:?}"));
    }
    let mut report = Report::new(ok, result, lines);
    report.diagnostics = diagnostics;
    Ok(report)
}

const NON_CERTIFYING: &str =
    "flows that do not converge are non-certifying: they do not prove that no nilsoliton exists";

fn flow(l: &Loaded, opts: &Options, runs: usize, step: Option<f64>, scheme: SchemeChoice) -> Run {
    if runs == 0 {
        return Err(Failure::input("--runs must be positive"));
    }
    let defaults = FlowParams::default();
    let scheme = match scheme {
        SchemeChoice::Additive => FlowScheme::Additive,
        SchemeChoice::GaugeFixed => FlowScheme::GaugeFixed,
    };
    let params = FlowParams {
        step: step.unwrap_or(scheme.default_step()),
        scheme,
        max_iter: opts.max_iter.unwrap_or(defaults.max_iter),
        tol: opts.tol.unwrap_or(defaults.tol),
        seed: opts.seed,
    };
    let seeds: Vec<u64> = (0..runs as u64).map(|i| opts.seed.wrapping_add(i)).collect();
    let reports = seeded_flows(&l.alg, &seeds, &params)?;
    let all = reports.iter().all(|r| r.converged);
    let runs_json: Vec<Value> = reports
        .iter()
        .map(|r| {
            json!({
                "seed": r.seed,
                "converged": r.converged,
                "stagnated": r.stagnated,
                "step_underflow": r.step_underflow,
                "iterations": r.iterations,
                "best_residual": r.best_residual,
                "metric_condition": r.condition,
                "final_residual": r.residual_history.last(),
                "normalized_ricci_spectrum": normalized_spectrum(&r.final_fit.ricci).iter().copied().collect::<Vec<f64>>(),
                "summary": r.summary(),
            })
        })
        .collect();
    let best = reports.iter().map(|r| r.best_residual).fold(f64::INFINITY, f64::min);
    let result = json!({
        "runs": runs_json,
        "all_converged": all,
        "best_residual": best,
        "certifying": all,
        "note": if all { Value::Null } else { Value::from(NON_CERTIFYING) },
    });
    let mut lines: Vec<String> = reports.iter().map(|r| format!("seed {}: {}", r.seed, r.summary())).collect();
    let mut report = Report::new(all, Value::Null, Vec::new());
    if !all {
        lines.push(NON_CERTIFYING.into());
        report.diagnostics.push(NON_CERTIFYING.into());
    }
    report.result = result;
    report.lines = lines;
    Ok(report)
}

fn parse_diag(text: &str, n: usize) -> std::result::Result<DMatrix<f64>, Failure> {
    let values: Vec<f64> = text
        .split(',')
        .map(|s| {
            let s = s.trim();
            solvmetric::scalar::parse_rational(s)
                .map(|r| solvmetric::Scalar::to_f64(&r))
                .or_else(|| s.parse::<f64>().ok())
                .ok_or_else(|| Failure::input(format!("--diag entry {s:?} is not a number")))
        })
        .collect::<std::result::Result<_, _>>()?;
    if values.len() != n {
        return Err(Failure::input(format!(
            "--diag {text:?} has {} entries, expected {n}",
            values.len()
        )));
    }
    Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(values)))
}

fn extend_abelian_cmd(l: &Loaded, diag: &[String], rule: AMetricChoice) -> Run {
    let g = full_metric(l)?;
    let n = l.alg.dim();
    let a = if diag.is_empty() {
        let fit = nilsoliton_residual(&l.alg, &g)?;
        if !fit.is_nilsoliton(1e-8) {
            return Err(Failure::input(format!(
                "metric is not a nilsoliton (residual {:.3e})",
                fit.residual
            )));
        }
        vec![normalize_derivation(&fit.derivation)?.matrix]
    } else {
        diag.iter().map(|d| parse_diag(d, n)).collect::<std::result::Result<_, _>>()?
    };
    let spec = AbelianExtensionSpec::from_nilsoliton(&l.alg, g, a)?;
    let rule = match rule {
        AMetricChoice::TraceOfProduct => AbelianMetricRule::TraceOfProduct,
        AMetricChoice::ProductOfTraces => AbelianMetricRule::ProductOfTraces,
    };
    let res = extend_abelian(&spec, rule)?;
    let doc = document_of(&res.assembled.algebra, Some(&res.assembled.metric));
    let result = json!({
        "dim": res.assembled.algebra.dim(),
        "einstein_constant": res.einstein_constant,
        "deviation": res.deviation,
        "einstein": einstein_check(&res.ricci, 1e-8),
        "ricci_spectrum": res.ricci.spectrum,
        "document": serde_json::to_value(&doc).expect("document serializes"),
    });
    let lines = vec![
        format!(
            "extension of dimension {}: c = {:.10}, deviation {:.3e}",
            res.assembled.algebra.dim(),
            res.einstein_constant,
            res.deviation
        ),
    ];
    Ok(Report::new(true, result, lines))
}

fn extend_semisimple_cmd(input: &str, rule: AlphaChoice) -> Run {
    let spec = catalog::semisimple_spec(input).ok_or_else(|| {
        Failure::input(format!(
            "no semisimple extension data for {input} (known: sl2-iwasawa-ext, sl2-times-ch2)"
        ))
    })?;
    let rule = match rule {
        AlphaChoice::KillingNormalized => AlphaRule::KillingNormalized,
        AlphaChoice::Unhalved => AlphaRule::Unhalved,
    };
    let res = extend_semisimple(&spec, rule)?;
    let s2 = &res.blocks.last().expect("s2 block").1;
    let p: Vec<usize> = res.blocks[..res.blocks.len() - 1].iter().flat_map(|b| b.1.clone()).collect();
    let cross = res.ricci.block(&p, s2).amax();
    let result = json!({
        "betas": res.betas,
        "alphas": res.alphas,
        "einstein_constant": res.einstein_constant,
        "deviation": res.deviation,
        "einstein": einstein_check(&res.ricci, 1e-6),
        "cross_block": cross,
        "ricci_spectrum": res.ricci.spectrum,
        "metric": matrix(&res.assembled.metric),
        "k": res.assembled.k_indices,
        "q": res.assembled.q_indices,
    });
    let lines = vec![
        format!("beta = {}, alpha = {}", fmt_list(&res.betas), fmt_list(&res.alphas)),
        format!(
            "c = {:.10}, deviation {:.3e}, cross block {:.3e}",
            res.einstein_constant, res.deviation, cross
        ),
    ];
    Ok(Report::new(true, result, lines))
}

fn max_diff(a: &RealAlgebra, b: &RealAlgebra) -> f64 {
    a.dense().iter().zip(b.dense()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn standard_modification(l: &Loaded, steps: usize) -> Run {
    if steps == 0 {
        return Err(Failure::input("--steps must be positive"));
    }
    let g = full_metric(l)?;
    let chain = iterate_standard_modification(&l.alg, &g, steps)?;
    let stable = (steps >= 3).then(|| max_diff(&chain[steps - 2].algebra, &chain[steps - 1].algebra));
    let step_json: Vec<Value> = chain
        .iter()
        .map(|s| {
            json!({
                "skew_dim": s.skew_dim,
                "max_change": s.max_change,
                "unchanged": s.unchanged,
                "closure_residual": s.closure_residual,
            })
        })
        .collect();
    let last = &chain[steps - 1].algebra;
    let result = json!({
        "steps": step_json,
        "last_two_differ_by": stable,
        "stable": stable.map(|d| d < 1e-10),
        "document": serde_json::to_value(document_of(last, None)).expect("document serializes"),
    });
    let mut lines: Vec<String> = chain
        .iter()
        .enumerate()
        .map(|(i, s)| {
            format!(
                "step {}: dim Der_skew = {}, max change {:.3e}{}",
                i + 1,
                s.skew_dim,
                s.max_change,
                if s.unchanged { " (unchanged)" } else { "" }
            )
        })
        .collect();
    if let Some(d) = stable {
        lines.push(format!("last two steps differ by {d:.3e}"));
    }
    Ok(Report::new(true, result, lines))
}

fn nilpotent_only(l: &Loaded) -> std::result::Result<(), Failure> {
    if l.alg.is_nilpotent() {
        Ok(())
    } else {
        Err(Failure::input("g_phi is defined for nilpotent algebras"))
    }
}

fn g_phi(l: &Loaded) -> Run {
    nilpotent_only(l)?;
    let phi = pre_einstein(&l.alg)?;
    let data = build_g_phi(&l.alg, &phi)?;
    let (stab, der) = laws::stabilizer_law(&l.alg)?;
    let result = json!({
        "dim": data.dim(),
        "torus_dim": data.torus_basis.len(),
        "eigenvalues": data.eigenvalues.iter().map(format_rational).collect::<Vec<_>>(),
        "torus_basis": data.torus_basis.iter().map(|t| t.diagonal().iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>(),
        "stabilizer_dim": stab,
        "derivations_in_g_phi": der,
        "agrees": stab == der,
    });
    let lines = vec![
        format!("dim g_phi = {}, torus dimension {}", data.dim(), data.torus_basis.len()),
        format!("stabilizer dimension {stab} (derivation count {der})"),
    ];
    Ok(Report::new(stab == der, result, lines))
}

fn torus(l: &Loaded) -> Run {
    nilpotent_only(l)?;
    let phi = pre_einstein(&l.alg)?;
    let data = build_g_phi(&l.alg, &phi)?;
    let res = torus_closed(&data.torus_problem())?;
    let verdict = match res.verdict {
        Verdict::Closed => "closed",
        Verdict::NotClosed => "not-closed",
        Verdict::Undecided => "undecided",
    };
    let destabilizer = res.destabilizer.as_ref().map(|d| {
        json!({
            "direction": d.direction,
            "diagonal": d.diagonal,
            "pairings": d.pairings,
            "limit_norm": d.limit_norm,
            "verified": d.verified,
            "monotone": d.monotone,
            "flow": d.flow,
        })
    });
    let result = json!({
        "verdict": verdict,
        "closed": res.closed,
        "entries": res.entries,
        "weights": res.integer_weights.as_ref().map(|w| json!(w)).unwrap_or_else(|| json!(res.weights)),
        "weight_set": res.weight_set(),
        "interior_slack": res.interior_slack,
        "membership": res.membership,
        "destabilizer": destabilizer,
    });
    let mut lines = vec![format!(
        "torus orbit: {verdict} ({} support entries, {} distinct weights)",
        res.entries.len(),
        res.weight_set().len()
    )];
    if let Some(d) = &res.destabilizer {
        lines.push(format!(
            "destabilizer {}: verified {}, monotone {}",
            fmt_list(&d.direction),
            d.verified,
            d.monotone
        ));
    }
    Ok(Report::new(res.verdict == Verdict::Closed, result, lines))
}

fn catalog_cmd(action: &CatalogAction) -> Run {
    match action {
        CatalogAction::List => {
            let entries = catalog::entries();
            let result = Value::from(
                entries
                    .iter()
                    .map(|e| json!({"name": e.name, "dim": e.document.dim, "description": e.description}))
                    .collect::<Vec<_>>(),
            );
            let lines = entries
                .iter()
                .map(|e| format!("{:<16} {:>3}  {}", e.name, e.document.dim, e.description))
                .collect();
            Ok(Report::new(true, result, lines))
        }
        CatalogAction::Show { name } => {
            let entry = catalog::find(name).ok_or_else(|| {
                Failure::input(format!(
                    "unknown catalog entry: {name} (known: {})",
                    catalog::names().join(", ")
                ))
            })?;
            let result = serde_json::to_value(&entry).expect("entry serializes");
            Ok(Report::new(true, result, vec![entry.document.to_json()]))
        }
    }
}

/// Convenience for callers holding an algebra rather than a document.
pub fn document_for(alg: &LieAlgebra<solvmetric::Rational>, metric: &DMatrix<f64>) -> AlgebraDocument {
    AlgebraDocument::from_algebra(alg).with_metric(metric)
}
