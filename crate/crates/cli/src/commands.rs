//! The four subcommands. Each loads and validates all inputs first, then runs,
//! then writes one report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use germforge::curvature::{riemann, LeviCivitaField};
use germforge::fields::germ_file::{GermFile, GermKind};
use germforge::fields::{ConnectionField, MetricField, PolynomialField, StructureKind};
use germforge::fixtures::random_ball_points;
use germforge::geodesics::{
    completeness_probe, lemma_check, Completeness, GeodesicOptions, GeodesicStatus, Geometry, LemmaReport, LemmaSpec,
    ProbeSpec, ProbeSummary, Scenario,
};
use germforge::identities::Identity;
use germforge::jets::MAX_ORDER;
use germforge::models::{realize_into_host, realize_para_kahler, realize_riemannian, CurvatureModel, Host};
use germforge::transplant::{
    normalize_connection, normalize_metric, normalize_pair, transplant_almost_complex, transplant_almost_hermitian,
    transplant_connection, transplant_kahler, transplant_metric, transplant_weyl, weyl_connection, Check, KahlerGerm,
    TransplantOptions, TransplantResult,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::inputs::{self, parse_structure, Structures};
use crate::{Common, Failure, Format, SCHEMA_VERSION};

const REALIZE_TOL: f64 = 1e-9;
const RIEMANNIAN_TOL: f64 = 1e-10;

#[derive(Serialize)]
struct Envelope<'a, R: Serialize> {
    schema_version: u32,
    command: &'a str,
    parameters: Value,
    passed: bool,
    report: R,
}

fn input_err(e: impl std::fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

fn fmt_num(v: f64) -> String {
    format!("{v:e}")
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Write the report in the requested format and pass the verdict through.
fn emit<R: Serialize>(c: &Common, command: &str, parameters: Value, passed: bool, report: R, csv: String) -> Result<bool, Failure> {
    let text = match c.format {
        Format::Json => {
            let env = Envelope { schema_version: SCHEMA_VERSION, command, parameters, passed, report };
            serde_json::to_string_pretty(&env).map_err(input_err)? + "\n"
        }
        Format::Csv => csv,
    };
    write_text(c.out.as_deref(), &text)?;
    Ok(passed)
}

fn checks_csv(checks: &[Check]) -> String {
    let mut s = String::from("name,value,tolerance,passed\n");
    for ch in checks {
        let _ = writeln!(s, "{},{},{},{}", ch.name, fmt_num(ch.value), fmt_num(ch.tolerance), ch.passed);
    }
    s
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}.json"))
}

fn write_germ(path: &Path, kind: GermKind, field: &dyn germforge::fields::Field, sig: Option<(usize, usize)>, st: Option<StructureKind>, degree: usize) -> Result<(), Failure> {
    let m = field.dim();
    let poly = PolynomialField::taylor(field, &vec![0.0; m], degree)?;
    GermFile::from_field(kind, &poly, sig, st)
        .write(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------- verify

pub fn verify(name: &str, c: &Common) -> Result<bool, Failure> {
    let identity: Identity = name.parse().map_err(input_err)?;
    let s = inputs::load(&c.input, c.seed, c, "input")?;
    let g = s.require_metric("input")?;
    let m = g.dim();
    if identity.needs_structure() && s.endo.is_none() {
        let why = if m % 2 == 1 { format!("; the input is {m}-dimensional") } else { String::new() };
        return Err(Failure::Input(format!(
            "precondition failed: the {identity} identity needs an almost Hermitian structure (metric and J){why}"
        )));
    }
    let tolerance = c.tolerance.unwrap_or(identity.default_tolerance());
    let radius = c.radius.unwrap_or(1.0);
    let points = random_ball_points(c.seed, m, radius, c.points);
    let report = germforge::identities::verify(identity, g, s.endo.as_ref(), &points, tolerance)?;
    let params = json!({
        "identity": identity.name(),
        "input": c.input,
        "points": c.points,
        "radius": radius,
        "seed": c.seed,
        "tolerance": tolerance,
    });
    let csv = report.to_csv();
    let passed = report.passed;
    emit(c, "verify", params, passed, report, csv)
}

// ---------------------------------------------------------------- transplant

fn connection_of(s: &Structures, role: &str) -> Result<ConnectionField, Failure> {
    if let Some(conn) = &s.connection {
        return Ok(conn.clone());
    }
    let g = s.require_metric(role)?;
    if let Some(w) = &s.one_form {
        return Ok(weyl_connection(g, w)?);
    }
    Ok(ConnectionField::new(LeviCivitaField::shared(g.field.clone())?)?)
}

fn kahler_germ(s: &Structures, role: &str, default: StructureKind) -> Result<KahlerGerm, Failure> {
    let g = s.require_metric(role)?;
    let poly = s
        .metric_poly
        .clone()
        .ok_or_else(|| Failure::Input(format!("{role}: Kähler transplants need a polynomial metric (germ file or builtin)")))?;
    let kind = s.endo.as_ref().map_or(default, |j| j.kind);
    Ok(KahlerGerm::new(poly, g.signature, kind)?)
}

fn maybe_normalize_metric(g: &MetricField, on: bool) -> Result<MetricField, Failure> {
    Ok(if on { normalize_metric(g)?.germ } else { g.clone() })
}

pub fn transplant(kind: &str, c: &Common) -> Result<bool, Failure> {
    let germ = inputs::load(&c.germ, c.seed, c, "germ")?;
    let host = inputs::load(&c.host, c.seed.wrapping_add(1), c, "host")?;
    if let (Some(a), Some(b)) = (germ.dim(), host.dim()) {
        if a != b {
            return Err(Failure::Input(format!("germ is {a}-dimensional but host is {b}-dimensional")));
        }
    }
    let r = c.radius.unwrap_or(0.1);
    let opts = TransplantOptions { samples: c.samples.unwrap_or(TransplantOptions::default().samples), ..Default::default() };
    let structure = parse_structure(&c.structure)?;
    let result: TransplantResult = match kind {
        "connection" => {
            let mut a = connection_of(&germ, "germ")?;
            let mut b = connection_of(&host, "host")?;
            if c.normalize {
                a = normalize_connection(&a)?.germ;
                b = normalize_connection(&b)?.germ;
            }
            transplant_connection(&a, &b, r, &opts)?
        }
        "metric" => {
            let a = maybe_normalize_metric(germ.require_metric("germ")?, c.normalize)?;
            let b = maybe_normalize_metric(host.require_metric("host")?, c.normalize)?;
            transplant_metric(&a, &b, r, &opts)?
        }
        "almost-complex" => transplant_almost_complex(germ.require_endo("germ")?, host.require_endo("host")?, r, &opts)?,
        "almost-hermitian" => {
            let pair = |s: &Structures, role: &str| -> Result<(MetricField, germforge::fields::EndoField), Failure> {
                let (g, j) = (s.require_metric(role)?.clone(), s.require_endo(role)?.clone());
                Ok(if c.normalize { normalize_pair(&g, &j)?.germ } else { (g, j) })
            };
            let (g1, j1) = pair(&germ, "germ")?;
            let (g2, j2) = pair(&host, "host")?;
            transplant_almost_hermitian((&g1, &j1), (&g2, &j2), r, false, &opts)?
        }
        "kahler" => transplant_kahler(&kahler_germ(&germ, "germ", structure)?, &kahler_germ(&host, "host", structure)?, r, &opts)?,
        "weyl" => {
            let (g1, c1) = (germ.require_metric("germ")?, connection_of(&germ, "germ")?);
            let (g2, c2) = (host.require_metric("host")?, connection_of(&host, "host")?);
            transplant_weyl((g1, &c1), (g2, &c2), r, &opts)?
        }
        _ => {
            return Err(Failure::Input(format!(
                "unknown transplant kind {kind:?} (expected connection, metric, almost-complex, almost-hermitian, kahler or weyl)"
            )))
        }
    };
    if let Some(path) = &c.germ_out {
        write_outputs(path, &result)?;
    }
    let params = json!({
        "kind": kind,
        "germ": c.germ,
        "host": c.host,
        "radius": r,
        "samples": opts.samples,
        "seed": c.seed,
        "normalize": c.normalize,
    });
    let passed = result.report.passed();
    let csv = checks_csv(&result.report.checks);
    emit(c, "transplant", params, passed, &result.report, csv)
}

/// The first output goes to `path`, further ones next to it (`<stem>.endo.json`, ...).
fn write_outputs(path: &Path, result: &TransplantResult) -> Result<(), Failure> {
    let out = &result.output;
    let mut first = true;
    let mut target = |suffix: &str| {
        let p = if first { path.to_path_buf() } else { sibling(path, suffix) };
        first = false;
        p
    };
    if let Some(g) = &out.metric {
        write_germ(&target("metric"), GermKind::Metric, g.field.as_ref(), Some(g.signature), None, MAX_ORDER)?;
    }
    if let Some(j) = &out.endo {
        write_germ(&target("endo"), GermKind::Endo, j.field.as_ref(), None, Some(j.kind), MAX_ORDER)?;
    }
    if let Some(conn) = &out.connection {
        write_germ(&target("connection"), GermKind::Connection, conn.field.as_ref(), None, None, MAX_ORDER - 1)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- realize

#[derive(Serialize)]
struct ThetaEntry {
    index: [usize; 4],
    value: f64,
}

#[derive(Serialize, Default)]
struct RealizeReport {
    model_checks: Vec<germforge::models::SymmetryCheck>,
    curvature_defect: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    solve_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kernel_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    compatibility: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    closedness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<Vec<ThetaEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    host_curvature_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transplant: Option<germforge::transplant::TransplantReport>,
    checks: Vec<Check>,
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |s, (x, y)| s.max((x - y).abs()))
}

pub fn realize(kind: &str, c: &Common) -> Result<bool, Failure> {
    let spec = c.model.as_deref().ok_or_else(|| Failure::Input("realize needs --model FILE or --model builtin:NAME".into()))?;
    let model: CurvatureModel = inputs::load_model(spec, c.seed, c)?;
    let validation = model.validate();
    if !validation.passed() {
        return Err(Failure::Input(format!("invalid model: violates {}", validation.failures().join(", "))));
    }
    let para = match kind {
        "riemannian" => false,
        "para-kahler" => true,
        _ => return Err(Failure::Input(format!("unknown realization kind {kind:?} (expected riemannian or para-kahler)"))),
    };
    if para != model.j.is_some() {
        return Err(Failure::Input(if para {
            "para-kahler realization needs a model with a \"J\" structure".into()
        } else {
            "the model carries a para-complex structure; use realize para-kahler".into()
        }));
    }
    let host = if c.host.is_empty() { None } else { Some(inputs::load(&c.host, c.seed.wrapping_add(1), c, "host")?) };
    let mut report = RealizeReport { model_checks: validation.checks, ..Default::default() };
    let m = model.dim;
    if para {
        let real = realize_para_kahler(&model)?;
        report.curvature_defect = real.curvature_defect;
        report.solve_residual = Some(real.solve_residual);
        report.rank = Some(real.rank);
        report.kernel_dim = Some(real.kernel_dim);
        report.compatibility = Some(real.compatibility);
        report.closedness = Some(real.closedness);
        report.theta = Some(
            germforge::jets::index_tuples(m, 4)
                .zip(&real.theta.components)
                .filter(|(_, v)| **v != 0.0)
                .map(|(t, &value)| ThetaEntry { index: [t[0], t[1], t[2], t[3]], value })
                .collect(),
        );
        report.checks.push(Check::at_most("solve_residual", real.solve_residual, REALIZE_TOL));
        report.checks.push(Check::at_most("closedness", real.closedness, REALIZE_TOL));
        report.checks.push(Check::at_most("compatibility", real.compatibility, REALIZE_TOL));
        report.checks.push(Check::at_most("curvature_at_origin", real.curvature_defect, REALIZE_TOL));
        if let Some(path) = &c.germ_out {
            let sig = Some(model.signature);
            GermFile::from_field(GermKind::Metric, &real.polynomial, sig, None)
                .write(path)
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        }
    } else {
        let g = realize_riemannian(&model)?;
        let r0 = riemann(&g, &vec![0.0; m])?;
        report.curvature_defect = max_diff(&r0.components, &model.a);
        report.checks.push(Check::at_most("curvature_at_origin", report.curvature_defect, RIEMANNIAN_TOL));
        if let Some(path) = &c.germ_out {
            write_germ(path, GermKind::Metric, g.field.as_ref(), Some(model.signature), None, 2)?;
        }
    }
    let r = c.radius.unwrap_or(0.1);
    if let Some(h) = &host {
        let target = if para {
            Host::ParaKahler(kahler_germ(h, "host", StructureKind::Para)?)
        } else {
            Host::Metric(h.require_metric("host")?.clone())
        };
        let opts = TransplantOptions { samples: c.samples.unwrap_or(TransplantOptions::default().samples), ..Default::default() };
        let hr = realize_into_host(&model, &target, r, &opts)?;
        report.host_curvature_defect = Some(hr.curvature_defect);
        for ch in &hr.result.report.checks {
            report.checks.push(Check { name: format!("host.{}", ch.name), ..ch.clone() });
        }
        report.checks.push(Check::flag("host.agreement_inner", hr.result.report.agreement_inner));
        report.checks.push(Check::flag("host.agreement_outer", hr.result.report.agreement_outer));
        report.transplant = Some(hr.result.report);
    }
    let params = json!({
        "kind": kind,
        "model": spec,
        "host": c.host,
        "radius": r,
        "seed": c.seed,
    });
    let passed = report.checks.iter().all(|ch| ch.passed);
    let csv = checks_csv(&report.checks);
    emit(c, "realize", params, passed, report, csv)
}

// ---------------------------------------------------------------- geodesic

/// Scenario file: a built-in scenario, or germ files with probe settings.
/// Relative paths are resolved against the scenario file's directory.
#[derive(Deserialize, Default, Debug)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    scenario: Option<String>,
    #[serde(default)]
    germ: Vec<String>,
    #[serde(default)]
    expect_incomplete: Option<bool>,
    #[serde(default)]
    basepoints: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    directions: Option<usize>,
    #[serde(default)]
    t_max: Option<f64>,
    #[serde(default)]
    flat_outside: Option<f64>,
    #[serde(default)]
    epsilon: Option<f64>,
    #[serde(default)]
    seed: Option<u64>,
}

const DEFAULT_T_MAX: f64 = 100.0;
const DEFAULT_DIRECTIONS: usize = 8;

pub fn geodesic(scenario: &str, c: &Common) -> Result<bool, Failure> {
    let file = if scenario.ends_with(".json") || Path::new(scenario).is_file() {
        let path = Path::new(scenario);
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        let mut f: ScenarioFile = serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        for g in &mut f.germ {
            if !g.starts_with("builtin:") && Path::new(g).is_relative() {
                *g = dir.join(&*g).to_string_lossy().into_owned();
            }
        }
        f
    } else {
        ScenarioFile { scenario: Some(scenario.to_string()), ..Default::default() }
    };
    let seed = file.seed.unwrap_or(c.seed);
    match file.scenario.as_deref() {
        Some("lemma") | Some("lemma-check") => lemma(&file, seed, c),
        Some(name) => {
            if !file.germ.is_empty() {
                return Err(Failure::Input("a scenario file names either a built-in scenario or germ files, not both".into()));
            }
            let sc: Scenario = name.parse().map_err(input_err)?;
            let expect = file.expect_incomplete.unwrap_or(sc.expected_incomplete());
            let basepoints = file.basepoints.clone().unwrap_or_else(|| sc.basepoints());
            probe(sc.name(), &sc.geometry(), basepoints, expect, &file, seed, c)
        }
        None => {
            let s = inputs::load(&file.germ, seed, c, "germ")?;
            let geo = match (&s.metric, &s.connection) {
                (Some(g), None) => Geometry::Metric(g.clone()),
                (None, Some(conn)) => Geometry::Connection(conn.clone()),
                _ => return Err(Failure::Input("a geodesic scenario needs exactly one metric or one connection".into())),
            };
            let m = geo.dim();
            let basepoints = file.basepoints.clone().unwrap_or_else(|| vec![vec![0.0; m]]);
            probe("file", &geo, basepoints, file.expect_incomplete.unwrap_or(false), &file, seed, c)
        }
    }
}

fn probe(
    name: &str,
    geo: &Geometry,
    basepoints: Vec<Vec<f64>>,
    expect_incomplete: bool,
    file: &ScenarioFile,
    seed: u64,
    c: &Common,
) -> Result<bool, Failure> {
    let m = geo.dim();
    if let Some(b) = basepoints.iter().find(|b| b.len() != m) {
        return Err(Failure::Input(format!("basepoint {b:?} is not {m}-dimensional")));
    }
    let t_max = c.t_max.or(file.t_max).unwrap_or(DEFAULT_T_MAX);
    let directions = c.samples.or(file.directions).unwrap_or(DEFAULT_DIRECTIONS);
    let options = GeodesicOptions { t_max, record: c.trajectories.is_some(), ..Default::default() };
    if let Some(tol) = c.tolerance {
        if !(tol > 0.0) {
            return Err(Failure::Input(format!("--tolerance must be positive, got {tol}")));
        }
    }
    let options = GeodesicOptions { tolerance: c.tolerance.unwrap_or(options.tolerance), ..options };
    let spec = ProbeSpec { basepoints, directions, seed, options, flat_outside: file.flat_outside };
    let summary = completeness_probe(geo, &spec);
    if let Some(dir) = &c.trajectories {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
        for (k, s) in summary.samples.iter().enumerate() {
            if let Some(res) = &s.result {
                let p = dir.join(format!("trajectory_{k:04}.csv"));
                std::fs::write(&p, res.to_csv()).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
            }
        }
    }
    let passed = if expect_incomplete {
        summary.completeness == Completeness::IncompleteEvidence
    } else {
        matches!(summary.completeness, Completeness::CompleteUpTo { .. })
    };
    let params = json!({
        "scenario": name,
        "expect_incomplete": expect_incomplete,
        "t_max": t_max,
        "directions": directions,
        "seed": seed,
        "tolerance": spec.options.tolerance,
        "flat_outside": file.flat_outside,
    });
    let csv = probe_csv(m, &summary);
    emit(c, "geodesic", params, passed, summary, csv)
}

fn probe_csv(m: usize, summary: &ProbeSummary) -> String {
    let mut head = vec!["sample".to_string()];
    head.extend((0..m).map(|i| format!("x{i}")));
    head.extend((0..m).map(|i| format!("v{i}")));
    head.extend(["status", "time", "max_speed", "steps", "error"].map(String::from));
    let mut s = head.join(",") + "\n";
    for (k, smp) in summary.samples.iter().enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(smp.basepoint.iter().map(|v| fmt_num(*v)));
        row.extend(smp.direction.iter().map(|v| fmt_num(*v)));
        match &smp.result {
            Some(r) => {
                let (status, time) = match &r.status {
                    GeodesicStatus::ReachedHorizon { t_max } => ("reached_horizon", *t_max),
                    GeodesicStatus::EscapedBall { time, .. } => ("escaped_ball", *time),
                    GeodesicStatus::Blowup { time, .. } => ("blowup", *time),
                };
                row.extend([status.to_string(), fmt_num(time), fmt_num(r.max_speed), r.steps.to_string(), String::new()]);
            }
            None => {
                let err = smp.error.clone().unwrap_or_default().replace([',', '\n'], ";");
                row.extend(["error".to_string(), String::new(), String::new(), String::new(), err]);
            }
        }
        s += &(row.join(",") + "\n");
    }
    s
}

fn lemma(file: &ScenarioFile, seed: u64, c: &Common) -> Result<bool, Failure> {
    let specs = if !file.germ.is_empty() {
        file.germ.clone()
    } else if !c.input.is_empty() {
        c.input.clone()
    } else {
        vec!["builtin:connection".to_string()]
    };
    let s = inputs::load(&specs, seed, c, "input")?;
    let germ = match (&s.connection, &s.metric) {
        (Some(conn), _) => conn.clone(),
        (None, Some(g)) => ConnectionField::new(LeviCivitaField::shared(g.field.clone())?)?,
        _ => return Err(Failure::Input("the lemma check needs a connection or metric germ".into())),
    };
    let epsilon = c.epsilon.or(file.epsilon).unwrap_or(0.05);
    let defaults = LemmaSpec::default();
    let spec = LemmaSpec {
        samples: c.samples.or(file.directions).unwrap_or(defaults.samples),
        seed,
        t_max: c.t_max.or(file.t_max).unwrap_or(defaults.t_max),
        tolerance: c.tolerance.unwrap_or(defaults.tolerance),
    };
    let report: LemmaReport = lemma_check(&germ, epsilon, &spec)?;
    let params = json!({
        "scenario": "lemma",
        "germ": specs,
        "epsilon": epsilon,
        "samples": spec.samples,
        "t_max": spec.t_max,
        "tolerance": spec.tolerance,
        "seed": seed,
    });
    let m = germ.dim();
    let mut head = vec!["sample".to_string()];
    head.extend((0..m).map(|i| format!("x{i}")));
    head.extend((0..m).map(|i| format!("v{i}")));
    head.extend(["exited", "exit_time", "max_speed", "straight_deviation"].map(String::from));
    let mut csv = head.join(",") + "\n";
    for (k, smp) in report.samples.iter().enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(smp.basepoint.iter().chain(&smp.direction).map(|v| fmt_num(*v)));
        row.push(smp.exited.to_string());
        row.push(smp.exit_time.map(fmt_num).unwrap_or_default());
        row.push(fmt_num(smp.max_speed));
        row.push(fmt_num(smp.straight_deviation));
        csv += &(row.join(",") + "\n");
    }
    let passed = report.passed;
    emit(c, "geodesic", params, passed, report, csv)
}
