//! Acceptance suite: one line per criterion, non-zero exit if any fails.

mod common;

use std::sync::Arc;
use std::time::Instant;

use germforge::curvature::{kahler_criteria, riemann, LeviCivitaField};
use germforge::fields::norms::halton_shell;
use germforge::fields::{ConnectionField, EndoField, MetricField, OneFormField, PolynomialField, StructureKind};
use germforge::fixtures::{self, random_ball_points, random_polynomial, rng};
use germforge::geodesics::{
    completeness_probe, integrate_geodesic, lemma_check, GeodesicOptions, GeodesicStatus, LemmaSpec, ProbeSpec, Scenario,
};
use germforge::identities::{verify, Identity, DEFAULT_JOIN_SIGN};
use germforge::jets::Variance::Co;
use germforge::models::{
    curvature_of_theta, kappa_plus, null_para_frame, para_kahler_spaces, para_model_space, random_para_kahler_model,
    random_riemannian_model, realize_para_kahler, realize_riemannian, xi, CurvatureModel, ThetaTensor,
};
use germforge::transplant::{
    transplant_almost_complex, transplant_almost_hermitian, transplant_connection, transplant_kahler, transplant_metric,
    transplant_weyl, weyl_connection, KahlerGerm, TransplantOptions, TransplantReport,
};
use germforge::Result;

const COMPLEX: StructureKind = StructureKind::Complex;
const PARA: StructureKind = StructureKind::Para;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn identity_max(id: Identity, pairs: &[(MetricField, Option<EndoField>)], points: usize) -> Result<f64> {
    let mut out = 0.0f64;
    for (seed, (g, j)) in pairs.iter().enumerate() {
        let pts = random_ball_points(seed as u64, 4, 1.0, points);
        out = out.max(verify(id, g, j.as_ref(), &pts, 0.0)?.max_residual);
    }
    Ok(out)
}

fn kahler_fixtures(n: u64) -> Result<Vec<(MetricField, Option<EndoField>)>> {
    (1..=n).map(|s| fixtures::kahler_product(s, COMPLEX, 0, 0.3).map(|(g, j)| (g, Some(j)))).collect()
}

fn hermitian_fixtures(n: u64) -> Result<Vec<(MetricField, Option<EndoField>)>> {
    (0..n).map(|s| fixtures::random_almost_hermitian(s, 4, 0, COMPLEX, 0.1).map(|(g, j)| (g, Some(j)))).collect()
}

fn berger() -> Result<Outcome> {
    let start = Instant::now();
    let metrics: Vec<_> = (0..10).map(|s| fixtures::random_metric(s, (0, 4), 4, 0.1).map(|g| (g, None))).collect::<Result<_>>()?;
    let r = identity_max(Identity::Berger, &metrics, 10)?;
    let secs = start.elapsed().as_secs_f64();
    outcome(r <= 1e-8 && secs < 10.0, format!("max relative residual {r:.2e} over 10 metrics x 10 points in {secs:.2} s"))
}

fn gray() -> Result<Outcome> {
    let h = identity_max(Identity::Gray, &hermitian_fixtures(10)?, 10)?;
    let k = identity_max(Identity::Gray, &kahler_fixtures(3)?, 10)?;
    outcome(h <= 1e-7 && k <= 1e-9, format!("almost Hermitian {h:.2e} (<= 1e-7), Kähler {k:.2e} (<= 1e-9)"))
}

fn kahler_identities() -> Result<Outcome> {
    let fx = kahler_fixtures(3)?;
    let curv = worst(fx.iter().map(|(g, _)| worst(riemann(g, &[0.3, -0.2, 0.1, 0.4]).unwrap().components)));
    let r = identity_max(Identity::Kahler, &fx, 10)?;
    outcome(r <= 1e-8 && curv > 1e-3, format!("max residual {r:.2e} on 3 product fixtures (max |R| {curv:.2e})"))
}

fn pontrjagin_chern() -> Result<Outcome> {
    let k = kahler_fixtures(3)?;
    let h = hermitian_fixtures(5)?;
    let mut parts = Vec::new();
    let mut ok = true;
    for id in [Identity::Pontrjagin, Identity::Chern] {
        let rk = identity_max(id, &k, 5)?;
        let rh = identity_max(id, &h, 5)?;
        ok &= rk <= 1e-7 && rh <= 1e-6;
        parts.push(format!("{id}: Kähler {rk:.2e}, almost Hermitian {rh:.2e}"));
    }
    outcome(ok, format!("{}; joining sign {DEFAULT_JOIN_SIGN:?} on every fixture", parts.join("; ")))
}

fn riemannian_realization() -> Result<Outcome> {
    let start = Instant::now();
    let sigs = [(0, 3), (1, 2), (2, 1), (0, 4), (1, 3), (2, 2)];
    let mut err = 0.0f64;
    for seed in 0..20u64 {
        let model = random_riemannian_model(seed, sigs[seed as usize % sigs.len()]);
        let g = realize_riemannian(&model)?;
        let r = riemann(&g, &vec![0.0; model.dim])?;
        err = err.max(worst(r.components.iter().zip(&model.a).map(|(a, b)| (a - b).abs())));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(err <= 1e-10 && secs < 5.0, format!("max |R(0) - A| {err:.2e} over 20 models in dims 3 and 4, {secs:.2} s"))
}

fn half_square(m: usize, a: usize, b: usize) -> Vec<f64> {
    let mut t = vec![0.0; m.pow(4)];
    for (i, j) in [(a, b), (b, a)] {
        for (k, l) in [(a, b), (b, a)] {
            t[((i * m + j) * m + k) * m + l] = 0.5;
        }
    }
    t
}

fn para_kahler_realization() -> Result<Outcome> {
    let (eps, j) = null_para_frame(4);
    let spaces = para_kahler_spaces(4, &j)?;
    let dim = para_model_space(4, &j).ncols();
    let (mut res, mut closed, mut curv) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..10 {
        let real = realize_para_kahler(&random_para_kahler_model(seed, 4)?)?;
        res = res.max(real.solve_residual);
        closed = closed.max(real.closedness);
        curv = curv.max(real.curvature_defect);
    }
    let theta = ThetaTensor::new(j.clone(), half_square(4, 0, 2))?;
    let target = xi(4, 0, 2, 0, 2);
    let exact = curvature_of_theta(&theta) == target && kappa_plus(&theta).iter().all(|v| *v == 0.0);
    let xi_real = realize_para_kahler(&CurvatureModel::new(eps, (2, 2), target, Some(j))?)?;
    let ok = dim == 9 && spaces.rank_on_kernel == 9 && res <= 1e-9 && closed <= 1e-9 && curv <= 1e-9 && exact
        && xi_real.curvature_defect <= 1e-12;
    outcome(
        ok,
        format!(
            "model space dim {dim}, rank on kernel {}; residual {res:.2e}, |dΩ| {closed:.2e}, curvature {curv:.2e}; xi1313 exact: {exact}",
            spaces.rank_on_kernel
        ),
    )
}

fn one_form(seed: u64, m: usize, a: f64) -> Result<OneFormField> {
    let mut r = rng(seed);
    let comps = (0..m).map(|_| random_polynomial(&mut r, m, 0, 2, a)).collect();
    OneFormField::new(Arc::new(PolynomialField::new(m, &[Co], comps)?))
}

fn transplants() -> Result<Outcome> {
    let o = TransplantOptions { samples: 80, agreement_samples: 30, max_retries: 8 };
    let mut failed = Vec::new();
    let mut note = |name: &str, rep: &TransplantReport| {
        if !rep.passed() {
            failed.push(name.to_string());
        }
    };
    let g1 = fixtures::random_metric(21, (1, 2), 3, 0.3)?;
    let g2 = fixtures::random_metric(22, (1, 2), 3, 0.3)?;
    let a = transplant_metric(&g1, &g2, 0.2, &o)?;
    let b = transplant_metric(&g1, &g2, 0.1, &o)?;
    note("metric", &a.report);
    note("metric r/2", &b.report);
    let metric_ratio = b.report.deviation.c1 / a.report.deviation.c1;

    let c1 = fixtures::random_connection(41, 3, 0.4)?;
    let c2 = fixtures::random_connection(42, 3, 0.4)?;
    note("connection", &transplant_connection(&c1, &c2, 0.2, &o)?.report);

    for kind in [COMPLEX, PARA] {
        let (h1, j1) = fixtures::random_almost_hermitian(61, 4, 2, kind, 0.3)?;
        let (h2, j2) = fixtures::random_almost_hermitian(62, 4, 2, kind, 0.3)?;
        note("almost-complex", &transplant_almost_complex(&j1, &j2, 0.2, &o)?.report);
        note("almost-hermitian", &transplant_almost_hermitian((&h1, &j1), (&h2, &j2), 0.15, false, &o)?.report);
    }

    let mut kahler_ratio = 0.0f64;
    for (kind, p) in [(COMPLEX, 0), (COMPLEX, 2), (PARA, 2)] {
        let germ = KahlerGerm::new(fixtures::kahler_product_polynomial(71, kind, p, 0.4), (p, 4 - p), kind)?;
        let host = KahlerGerm::new(fixtures::kahler_product_polynomial(72, kind, p, 0.4), (p, 4 - p), kind)?;
        let a = transplant_kahler(&germ, &host, 0.2, &o)?;
        let b = transplant_kahler(&germ, &host, 0.1, &o)?;
        note("kahler", &a.report);
        note("kahler r/2", &b.report);
        kahler_ratio = kahler_ratio.max(b.report.deviation.c1 / a.report.deviation.c1);
    }

    let w1 = fixtures::random_metric(81, (0, 3), 3, 0.2)?;
    let w2 = fixtures::random_metric(82, (0, 3), 3, 0.2)?;
    let wc1 = weyl_connection(&w1, &one_form(83, 3, 0.3)?)?;
    let wc2 = weyl_connection(&w2, &one_form(84, 3, 0.3)?)?;
    let wo = TransplantOptions { samples: 60, agreement_samples: 20, max_retries: 8 };
    note("weyl", &transplant_weyl((&w1, &wc1), (&w2, &wc2), 0.1, &wo)?.report);
    let lc = ConnectionField::new(LeviCivitaField::shared(w2.field.clone())?)?;
    note("weyl (Levi-Civita host)", &transplant_weyl((&w1, &wc1), (&w2, &lc), 0.1, &wo)?.report);

    let ok = failed.is_empty() && metric_ratio <= 0.75 && kahler_ratio <= 0.75;
    outcome(
        ok,
        format!(
            "6 kinds; failed postconditions: {}; C1 shrink factor metric {metric_ratio:.3}, Kähler {kahler_ratio:.3}",
            if failed.is_empty() { "none".to_string() } else { failed.join(", ") }
        ),
    )
}

fn first_blowup(sc: Scenario) -> (usize, f64) {
    let spec = ProbeSpec {
        basepoints: sc.basepoints(),
        directions: 8,
        seed: 0,
        options: GeodesicOptions { record: false, ..Default::default() },
        flat_outside: None,
    };
    let s = completeness_probe(&sc.geometry(), &spec);
    let t = s
        .samples
        .iter()
        .filter_map(|p| match p.result.as_ref()?.status {
            GeodesicStatus::Blowup { time, .. } => Some(time.abs()),
            _ => None,
        })
        .fold(f64::INFINITY, f64::min);
    (s.blowup, t)
}

fn geodesics() -> Result<Outcome> {
    let (misner_n, misner_t) = first_blowup(Scenario::Misner);
    let (men_n, men_t) = first_blowup(Scenario::Meneghini);
    let back = integrate_geodesic(
        &Scenario::CircleGamma.geometry(),
        &[0.0],
        &[1.0],
        &GeodesicOptions { t_max: -100.0, record: false, ..Default::default() },
    )?;
    let circle_t = match back.status {
        GeodesicStatus::Blowup { time, .. } => time,
        _ => f64::NAN,
    };
    let germ = fixtures::random_connection(3, 2, 0.8)?;
    let lemma = lemma_check(&germ, 0.05, &LemmaSpec { samples: 200, seed: 1, ..Default::default() })?;
    let complete = lemma.samples.iter().filter(|s| s.exited).count();
    let ok = misner_n > 0
        && misner_t < 100.0
        && men_n > 0
        && men_t < 100.0
        && (circle_t + 1.0).abs() <= 1e-3
        && lemma.passed
        && complete == 200
        && lemma.max_speed <= 2.0 + 1e-6;
    outcome(
        ok,
        format!(
            "Misner t* {misner_t:.3}, Meneghini t* {men_t:.3}, circle t* {circle_t:.6}; lemma at eps 0.05: {complete}/200 exit, max speed {:.4}",
            lemma.max_speed
        ),
    )
}

fn kernel_sanity() -> Result<Outcome> {
    use rand::Rng;
    let mut r = rng(2024);
    let mut fd = 0.0f64;
    let mut n = 0;
    while n < 100 {
        let e = common::Expr::random(&mut r, 3, 4);
        let p: Vec<f64> = (0..3).map(|_| r.gen_range(-1.0..1.0)).collect();
        if e.eval(&p).abs() >= 1e3 {
            continue;
        }
        fd = fd.max(common::finite_difference_error(&e, &p));
        n += 1;
    }
    // three equivalent Kähler conditions: ∇Ω = 0, ∇J = 0, and N_J = 0 with dΩ = 0
    let mut kahler: Vec<(MetricField, EndoField)> = Vec::new();
    for s in 1..=4 {
        kahler.push(fixtures::kahler_product(s, COMPLEX, 0, 0.3)?);
    }
    for s in 5..=7 {
        kahler.push(fixtures::kahler_product(s, COMPLEX, 2, 0.3)?);
    }
    for s in 8..=10 {
        kahler.push(fixtures::kahler_product(s, PARA, 2, 0.3)?);
    }
    let mut other: Vec<(MetricField, EndoField)> = Vec::new();
    for s in 0..5 {
        let (kind, p) = if s % 2 == 0 { (COMPLEX, 0) } else { (PARA, 2) };
        other.push(fixtures::conformal_hermitian(s, 4, p, kind, 0.3)?);
        other.push(fixtures::random_almost_hermitian(s + 10, 4, 0, COMPLEX, 0.3)?);
    }
    let points = halton_shell(4, 0.2, 0.6, 8);
    let verdicts = |g: &MetricField, j: &EndoField| -> Result<[bool; 3]> {
        let mut m = [0.0f64; 3];
        for p in &points {
            let c = kahler_criteria(g, j, p)?;
            m[0] = m[0].max(c.nabla_omega);
            m[1] = m[1].max(c.nabla_j);
            m[2] = m[2].max(c.nijenhuis.max(c.d_omega));
        }
        Ok(m.map(|v| v <= 1e-9))
    };
    let mut agree = 0;
    for (g, j) in &kahler {
        agree += (verdicts(g, j)? == [true; 3]) as usize;
    }
    for (g, j) in &other {
        agree += (verdicts(g, j)? == [false; 3]) as usize;
    }
    outcome(
        fd <= 1e-5 && agree == 20,
        format!("jets vs central differences {fd:.2e} on 100 expressions; Kähler criteria agree on {agree}/20 fixtures"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>); 9] = [
        ("Berger identity", berger),
        ("Gray identity", gray),
        ("Kähler identities", kahler_identities),
        ("Pontrjagin and Chern identities", pontrjagin_chern),
        ("Riemannian realization", riemannian_realization),
        ("para-Kähler realization", para_kahler_realization),
        ("transplantation postconditions", transplants),
        ("geodesics", geodesics),
        ("kernel sanity", kernel_sanity),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (passed, detail) = match run() {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failures += !passed as usize;
        println!(
            "criterion {}: {} {name}: {detail} [{:.2} s]",
            k + 1,
            if passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
