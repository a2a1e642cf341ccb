use std::sync::Arc;

use germforge::curvature::{compatibility_defect, LeviCivitaField};
use germforge::fields::norms::halton_ball;
use germforge::fields::{
    constant_field, eval_at, standard_endomorphism, ConnectionField, EndoField, MetricField, OneFormField,
    PolynomialField, PullbackField, StructureKind, Symmetry,
};
use germforge::fixtures::{self, random_polynomial, rng};
use germforge::jets::Variance::{Co, Contra};
use germforge::poly::Polynomial;
use germforge::transplant::*;

fn opts() -> TransplantOptions {
    TransplantOptions { samples: 80, agreement_samples: 30, max_retries: 8 }
}

fn levi_civita(g: &MetricField) -> ConnectionField {
    ConnectionField::new(LeviCivitaField::shared(g.field.clone()).unwrap()).unwrap()
}

/// Polynomial map `y + (quadratic terms)`, fixing the origin with identity Jacobian.
fn near_identity_map(seed: u64, m: usize, a: f64) -> Vec<Polynomial> {
    let mut r = rng(seed);
    (0..m).map(|i| Polynomial::variable(m, i).add(&random_polynomial(&mut r, m, 2, 2, a))).collect()
}

fn varying_structure(seed: u64, m: usize, kind: StructureKind) -> EndoField {
    let j0 = constant_field(m, &[Co, Contra], standard_endomorphism(m, kind));
    EndoField::new(Arc::new(PullbackField::tensor(j0, near_identity_map(seed, m, 0.3)).unwrap()), kind).unwrap()
}

fn random_torsion_free(seed: u64, m: usize, a: f64) -> ConnectionField {
    let mut r = rng(seed);
    let mut f = PolynomialField::zero(m, &[Co, Co, Contra]);
    for i in 0..m {
        for j in i..m {
            for k in 0..m {
                let p = random_polynomial(&mut r, m, 1, 2, a);
                *f.component_mut(&[i, j, k]) = p.clone();
                *f.component_mut(&[j, i, k]) = p;
            }
        }
    }
    ConnectionField::new(Arc::new(f.with_symmetries(vec![Symmetry::Symmetric(0, 1)]))).unwrap()
}

fn one_form(seed: u64, m: usize, a: f64) -> OneFormField {
    let mut r = rng(seed);
    let comps = (0..m).map(|_| random_polynomial(&mut r, m, 0, 2, a)).collect();
    OneFormField::new(Arc::new(PolynomialField::new(m, &[Co], comps).unwrap())).unwrap()
}

#[test]
fn kahler_weyl_of_conformal_hermitian_pairs_is_parallel() {
    for kind in [StructureKind::Complex, StructureKind::Para] {
        let (g, j) = fixtures::conformal_hermitian(5, 4, 2, kind, 0.3).unwrap();
        let pts = halton_ball(4, 0.5, 12);
        let kw = kahler_weyl_4d(&g, &j, &pts).unwrap();
        assert!(kw.nabla_j <= 1e-8, "{kind:?}: ∇J = {}", kw.nabla_j);
        assert!(kw.weyl_residual <= 1e-9);
    }
}

#[test]
fn kahler_weyl_of_kahler_input_is_levi_civita() {
    let (g, j) = fixtures::kahler_product(2, StructureKind::Complex, 0, 0.3).unwrap();
    let pts = halton_ball(4, 0.5, 8);
    let kw = kahler_weyl_4d(&g, &j, &pts).unwrap();
    for p in &pts {
        assert!(kw.lee.at(p, 0).unwrap().max_abs_value() < 1e-12);
        let lc = eval_at(&LeviCivitaField::new(g.field.clone()).unwrap(), p, 0).unwrap();
        assert!(kw.connection.at(p, 0).unwrap().max_abs_diff(&lc) < 1e-12);
    }
}

#[test]
fn kahler_weyl_rejects_other_dimensions() {
    let (g, j) = fixtures::conformal_hermitian(5, 6, 2, StructureKind::Complex, 0.3).unwrap();
    assert!(kahler_weyl_4d(&g, &j, &halton_ball(6, 0.5, 4)).is_err());
}

#[test]
fn weyl_check_recovers_the_one_form() {
    let g = fixtures::random_metric(3, (1, 2), 3, 0.2).unwrap();
    let w0 = one_form(4, 3, 0.3);
    let conn = weyl_connection(&g, &w0).unwrap();
    let pts = halton_ball(3, 0.6, 20);
    let check = weyl_structure_check(&g, &conn, &pts).unwrap();
    assert!(check.residual < 1e-10);
    for p in &pts {
        let got = check.omega.at(p, 0).unwrap();
        assert!(got.max_abs_diff(&w0.at(p, 0).unwrap()) < 1e-10);
    }
    let lc = weyl_structure_check(&g, &levi_civita(&g), &pts).unwrap();
    assert!(lc.residual < 1e-12);
    for p in &pts {
        assert!(lc.omega.at(p, 0).unwrap().max_abs_value() < 1e-12);
    }
    let bad = weyl_structure_check(&g, &random_torsion_free(9, 3, 0.5), &pts).unwrap();
    assert!(bad.residual > 1e-3);
}

#[test]
fn metric_transplant_postconditions_and_shrinkage() {
    for sig in [(0, 3), (1, 2)] {
        let germ = fixtures::random_metric(21, sig, 3, 0.3).unwrap();
        let host = fixtures::random_metric(22, sig, 3, 0.3).unwrap();
        let a = transplant_metric(&germ, &host, 0.2, &opts()).unwrap();
        assert!(a.report.passed(), "{:?}", a.report);
        let b = transplant_metric(&germ, &host, 0.1, &opts()).unwrap();
        assert!(b.report.passed());
        let ratio = b.report.deviation.c1 / a.report.deviation.c1;
        assert!((0.3..=0.75).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn metric_transplant_into_itself_is_the_host() {
    let g = fixtures::random_metric(5, (0, 4), 3, 0.3).unwrap();
    let res = transplant_metric(&g, &g, 0.3, &opts()).unwrap();
    let out = res.output.metric.unwrap();
    for p in halton_ball(4, 0.9, 50) {
        assert!(out.at(&p, 1).unwrap().exactly_equal(&g.at(&p, 1).unwrap()));
    }
    assert_eq!(res.report.deviation.c1, 0.0);
}

#[test]
fn metric_transplant_rejects_mismatched_or_unnormalized_inputs() {
    let a = fixtures::random_metric(1, (1, 1), 2, 0.2).unwrap();
    let b = fixtures::random_metric(2, (0, 2), 2, 0.2).unwrap();
    assert!(matches!(transplant_metric(&a, &b, 0.1, &opts()), Err(germforge::GeomError::SignatureMismatch { .. })));
    let mut raw = PolynomialField::zero(2, &[Co, Co]);
    raw.component_mut(&[0, 0]).add_term(vec![0, 0], 1.0);
    raw.component_mut(&[0, 0]).add_term(vec![1, 0], 0.5);
    raw.component_mut(&[1, 1]).add_term(vec![0, 0], 1.0);
    let raw = MetricField::new(Arc::new(raw), (0, 2)).unwrap();
    assert!(transplant_metric(&raw, &b, 0.1, &opts()).is_err());
    let normalized = normalize_metric(&raw).unwrap().germ;
    assert!(transplant_metric(&normalized, &b, 0.1, &opts()).unwrap().report.passed());
}

#[test]
fn degenerate_radius_is_shrunk() {
    let germ = fixtures::random_metric(31, (0, 2), 2, 4.0).unwrap();
    let host = fixtures::random_metric(32, (0, 2), 2, 0.1).unwrap();
    let res = transplant_metric(&germ, &host, 2.0, &opts()).unwrap();
    assert!(res.report.attempts > 1);
    assert!(res.report.radius < 2.0);
    assert!(res.report.passed());
}

#[test]
fn connection_transplant() {
    let germ = random_torsion_free(41, 3, 0.4);
    let host = random_torsion_free(42, 3, 0.4);
    let a = transplant_connection(&germ, &host, 0.2, &opts()).unwrap();
    assert!(a.report.passed(), "{:?}", a.report);
    let b = transplant_connection(&germ, &host, 0.1, &opts()).unwrap();
    assert!(b.report.deviation.c0 <= 0.75 * a.report.deviation.c0);
    let same = transplant_connection(&germ, &germ, 0.2, &opts()).unwrap();
    assert_eq!(same.report.deviation.c1, 0.0);
    let unnormalized = ConnectionField::new(constant_field(3, &[Co, Co, Contra], vec![0.1; 27])).unwrap();
    assert!(transplant_connection(&unnormalized, &host, 0.2, &opts()).is_err());
    let fixed = normalize_connection(&unnormalized).unwrap().germ;
    assert!(transplant_connection(&fixed, &host, 0.2, &opts()).unwrap().report.passed());
}

#[test]
fn almost_complex_transplant() {
    for kind in [StructureKind::Complex, StructureKind::Para] {
        let germ = varying_structure(51, 4, kind);
        let host = varying_structure(52, 4, kind);
        let res = transplant_almost_complex(&germ, &host, 0.2, &opts()).unwrap();
        assert!(res.report.passed(), "{:?}", res.report);
        let out = res.output.endo.unwrap();
        for p in halton_ball(4, 0.6, 100) {
            assert!(out.square_defect(&p).unwrap() <= 1e-10);
        }
        let same = transplant_almost_complex(&germ, &germ, 0.2, &opts()).unwrap();
        assert_eq!(same.report.deviation.c1, 0.0);
        assert!(same.report.passed());
    }
}

#[test]
fn almost_hermitian_transplant() {
    for kind in [StructureKind::Complex, StructureKind::Para] {
        let (g1, j1) = fixtures::random_almost_hermitian(61, 4, 2, kind, 0.3).unwrap();
        let (g2, j2) = fixtures::random_almost_hermitian(62, 4, 2, kind, 0.3).unwrap();
        // make the germ structure vary, then restore the normal form
        let map = near_identity_map(63, 4, 0.2);
        let g1 = MetricField::new(Arc::new(PullbackField::tensor(g1.field.clone(), map.clone()).unwrap()), g1.signature).unwrap();
        let j1 = EndoField::new(Arc::new(PullbackField::tensor(j1.field.clone(), map).unwrap()), kind).unwrap();
        let n = normalize_pair(&g1, &j1).unwrap();
        let (g1, j1) = n.germ;
        let res = transplant_almost_hermitian((&g1, &j1), (&g2, &j2), 0.15, false, &opts()).unwrap();
        assert!(res.report.passed(), "{:?}", res.report);
        let g = res.output.metric.unwrap();
        let j = res.output.endo.unwrap();
        for p in halton_ball(4, 0.45, 100) {
            assert!(compatibility_defect(&g, &j, &p).unwrap() <= 1e-10);
        }
        let same = transplant_almost_hermitian((&g2, &j2), (&g2, &j2), 0.15, true, &opts()).unwrap();
        assert_eq!(same.report.deviation.c1, 0.0);
        assert!(same.report.passed());
        assert!(transplant_almost_hermitian((&g1, &j1), (&g2, &j2), 0.15, true, &opts()).is_err());
    }
}

#[test]
fn kahler_transplant() {
    for (kind, p) in [(StructureKind::Complex, 0), (StructureKind::Complex, 2), (StructureKind::Para, 2)] {
        let germ = KahlerGerm::new(fixtures::kahler_product_polynomial(71, kind, p, 0.4), (p, 4 - p), kind).unwrap();
        let host = KahlerGerm::new(fixtures::kahler_product_polynomial(72, kind, p, 0.4), (p, 4 - p), kind).unwrap();
        let a = transplant_kahler(&germ, &host, 0.2, &opts()).unwrap();
        assert!(a.report.passed(), "{:?}", a.report);
        let b = transplant_kahler(&germ, &host, 0.1, &opts()).unwrap();
        assert!(b.report.passed());
        let ratio = b.report.deviation.c1 / a.report.deviation.c1;
        assert!(ratio <= 0.75, "ratio {ratio}");
        let same = transplant_kahler(&host, &host, 0.2, &opts()).unwrap();
        assert_eq!(same.report.deviation.c1, 0.0);
    }
}

#[test]
fn kahler_germ_validation() {
    let (g, _) = fixtures::conformal_hermitian(3, 4, 0, StructureKind::Complex, 0.3).unwrap();
    let poly = PolynomialField::taylor(g.field.as_ref(), &[0.0; 4], 3).unwrap();
    assert!(KahlerGerm::new(poly, (0, 4), StructureKind::Complex).is_err());
}

#[test]
fn weyl_transplant() {
    let g1 = fixtures::random_metric(81, (0, 3), 3, 0.2).unwrap();
    let g2 = fixtures::random_metric(82, (0, 3), 3, 0.2).unwrap();
    let c1 = weyl_connection(&g1, &one_form(83, 3, 0.3)).unwrap();
    let lc2 = levi_civita(&g2);
    let c2 = weyl_connection(&g2, &one_form(84, 3, 0.3)).unwrap();
    let o = TransplantOptions { samples: 60, agreement_samples: 20, max_retries: 8 };
    let res = transplant_weyl((&g1, &c1), (&g2, &c2), 0.1, &o).unwrap();
    assert!(res.report.passed(), "{:?}", res.report);
    let same = transplant_weyl((&g2, &lc2), (&g2, &lc2), 0.1, &o).unwrap();
    assert!(same.report.passed());
    assert_eq!(same.report.deviation.c1, 0.0);
}
