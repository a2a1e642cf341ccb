use std::sync::Arc;

use germforge::fields::norms::halton_ball;
use germforge::fields::{
    standard_hermitian_metric, standard_metric, EndoField, MetricField, PolynomialField, PullbackField,
    StructureKind,
};
use germforge::fixtures::{self, random_polynomial, rng};
use germforge::identities::terms::{combine, u_prime_terms, HermitianJets};
use germforge::identities::*;
use germforge::poly::Polynomial;

const COMPLEX: StructureKind = StructureKind::Complex;

fn points(n: usize) -> Vec<Vec<f64>> {
    halton_ball(4, 0.8, n)
}

fn flat_pair() -> (MetricField, EndoField) {
    let g = PolynomialField::constant(4, &[germforge::jets::Variance::Co; 2], &standard_hermitian_metric(4, 0, COMPLEX).unwrap()).unwrap();
    (MetricField::new(Arc::new(g), (0, 4)).unwrap(), fixtures::standard_structure(4, COMPLEX).unwrap())
}

/// Random almost Hermitian pair whose structure is not constant.
fn twisted_pair(seed: u64) -> (MetricField, EndoField) {
    let (g, j) = fixtures::random_almost_hermitian(seed, 4, 0, COMPLEX, 0.25).unwrap();
    let mut r = rng(seed + 1000);
    let map: Vec<Polynomial> =
        (0..4).map(|i| Polynomial::variable(4, i).add(&random_polynomial(&mut r, 4, 2, 2, 0.2))).collect();
    let g = MetricField::new(Arc::new(PullbackField::tensor(g.field.clone(), map.clone()).unwrap()), (0, 4)).unwrap();
    let j = EndoField::new(Arc::new(PullbackField::tensor(j.field.clone(), map).unwrap()), COMPLEX).unwrap();
    (g, j)
}

#[test]
fn flat_input_gives_exact_zero() {
    let (g, j) = flat_pair();
    for id in Identity::ALL {
        let rep = verify(id, &g, Some(&j), &points(5), id.default_tolerance()).unwrap();
        assert_eq!(rep.max_residual, 0.0, "{id}");
        assert!(rep.points.iter().all(|p| p.absolute == 0.0));
    }
}

#[test]
fn berger_holds_in_every_signature() {
    for (seed, sig) in [(1, (0, 4)), (2, (1, 3)), (3, (2, 2))] {
        let g = fixtures::random_metric(seed, sig, 4, 0.3).unwrap();
        let rep = verify(Identity::Berger, &g, None, &points(10), 1e-8).unwrap();
        assert!(rep.passed, "{sig:?}: {:e}", rep.max_residual);
        assert!(rep.points.iter().all(|p| p.scale > 1e-3));
    }
}

#[test]
fn four_dimensional_identities_reject_other_dimensions() {
    let g = fixtures::random_metric(1, (0, 3), 3, 0.3).unwrap();
    assert!(berger_residual(&g, &[0.1, 0.2, 0.0]).is_err());
}

#[test]
fn gray_holds_and_is_symmetric() {
    for seed in 0..4 {
        let (g, j) = twisted_pair(seed);
        for p in points(5) {
            let r = gray_residual(&g, &j, &p).unwrap();
            assert!(r.relative() <= 1e-7, "{:e}", r.relative());
            let t = &r.tensors[0].1;
            for a in 0..4 {
                for b in 0..4 {
                    assert!((t[a * 4 + b] - t[b * 4 + a]).abs() <= 1e-10);
                }
            }
        }
    }
    let (g, j) = fixtures::kahler_product(4, COMPLEX, 0, 0.3).unwrap();
    assert!(verify(Identity::Gray, &g, Some(&j), &points(10), 1e-9).unwrap().passed);
}

#[test]
fn gray_rejects_incompatible_pairs() {
    let g = fixtures::random_metric(5, (0, 4), 3, 0.3).unwrap();
    let j = fixtures::standard_structure(4, COMPLEX).unwrap();
    assert!(gray_residual(&g, &j, &[0.2, 0.1, 0.0, 0.3]).is_err());
}

#[test]
fn kahler_identities_on_product_surfaces() {
    for seed in 1..=3 {
        let (g, j) = fixtures::kahler_product(seed, COMPLEX, 0, 0.4).unwrap();
        let rep = verify(Identity::Kahler, &g, Some(&j), &points(10), 1e-8).unwrap();
        assert!(rep.passed, "{:e}", rep.max_residual);
    }
    let (g, j) = twisted_pair(3);
    assert!(matches!(kahler_identity_residuals(&g, &j, &[0.1, 0.2, 0.3, 0.0]), Err(germforge::GeomError::Precondition(_))));
}

#[test]
fn join_sign_adjudication() {
    let mut inputs: Vec<_> = (1..=2).map(|s| fixtures::kahler_product(s, COMPLEX, 0, 0.4).unwrap()).collect();
    inputs.extend((0..2).map(twisted_pair));
    for (g, j) in &inputs {
        let p = [0.2, -0.3, 0.1, 0.25];
        let minus = pontrjagin_residuals(g, j, &p, JoinSign::Minus).unwrap();
        let plus = pontrjagin_residuals(g, j, &p, JoinSign::Plus).unwrap();
        assert!(minus.relative() <= 1e-9, "{:e}", minus.relative());
        assert!(plus.relative() >= 1e-3, "{:e}", plus.relative());
        // only the coupling identity tells the two apart
        assert!(plus.tensors[0].1.iter().all(|v| v.abs() <= 1e-9 * plus.scale));
    }
    assert_eq!(DEFAULT_JOIN_SIGN, JoinSign::Minus);
}

#[test]
fn pontrjagin_and_chern_hold_on_almost_hermitian_inputs() {
    for seed in 0..3 {
        let (g, j) = twisted_pair(seed);
        for id in [Identity::Pontrjagin, Identity::Chern] {
            let rep = verify(id, &g, Some(&j), &points(4), 1e-6).unwrap();
            assert!(rep.passed, "{id}: {:e}", rep.max_residual);
        }
    }
}

#[test]
fn chern_identities_detect_a_single_flipped_term() {
    let (g, j) = twisted_pair(7);
    let p = [0.1, 0.2, -0.2, 0.3];
    let h = HermitianJets::new(g.at(&p, 4).unwrap(), j.at(&p, 4).unwrap()).unwrap();
    let base = chern_residuals(&g, &j, &p).unwrap();
    assert!(base.relative() <= 1e-9);
    let terms = u_prime_terms(&h).unwrap();
    let full = combine(&terms).truncate(0);
    let mut broken = 0;
    for k in 0..terms.len() {
        let flipped = full.lin_comb(1.0, &terms[k].value.truncate(0), -2.0 * terms[k].coefficient);
        let sym = flipped.lin_comb(0.5, &germforge::jets::einsum("ji->ij", &[&flipped]), 0.5);
        let sym_full = full.lin_comb(0.5, &germforge::jets::einsum("ji->ij", &[&full]), 0.5);
        if sym.max_abs_diff(&sym_full) > 1e-6 * base.scale {
            broken += 1;
        }
    }
    // every term contributes to the symmetric part of U′ on a generic input
    assert!(broken >= terms.len() - 2, "{broken} of {}", terms.len());
}

#[test]
fn pass_status_is_invariant_under_constant_rescaling() {
    let base = fixtures::random_metric_polynomial(9, &standard_metric(0, 4), 4, 4, 0.3);
    for c in [0.25, 4.0] {
        let g = MetricField::new(Arc::new(base.scale(c)), (0, 4)).unwrap();
        let g1 = MetricField::new(Arc::new(base.clone()), (0, 4)).unwrap();
        let a = verify(Identity::Berger, &g, None, &points(5), 1e-8).unwrap();
        let b = verify(Identity::Berger, &g1, None, &points(5), 1e-8).unwrap();
        assert_eq!(a.passed, b.passed);
        assert!(a.passed);
    }
}

#[test]
fn reports_serialize() {
    let g = fixtures::random_metric(3, (0, 4), 3, 0.3).unwrap();
    let rep = verify(Identity::Berger, &g, None, &points(3), 1e-8).unwrap();
    let json = serde_json::to_value(&rep).unwrap();
    assert_eq!(json["identity"], "berger");
    assert_eq!(json["points_sampled"], 3);
    let csv = rep.to_csv();
    assert!(csv.starts_with("x0,x1,x2,x3,residual,absolute,scale\n"));
    assert_eq!(csv.lines().count(), 4);
    assert_eq!("chern".parse::<Identity>().unwrap(), Identity::Chern);
    assert!("euler".parse::<Identity>().is_err());
}
