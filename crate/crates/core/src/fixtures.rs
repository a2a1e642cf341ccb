//! Seeded example geometries used by tests, the acceptance suite and the CLI.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fields::{
    constant_field, standard_endomorphism, standard_hermitian_metric, standard_metric, ConnectionField, EndoField, MetricField,
    PolynomialField, StructureKind, Symmetry,
};
use crate::jets::Variance::{Co, Contra};
use crate::fields::Field;
use crate::poly::{monomials_of_degree, Polynomial};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random polynomial with terms of degrees `lo..=hi`, coefficients in `[−a, a]`.
pub fn random_polynomial(rng: &mut impl Rng, dim: usize, lo: usize, hi: usize, a: f64) -> Polynomial {
    let mut p = Polynomial::zero(dim);
    for d in lo..=hi {
        for e in monomials_of_degree(dim, d) {
            p.add_term(e, rng.gen_range(-a..=a));
        }
    }
    p
}

/// Seeded uniform points in the closed ball of the given radius (rejection sampling).
pub fn random_ball_points(seed: u64, dim: usize, radius: f64, count: usize) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p: Vec<f64> = (0..dim).map(|_| r.gen_range(-1.0..=1.0)).collect();
        if p.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            out.push(p.into_iter().map(|v| v * radius).collect());
        }
    }
    out
}

/// `g = ε + h` with `h` symmetric of degrees 2..=`degree`, so `g(0) = ε` and `∂g(0) = 0`.
pub fn random_metric_polynomial(seed: u64, base: &[f64], dim: usize, degree: usize, amplitude: f64) -> PolynomialField {
    let mut r = rng(seed);
    let mut g = PolynomialField::zero(dim, &[Co, Co]);
    for i in 0..dim {
        for j in i..dim {
            let mut p = random_polynomial(&mut r, dim, 2, degree, amplitude);
            p.add_term(vec![0; dim], base[i * dim + j]);
            *g.component_mut(&[i, j]) = p.clone();
            *g.component_mut(&[j, i]) = p;
        }
    }
    g.with_symmetries(vec![Symmetry::Symmetric(0, 1)])
}

/// Random normalized metric of signature `(p, q)`.
pub fn random_metric(seed: u64, signature: (usize, usize), degree: usize, amplitude: f64) -> Result<MetricField> {
    let m = signature.0 + signature.1;
    let base = standard_metric(signature.0, signature.1);
    MetricField::new(Arc::new(random_metric_polynomial(seed, &base, m, degree, amplitude)), signature)
}

/// Random torsion-free polynomial connection with `Γ(0) = 0` (terms of degree 1..=2).
pub fn random_connection(seed: u64, m: usize, amplitude: f64) -> Result<ConnectionField> {
    let mut r = rng(seed);
    let mut f = PolynomialField::zero(m, &[Co, Co, Contra]);
    for i in 0..m {
        for j in i..m {
            for k in 0..m {
                let p = random_polynomial(&mut r, m, 1, 2, amplitude);
                *f.component_mut(&[i, j, k]) = p.clone();
                *f.component_mut(&[j, i, k]) = p;
            }
        }
    }
    ConnectionField::new(Arc::new(f.with_symmetries(vec![Symmetry::Symmetric(0, 1)])))
}

/// `½(g − σ J*g)` for the standard constant `J`, computed on polynomials.
pub fn hermitian_average_polynomial(g: &PolynomialField, kind: StructureKind) -> PolynomialField {
    let m = g.dim();
    let j = standard_endomorphism(m, kind);
    PolynomialField::from_fn(m, &[Co, Co], |idx| {
        let (i, k) = (idx[0], idx[1]);
        let mut acc = g.component(&[i, k]).scale(0.5);
        for a in 0..m {
            for b in 0..m {
                let c = j[i * m + a] * j[k * m + b];
                if c != 0.0 {
                    acc = acc.add(&g.component(&[a, b]).scale(-0.5 * kind.sign() * c));
                }
            }
        }
        acc
    })
    .with_symmetries(vec![Symmetry::Symmetric(0, 1)])
}

pub fn standard_structure(m: usize, kind: StructureKind) -> Result<EndoField> {
    EndoField::new(constant_field(m, &[Co, Contra], standard_endomorphism(m, kind)), kind)
}

/// Random normalized almost (para)-Hermitian pair with the standard constant structure.
pub fn random_almost_hermitian(
    seed: u64,
    m: usize,
    p: usize,
    kind: StructureKind,
    amplitude: f64,
) -> Result<(MetricField, EndoField)> {
    let base = standard_hermitian_metric(m, p, kind)?;
    let raw = random_metric_polynomial(seed, &base, m, 3, amplitude);
    let g = hermitian_average_polynomial(&raw, kind);
    Ok((MetricField::new(Arc::new(g), (p, m - p))?, standard_structure(m, kind)?))
}

/// Polynomial conformal factor `1 + (terms of degree 2..=3)`.
fn conformal_factor(r: &mut impl Rng, dim: usize, amplitude: f64) -> Polynomial {
    let mut p = random_polynomial(r, dim, 2, 3, amplitude);
    p.add_term(vec![0; dim], 1.0);
    p
}

/// Embed a polynomial in the variables `(x_a, x_b)` of `R^m`.
fn embed(p: &Polynomial, m: usize, a: usize, b: usize) -> Polynomial {
    let mut out = Polynomial::zero(m);
    for (e, c) in p.terms() {
        let mut f = vec![0u8; m];
        f[a] = e[0];
        f[b] = e[1];
        out.add_term(f, c);
    }
    out
}

/// Product of two surfaces `λ_A(x0,x2) s_A (dx0² ± dx2²) + λ_B(x1,x3) s_B (dx1² ± dx3²)`,
/// Kähler for the standard structure in dimension 4 (complex: `+`, para: `−` first).
/// `p = 0` or `p = 2` negative directions in the complex case; para is neutral.
pub fn kahler_product_polynomial(seed: u64, kind: StructureKind, p: usize, amplitude: f64) -> PolynomialField {
    let mut r = rng(seed);
    let m = 4;
    let base = standard_hermitian_metric(m, p, kind).expect("valid signature");
    let mut g = PolynomialField::zero(m, &[Co, Co]);
    for (a, b) in [(0usize, 2usize), (1, 3)] {
        let lambda = embed(&conformal_factor(&mut r, 2, amplitude), m, a, b);
        *g.component_mut(&[a, a]) = lambda.scale(base[a * m + a]);
        *g.component_mut(&[b, b]) = lambda.scale(base[b * m + b]);
    }
    g.with_symmetries(vec![Symmetry::Symmetric(0, 1)])
}

/// Kähler product fixture as fields.
pub fn kahler_product(seed: u64, kind: StructureKind, p: usize, amplitude: f64) -> Result<(MetricField, EndoField)> {
    let g = kahler_product_polynomial(seed, kind, p, amplitude);
    Ok((MetricField::new(Arc::new(g), (p, 4 - p))?, standard_structure(4, kind)?))
}

/// `λ · g_std` with a random polynomial conformal factor: Hermitian with an
/// integrable structure, and not Kähler in dimension 4 unless `dλ = 0`.
pub fn conformal_hermitian(seed: u64, m: usize, p: usize, kind: StructureKind, amplitude: f64) -> Result<(MetricField, EndoField)> {
    let mut r = rng(seed);
    let base = standard_hermitian_metric(m, p, kind)?;
    let lambda = conformal_factor(&mut r, m, amplitude);
    let g = PolynomialField::from_fn(m, &[Co, Co], |idx| lambda.scale(base[idx[0] * m + idx[1]]))
        .with_symmetries(vec![Symmetry::Symmetric(0, 1)]);
    Ok((MetricField::new(Arc::new(g), (p, m - p))?, standard_structure(m, kind)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::kahler_criteria;

    #[test]
    fn fixtures_are_deterministic_and_normalized() {
        let a = random_metric_polynomial(7, &standard_metric(1, 3), 4, 3, 0.2);
        let b = random_metric_polynomial(7, &standard_metric(1, 3), 4, 3, 0.2);
        assert_eq!(a, b);
        let g = random_metric(7, (1, 3), 3, 0.2).unwrap();
        let flags = crate::transplant::verify_flags(&g, None).unwrap();
        assert!(flags.value && flags.derivative);
    }

    #[test]
    fn product_fixtures_are_kahler() {
        for (kind, p) in [(StructureKind::Complex, 0), (StructureKind::Complex, 2), (StructureKind::Para, 2)] {
            let (g, j) = kahler_product(3, kind, p, 0.3).unwrap();
            let c = kahler_criteria(&g, &j, &[0.2, -0.1, 0.3, 0.15]).unwrap();
            assert!(c.max() < 1e-12, "{kind:?}: {c:?}");
        }
    }

    #[test]
    fn averaged_pairs_are_compatible() {
        for kind in [StructureKind::Complex, StructureKind::Para] {
            let (g, j) = random_almost_hermitian(11, 4, 2, kind, 0.2).unwrap();
            let d = crate::curvature::compatibility_defect(&g, &j, &[0.3, 0.1, -0.2, 0.4]).unwrap();
            assert!(d < 1e-14);
        }
    }
}
