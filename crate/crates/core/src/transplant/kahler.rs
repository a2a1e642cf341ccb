//! Kähler transplants through a potential for the difference of Kähler forms.
//!
//! With the standard constant structure `J` the operator
//! `P(f)_ij = ½ (J_j^a ∂_a∂_i f − J_i^a ∂_a∂_j f) = ½ d(df ∘ J)_ij`
//! maps potentials to closed 2-forms, and `P(½ Σ ε_i (x^i)²)` is the Kähler
//! form of the flat metric `diag(ε)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::curvature::{compatibility_defect_jets, exterior_derivative, kahler_form_jets};
use crate::error::{GeomError, Result};
use crate::fields::{
    constant_field, eval_at, mesa, standard_endomorphism, symmetry_defect, EndoField, Field, FieldRef, Mesa,
    MetricField, PlateauSwitch, PolynomialField, StructureKind, Symmetry,
};
use crate::jets::{coordinate_jets, coordinate_point, Jet, JetTensor, Variance};
use crate::linalg::least_norm_solve;
use crate::poly::{monomials_of_degree, Polynomial};

use super::{
    check_nondegenerate, report, sampled_max, with_retries, Check, Samples, TransplantOptions, TransplantOutput,
    TransplantResult,
};

use Variance::{Co, Contra};

/// Nonzero entry of row `i` of the standard `J`: `J ∂_i = s ∂_t`, returned as `(t, s)`.
fn standard_partner(m: usize, i: usize, kind: StructureKind) -> (usize, f64) {
    let n = m / 2;
    if i < n {
        (i + n, 1.0)
    } else {
        (i - n, kind.sign())
    }
}

/// `P(f)` for the standard structure.
pub fn kahler_operator(f: &Polynomial, kind: StructureKind) -> PolynomialField {
    let m = f.dim();
    let grad: Vec<Polynomial> = (0..m).map(|a| f.partial(a)).collect();
    PolynomialField::from_fn(m, &[Co, Co], |idx| {
        let (i, j) = (idx[0], idx[1]);
        let (a, sj) = standard_partner(m, j, kind);
        let (b, si) = standard_partner(m, i, kind);
        grad[a].partial(i).scale(0.5 * sj).sub(&grad[b].partial(j).scale(0.5 * si))
    })
    .with_symmetries(vec![Symmetry::Antisymmetric(0, 1)])
}

/// `Ω_ij = J_j^a g_ia` for the standard structure.
pub fn polynomial_kahler_form(g: &PolynomialField, kind: StructureKind) -> PolynomialField {
    let m = g.dim();
    PolynomialField::from_fn(m, &[Co, Co], |idx| {
        let (a, s) = standard_partner(m, idx[1], kind);
        g.component(&[idx[0], a]).scale(s)
    })
}

/// Largest coefficient of `dω` for a polynomial 2-form.
fn closedness_defect(w: &PolynomialField) -> f64 {
    let m = w.dim();
    let mut worst = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let d = w
                    .component(&[j, k])
                    .partial(i)
                    .sub(&w.component(&[i, k]).partial(j))
                    .add(&w.component(&[i, j]).partial(k));
                worst = worst.max(d.max_abs_coeff());
            }
        }
    }
    worst
}

/// Largest coefficient of `w(J·, J·) + σ w`, which vanishes for forms of Kähler type.
fn type_defect(w: &PolynomialField, kind: StructureKind) -> f64 {
    let m = w.dim();
    let mut worst = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let (a, si) = standard_partner(m, i, kind);
            let (b, sj) = standard_partner(m, j, kind);
            let d = w.component(&[a, b]).scale(si * sj).add(&w.component(&[i, j]).scale(kind.sign()));
            worst = worst.max(d.max_abs_coeff());
        }
    }
    worst
}

/// Solve `P(f) = Δ` degree by degree with least-norm solutions; `f` has degree at most `max_degree`.
pub fn kahler_potential_solve(delta: &PolynomialField, kind: StructureKind, max_degree: usize) -> Result<Polynomial> {
    let m = delta.dim();
    if delta.slots() != [Co, Co] {
        return Err(GeomError::ValenceMismatch("the potential equation needs a 2-form".into()));
    }
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    let scale = delta.components().iter().fold(1.0f64, |s, p| s.max(p.max_abs_coeff()));
    let mut f = Polynomial::zero(m);
    for nu in 0..=delta.degree() {
        let rows: Vec<Vec<u8>> = monomials_of_degree(m, nu);
        let target: Vec<f64> = pairs
            .iter()
            .flat_map(|&(i, j)| rows.iter().map(move |e| delta.component(&[i, j]).coefficient(e)))
            .collect();
        if target.iter().all(|v| *v == 0.0) {
            continue;
        }
        if nu + 2 > max_degree {
            return Err(GeomError::Precondition(format!(
                "potential degree {max_degree} is too small for a form of degree {}",
                delta.degree()
            )));
        }
        let cols = monomials_of_degree(m, nu + 2);
        let mut a = DMatrix::zeros(target.len(), cols.len());
        for (c, e) in cols.iter().enumerate() {
            let img = kahler_operator(&Polynomial::monomial(e.clone(), 1.0), kind);
            for (p, &(i, j)) in pairs.iter().enumerate() {
                for (k, r) in rows.iter().enumerate() {
                    a[(p * rows.len() + k, c)] = img.component(&[i, j]).coefficient(r);
                }
            }
        }
        let sol = least_norm_solve(&a, &DVector::from_vec(target), 1e-12);
        if sol.residual > 1e-10 * scale {
            let closed = closedness_defect(delta);
            let typed = type_defect(delta, kind);
            let antisym = (0..m)
                .flat_map(|i| (0..m).map(move |j| (i, j)))
                .map(|(i, j)| delta.component(&[i, j]).add(delta.component(&[j, i])).max_abs_coeff())
                .fold(0.0, f64::max);
            return Err(GeomError::Inconsistent(format!(
                "no potential in degree {}: residual {:e}; |dΔ| = {closed:e}, type defect {typed:e}, antisymmetry defect {antisym:e}",
                nu + 2,
                sol.residual
            )));
        }
        for (c, e) in cols.iter().enumerate() {
            if sol.x[c] != 0.0 {
                f.add_term(e.clone(), sol.x[c]);
            }
        }
    }
    Ok(f)
}

/// Polynomial metric with the standard constant structure, in Kähler normal form.
#[derive(Clone, Debug)]
pub struct KahlerGerm {
    pub metric: PolynomialField,
    pub signature: (usize, usize),
    pub kind: StructureKind,
}

impl KahlerGerm {
    /// Validates `g(0)`, `∂g(0) = 0`, compatibility with the standard `J`, and `dΩ = 0`.
    pub fn new(metric: PolynomialField, signature: (usize, usize), kind: StructureKind) -> Result<Self> {
        let m = metric.dim();
        let g = MetricField::new(Arc::new(metric.clone()), signature)?;
        let j = EndoField::new(constant_field(m, &[Co, Contra], standard_endomorphism(m, kind)), kind)?;
        let flags = super::verify_flags(&g, Some(&j))?;
        if !(flags.value && flags.derivative) {
            return Err(GeomError::Precondition(format!(
                "Kähler germ is not normalized (g(0) standard: {}, ∂g(0) = 0: {})",
                flags.value, flags.derivative
            )));
        }
        let origin = vec![0.0; m];
        let compat = crate::curvature::compatibility_defect(&g, &j, &origin)?;
        if compat > 1e-10 {
            return Err(GeomError::Precondition(format!("metric is not compatible with the standard structure ({compat:e})")));
        }
        let omega = polynomial_kahler_form(&metric, kind);
        let closed = closedness_defect(&omega);
        if closed > 1e-10 || type_defect(&omega, kind) > 1e-10 {
            return Err(GeomError::Precondition(format!("input is not Kähler (|dΩ| = {closed:e})")));
        }
        Ok(Self { metric, signature, kind })
    }

    pub fn metric_field(&self) -> Result<MetricField> {
        MetricField::new(Arc::new(self.metric.clone()), self.signature)
    }

    pub fn structure(&self) -> Result<EndoField> {
        let m = self.metric.dim();
        EndoField::new(constant_field(m, &[Co, Contra], standard_endomorphism(m, self.kind)), self.kind)
    }
}

/// `g̃_ij = σ ω̃_ia J_j^a` with `ω̃ = Ω_host + P(φ f)`. Needs coordinate jets.
#[derive(Clone, Debug)]
struct KahlerTransplantField {
    host: PolynomialField,
    potential: Polynomial,
    phi: Mesa,
    kind: StructureKind,
}

impl Field for KahlerTransplantField {
    fn dim(&self) -> usize {
        self.host.dim()
    }
    fn slots(&self) -> Vec<Variance> {
        vec![Co, Co]
    }
    fn symmetries(&self) -> Vec<Symmetry> {
        vec![Symmetry::Symmetric(0, 1)]
    }
    fn max_order(&self) -> usize {
        crate::jets::MAX_ORDER - 2
    }
    fn eval(&self, x: &[Jet]) -> Result<JetTensor> {
        let m = self.dim();
        let p = coordinate_point(x).ok_or(GeomError::NotComposable("Kähler transplant"))?;
        let k = x[0].order();
        let y = coordinate_jets(&p, k + 2)?;
        let h = self.phi.jet(&y)? * self.potential.eval_jets(&y)?;
        let mut hess = Vec::with_capacity(m * m);
        for a in 0..m {
            let ha = h.partial(a)?;
            for i in 0..m {
                hess.push(ha.partial(i)?);
            }
        }
        let host = self.host.eval(x)?;
        let sigma = self.kind.sign();
        // host Kähler form plus P(φ f), then g̃_ij = σ ω̃_{i,t(j)} s(j)
        let omega = |i: usize, j: usize| -> Jet {
            let (a, sj) = standard_partner(m, j, self.kind);
            let (b, si) = standard_partner(m, i, self.kind);
            let base = host.component(&[i, a]) * sj;
            base + (&hess[a * m + i] * (0.5 * sj)) - (&hess[b * m + j] * (0.5 * si))
        };
        JetTensor::from_fn(m, &[Co, Co], |idx| {
            let (t, s) = standard_partner(m, idx[1], self.kind);
            Ok(omega(idx[0], t) * (sigma * s))
        })
    }
}

/// Transplant a Kähler germ into a Kähler host with the same standard structure.
pub fn transplant_kahler(germ: &KahlerGerm, host: &KahlerGerm, r: f64, opts: &TransplantOptions) -> Result<TransplantResult> {
    let m = germ.metric.dim();
    if host.metric.dim() != m {
        return Err(GeomError::DimensionMismatch { expected: m, found: host.metric.dim() });
    }
    if germ.kind != host.kind {
        return Err(GeomError::Precondition("germ and host structures are of different kinds".into()));
    }
    if germ.signature != host.signature {
        return Err(GeomError::SignatureMismatch {
            expected_p: host.signature.0,
            expected_q: host.signature.1,
            found_p: germ.signature.0,
            found_q: germ.signature.1,
        });
    }
    let origin = vec![0.0; m];
    if eval_at(&germ.metric, &origin, 0)?.max_abs_diff(&eval_at(&host.metric, &origin, 0)?) > 1e-10 {
        return Err(GeomError::Precondition("germ and host metrics differ at the origin".into()));
    }
    let kind = germ.kind;
    let delta = polynomial_kahler_form(&germ.metric, kind).add(&polynomial_kahler_form(&host.metric, kind).scale(-1.0))?;
    let degree = delta.degree() + 2;
    let potential = kahler_potential_solve(&delta, kind, degree)?;
    let g1: FieldRef = Arc::new(germ.metric.clone());
    let g2: FieldRef = Arc::new(host.metric.clone());
    let j = host.structure()?;
    let ((g, s), radius, attempts) = with_retries(r, opts, |r| {
        let phi = mesa(m, r)?;
        let transition: FieldRef =
            Arc::new(KahlerTransplantField { host: host.metric.clone(), potential: potential.clone(), phi, kind });
        let g = MetricField::new(PlateauSwitch::shared(Arc::new(phi), g1.clone(), g2.clone(), transition)?, host.signature)?;
        let s = Samples::standard(m, r, opts);
        check_nondegenerate(&g, &s.domain)?;
        Ok((g, s))
    })?;
    let mut rep = report("kahler", r, radius, attempts, g.field.as_ref(), g1.as_ref(), g2.as_ref(), &s)?;
    rep.checks.push(Check::flag("nondegenerate", true));
    let jv = standard_endomorphism(m, kind);
    let d_omega = sampled_max(&s.domain, |p| {
        let gj = g.at(p, 1)?;
        let jj = JetTensor::constant(m, &[Co, Contra], 1, &jv)?;
        Ok(exterior_derivative(&kahler_form_jets(&gj, &jj))?.max_abs_value())
    })?;
    rep.checks.push(Check::at_most("d_omega", d_omega, 1e-9));
    let sym = sampled_max(&s.domain, |p| symmetry_defect(g.field.as_ref(), p))?;
    rep.checks.push(Check::at_most("symmetry", sym, 1e-12));
    let compat = sampled_max(&s.domain, |p| {
        let jj = JetTensor::constant(m, &[Co, Contra], 0, &jv)?;
        Ok(compatibility_defect_jets(&g.at(p, 0)?, &jj, kind))
    })?;
    rep.checks.push(Check::at_most("compatibility", compat, 1e-10));
    Ok(TransplantResult { output: TransplantOutput { metric: Some(g), endo: Some(j), ..Default::default() }, report: rep })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_potential_reproduces_flat_kahler_form() {
        for kind in [StructureKind::Complex, StructureKind::Para] {
            let m = 4;
            let g0 = crate::fields::standard_hermitian_metric(m, 2, kind).unwrap();
            let mut f = Polynomial::zero(m);
            for i in 0..m {
                let mut e = vec![0u8; m];
                e[i] = 2;
                f.add_term(e, 0.5 * g0[i * m + i]);
            }
            let g = PolynomialField::constant(m, &[Co, Co], &g0).unwrap();
            let omega = polynomial_kahler_form(&g, kind);
            let pf = kahler_operator(&f, kind);
            assert_eq!(pf, omega.with_symmetries(vec![Symmetry::Antisymmetric(0, 1)]));
        }
    }

    #[test]
    fn potential_round_trip() {
        let m = 4;
        let mut f0 = Polynomial::zero(m);
        f0.add_term(vec![4, 0, 0, 0], 0.3);
        f0.add_term(vec![1, 1, 1, 1], -0.7);
        f0.add_term(vec![0, 2, 0, 2], 1.1);
        f0.add_term(vec![2, 0, 1, 0], 0.4);
        for kind in [StructureKind::Complex, StructureKind::Para] {
            let delta = kahler_operator(&f0, kind);
            let f = kahler_potential_solve(&delta, kind, 4).unwrap();
            let back = kahler_operator(&f, kind);
            for (a, b) in back.components().iter().zip(delta.components()) {
                assert!(a.sub(b).max_abs_coeff() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_form_has_zero_potential() {
        let delta = PolynomialField::zero(4, &[Co, Co]);
        assert!(kahler_potential_solve(&delta, StructureKind::Complex, 4).unwrap().is_zero());
    }

    #[test]
    fn non_closed_form_is_inconsistent() {
        let mut delta = PolynomialField::zero(2, &[Co, Co]);
        delta.component_mut(&[0, 1]).add_term(vec![1, 0], 1.0);
        delta.component_mut(&[1, 0]).add_term(vec![1, 0], -1.0);
        // in dimension 2 every 2-form is closed; use dimension 4
        let mut d4 = PolynomialField::zero(4, &[Co, Co]);
        d4.component_mut(&[0, 1]).add_term(vec![0, 0, 1, 0], 1.0);
        d4.component_mut(&[1, 0]).add_term(vec![0, 0, 1, 0], -1.0);
        assert!(kahler_potential_solve(&delta, StructureKind::Complex, 4).is_ok());
        assert!(matches!(kahler_potential_solve(&d4, StructureKind::Complex, 4), Err(GeomError::Inconsistent(_))));
    }
}
