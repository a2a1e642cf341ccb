//! Weyl structures `∇g = −2ω⊗g` and their transplantation.

use std::sync::Arc;

use crate::curvature::{
    christoffel, codifferential, covariant_derivative, inverse_metric, kahler_form_jets, nijenhuis_jets,
};
use crate::error::{GeomError, Result};
use crate::fields::{eval_at, ConnectionField, EndoField, Field, FieldRef, Mesa, MetricField, OneFormField};
use crate::jets::{coordinate_jets, coordinate_point, einsum, Jet, JetTensor, Variance};

use super::{
    agrees_exactly, metric_blend, report, sampled_max, with_retries, Check, Samples, TransplantOptions, TransplantOutput,
    TransplantResult,
};

use Variance::{Co, Contra};

/// `∇g` with the derivative slot last: `out[i,j,k] = ∇_k g_ij`.
fn nabla_metric(g: &dyn Field, conn: &dyn Field, p: &[f64], order: usize) -> Result<(JetTensor, JetTensor)> {
    let gj = eval_at(g, p, order + 1)?;
    let gamma = eval_at(conn, p, order)?;
    Ok((covariant_derivative(&gj, &gamma)?, gj))
}

/// `ω_k = −(1/2m) g^{ij} ∇_k g_ij`.
fn recovered_form(ng: &JetTensor, g: &JetTensor) -> Result<JetTensor> {
    let m = g.dim();
    let ginv = inverse_metric(&g.truncate(ng.order()))?;
    Ok(einsum("ijk,ij->k", &[ng, &ginv]).scale(-0.5 / m as f64))
}

/// The 1-form recovered from `(g, ∇)`; needs coordinate jets.
#[derive(Clone, Debug)]
struct RecoveredLeeForm {
    g: FieldRef,
    conn: FieldRef,
}

impl Field for RecoveredLeeForm {
    fn dim(&self) -> usize {
        self.g.dim()
    }
    fn slots(&self) -> Vec<Variance> {
        vec![Co]
    }
    fn max_order(&self) -> usize {
        self.conn.max_order().min(self.g.max_order().saturating_sub(1))
    }
    fn eval(&self, x: &[Jet]) -> Result<JetTensor> {
        let p = coordinate_point(x).ok_or(GeomError::NotComposable("recovered Weyl form"))?;
        let (ng, g) = nabla_metric(self.g.as_ref(), self.conn.as_ref(), &p, x[0].order())?;
        recovered_form(&ng, &g)
    }
}

/// Result of testing `∇g = −2ω⊗g` on sample points.
#[derive(Clone, Debug)]
pub struct WeylCheck {
    pub omega: OneFormField,
    pub residual: f64,
}

/// Residual of `∇g + 2ω⊗g` at a point, relative to `1 + |∇g|`.
fn weyl_residual_at(g: &dyn Field, conn: &dyn Field, p: &[f64]) -> Result<f64> {
    let (ng, gj) = nabla_metric(g, conn, p, 0)?;
    let omega = recovered_form(&ng, &gj)?;
    let m = gj.dim();
    let mut worst = 0.0f64;
    let scale = 1.0 + ng.max_abs_value();
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let v = ng.value(&[i, j, k]) + 2.0 * omega.value(&[k]) * gj.value(&[i, j]);
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst / scale)
}

/// Recover `ω` from a torsion-free `∇` and report the Weyl residual over the points.
pub fn weyl_structure_check(g: &MetricField, conn: &ConnectionField, points: &[Vec<f64>]) -> Result<WeylCheck> {
    if g.dim() != conn.dim() {
        return Err(GeomError::DimensionMismatch { expected: g.dim(), found: conn.dim() });
    }
    for p in points {
        conn.check_torsion_free(p)?;
    }
    let residual = sampled_max(points, |p| weyl_residual_at(g.field.as_ref(), conn.field.as_ref(), p))?;
    let omega = OneFormField::new(Arc::new(RecoveredLeeForm { g: g.field.clone(), conn: conn.field.clone() }))?;
    Ok(WeylCheck { omega, residual })
}

/// `Γ = Γ^g + ω_i δ_j^k + ω_j δ_i^k − g_ij ω^k`; needs coordinate jets.
#[derive(Clone, Debug)]
struct WeylConnection {
    g: FieldRef,
    omega: FieldRef,
}

impl Field for WeylConnection {
    fn dim(&self) -> usize {
        self.g.dim()
    }
    fn slots(&self) -> Vec<Variance> {
        vec![Co, Co, Contra]
    }
    fn max_order(&self) -> usize {
        self.omega.max_order().min(self.g.max_order().saturating_sub(1))
    }
    fn eval(&self, x: &[Jet]) -> Result<JetTensor> {
        let m = self.dim();
        let p = coordinate_point(x).ok_or(GeomError::NotComposable("Weyl connection"))?;
        let k = x[0].order();
        let gj = eval_at(self.g.as_ref(), &p, k + 1)?;
        let lc = christoffel(&gj)?;
        let w = self.omega.eval(x)?;
        let g = gj.truncate(k);
        let ginv = inverse_metric(&g)?;
        let w_up = einsum("a,ak->k", &[&w, &ginv]);
        let id = JetTensor::identity(m, k)?;
        let t1 = einsum("i,jk->ijk", &[&w, &id]);
        let t2 = einsum("j,ik->ijk", &[&w, &id]);
        let t3 = einsum("ij,k->ijk", &[&g, &w_up]);
        Ok(lc.add(&t1).add(&t2).sub(&t3))
    }
}

/// The Weyl connection of `(g, ω)`.
pub fn weyl_connection(g: &MetricField, omega: &OneFormField) -> Result<ConnectionField> {
    ConnectionField::new(Arc::new(WeylConnection { g: g.field.clone(), omega: omega.field.clone() }))
}

/// `Σ b_k ∇_k / Σ b_k`; where one weight is exactly 1 and the others exactly 0
/// that part is returned verbatim.
#[derive(Clone, Debug)]
struct PartitionBlend {
    weights: Vec<FieldRef>,
    parts: Vec<FieldRef>,
}

impl Field for PartitionBlend {
    fn dim(&self) -> usize {
        self.parts[0].dim()
    }
    fn slots(&self) -> Vec<Variance> {
        self.parts[0].slots()
    }
    fn max_order(&self) -> usize {
        self.parts.iter().chain(&self.weights).map(|f| f.max_order()).min().unwrap_or(0)
    }
    fn eval(&self, x: &[Jet]) -> Result<JetTensor> {
        let w: Vec<Jet> = self.weights.iter().map(|b| Ok(b.eval(x)?.as_scalar())).collect::<Result<_>>()?;
        let zero = |j: &Jet| j.is_constant() && j.value() == 0.0;
        let active: Vec<usize> = (0..w.len()).filter(|&k| !zero(&w[k])).collect();
        if active.len() == 1 && w[active[0]].is_constant() && w[active[0]].value() == 1.0 {
            return self.parts[active[0]].eval(x);
        }
        let mut total = w[active[0]].clone();
        for &k in &active[1..] {
            total += &w[k];
        }
        let inv = total.recip()?;
        // written relative to the last active part so equal parts give it back bit for bit
        let (&base, rest) = active.split_last().expect("some weight is nonzero");
        let last = self.parts[base].eval(x)?;
        let mut acc = last.clone();
        for &k in rest {
            let d = self.parts[k].eval(x)?.sub(&last);
            acc = acc.add(&d.mul_scalar(&(&w[k] * &inv)));
        }
        Ok(acc)
    }
}

/// `1 − φ` for a scalar field.
#[derive(Clone, Debug)]
struct Complement(FieldRef);

impl Field for Complement {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn slots(&self) -> Vec<Variance> {
        Vec::new()
    }
    fn eval(&self, x: &[Jet]) -> Result<JetTensor> {
        let v = self.0.eval(x)?.as_scalar();
        Ok(JetTensor::scalar(if v.is_constant() { v.constant_like(1.0 - v.value()) } else { -v + 1.0 }))
    }
}

/// Product of two scalar fields.
#[derive(Clone, Debug)]
struct Product(FieldRef, FieldRef);

impl Field for Product {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn slots(&self) -> Vec<Variance> {
        Vec::new()
    }
    fn eval(&self, x: &[Jet]) -> Result<JetTensor> {
        let a = self.0.eval(x)?.as_scalar();
        if a.is_constant() && a.value() == 0.0 {
            return Ok(JetTensor::scalar(a));
        }
        let b = self.1.eval(x)?.as_scalar();
        Ok(JetTensor::scalar(&a * &b))
    }
}

/// Transplant a Weyl structure. The metric is blended across `[2r, 3r]`; the
/// connection equals the germ on `B_r` and the host outside `B_{4r}`.
pub fn transplant_weyl(
    germ: (&MetricField, &ConnectionField),
    host: (&MetricField, &ConnectionField),
    r: f64,
    opts: &TransplantOptions,
) -> Result<TransplantResult> {
    let (g1, c1) = germ;
    let (g2, c2) = host;
    let m = g1.dim();
    let check_pts = crate::fields::norms::halton_ball(m, 5.0 * r, opts.samples.min(60));
    for (name, g, c) in [("germ", g1, c1), ("host", g2, c2)] {
        let w = weyl_structure_check(g, c, &check_pts)?;
        if w.residual > 1e-8 {
            return Err(GeomError::Precondition(format!("{name} is not a Weyl structure (residual {:e})", w.residual)));
        }
    }
    let ((g, conn, s), radius, attempts) = with_retries(r, opts, |r| {
        let inner = TransplantOptions { max_retries: 0, ..*opts };
        let gt = metric_blend(g1, g2, r, (2.0, 3.0, 5.0), &inner, "metric")?.output.metric.expect("metric output");
        let lc: FieldRef = crate::curvature::LeviCivitaField::shared(gt.field.clone())?;
        let b1: FieldRef = Arc::new(Mesa::new(m, r, 2.0 * r)?);
        let outer: FieldRef = Arc::new(Mesa::new(m, 3.0 * r, 4.0 * r)?);
        let b2: FieldRef = Arc::new(Product(Arc::new(Complement(b1.clone())), outer.clone()));
        let b3: FieldRef = Arc::new(Complement(outer));
        let conn = ConnectionField::new(Arc::new(PartitionBlend {
            weights: vec![b1, b2, b3],
            parts: vec![c1.field.clone(), lc, c2.field.clone()],
        }))?;
        let s = Samples::new(m, r, r, 4.0 * r, 5.0, opts);
        Ok((gt, conn, s))
    })?;
    let mut rep = report("weyl", r, radius, attempts, conn.field.as_ref(), c1.field.as_ref(), c2.field.as_ref(), &s)?;
    let metric_inner = crate::fields::norms::halton_ball(m, 2.0 * radius, opts.agreement_samples);
    let metric_outer = crate::fields::norms::halton_shell(m, 3.0 * radius, 5.0 * radius, opts.agreement_samples);
    rep.checks.push(Check::flag("metric_agreement_inner", agrees_exactly(g.field.as_ref(), g1.field.as_ref(), &metric_inner)?));
    rep.checks.push(Check::flag("metric_agreement_outer", agrees_exactly(g.field.as_ref(), g2.field.as_ref(), &metric_outer)?));
    let torsion = sampled_max(&s.domain, |p| conn.torsion_at(p))?;
    rep.checks.push(Check::at_most("torsion", torsion, 1e-10));
    let w = weyl_structure_check(&g, &conn, &s.domain)?;
    rep.checks.push(Check::at_most("weyl_residual", w.residual, 1e-8));
    Ok(TransplantResult { output: TransplantOutput { metric: Some(g), connection: Some(conn), ..Default::default() }, report: rep })
}

/// `ω = σ · ½ J*δΩ` with `(J*θ)_i = J_i^a θ_a` and `J² = σ Id`; needs coordinate jets.
/// The sign makes the Weyl connection of `(g, ω)` parallelize `J`.
#[derive(Clone, Debug)]
struct AntiLeeForm {
    g: FieldRef,
    j: FieldRef,
    sign: f64,
}

impl Field for AntiLeeForm {
    fn dim(&self) -> usize {
        self.g.dim()
    }
    fn slots(&self) -> Vec<Variance> {
        vec![Co]
    }
    fn max_order(&self) -> usize {
        self.g.max_order().saturating_sub(2).min(self.j.max_order().saturating_sub(1))
    }
    fn eval(&self, x: &[Jet]) -> Result<JetTensor> {
        let p = coordinate_point(x).ok_or(GeomError::NotComposable("anti-Lee form"))?;
        let k = x[0].order();
        let gj = eval_at(self.g.as_ref(), &p, k + 2)?;
        let jj = eval_at(self.j.as_ref(), &p, k + 1)?;
        let omega = kahler_form_jets(&gj, &jj);
        let ginv = inverse_metric(&gj)?;
        let gamma = christoffel(&gj)?;
        let delta = codifferential(&omega, &ginv, &gamma)?;
        Ok(einsum("ia,a->i", &[&jj, &delta]).scale(0.5 * self.sign))
    }
}

/// The anti-Lee form of a (para)-Hermitian pair.
pub fn anti_lee_form(g: &MetricField, j: &EndoField) -> Result<OneFormField> {
    OneFormField::new(Arc::new(AntiLeeForm { g: g.field.clone(), j: j.field.clone(), sign: j.kind.sign() }))
}

/// The Kähler–Weyl structure of a 4-dimensional (para)-Hermitian pair.
#[derive(Clone, Debug)]
pub struct KahlerWeyl {
    pub connection: ConnectionField,
    pub lee: OneFormField,
    pub nabla_j: f64,
    pub weyl_residual: f64,
}

/// Construct and verify the unique Kähler–Weyl structure; only `m = 4`.
pub fn kahler_weyl_4d(g: &MetricField, j: &EndoField, points: &[Vec<f64>]) -> Result<KahlerWeyl> {
    let m = g.dim();
    if m != 4 {
        return Err(GeomError::Precondition(format!("the Kähler–Weyl construction is only available in dimension 4, got {m}")));
    }
    let nij = sampled_max(points, |p| Ok(nijenhuis_jets(&j.at(p, 1)?)?.max_abs_value()))?;
    if nij > 1e-8 {
        return Err(GeomError::Precondition(format!("structure is not integrable (|N_J| = {nij:e})")));
    }
    let lee = anti_lee_form(g, j)?;
    let connection = weyl_connection(g, &lee)?;
    let nabla_j = sampled_max(points, |p| {
        let x = coordinate_jets(p, 0)?;
        let gamma = connection.field.eval(&x)?;
        Ok(covariant_derivative(&j.at(p, 1)?, &gamma)?.max_abs_value())
    })?;
    let weyl_residual = weyl_structure_check(g, &connection, points)?.residual;
    Ok(KahlerWeyl { connection, lee, nabla_j, weyl_residual })
}
