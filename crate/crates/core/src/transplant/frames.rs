//! Transplanting (para)-complex structures by interpolating adapted frames.

use std::sync::Arc;

use crate::curvature::compatibility_defect;
use crate::error::{GeomError, Result};
use crate::fields::{
    compose_with_rescaled_argument, mesa, pullback_average, EndoField, Field, FieldRef, MetricField, PlateauSwitch,
    StructureKind,
};
use crate::jets::{einsum, Jet, JetTensor, Variance};

use super::{
    agrees_exactly, check_nondegenerate, metric_blend, report, sampled_max, verify_flags, with_retries, Check, Samples,
    TransplantOptions, TransplantOutput, TransplantResult,
};

use Variance::{Co, Contra};

/// Frame `e_i = ∂_i`, `e_{i+n} = J ∂_i` (`i < n`), stored as rows `E[a][j]`.
#[derive(Clone, Debug)]
struct AdaptedFrame {
    j: FieldRef,
}

impl Field for AdaptedFrame {
    fn dim(&self) -> usize {
        self.j.dim()
    }
    fn slots(&self) -> Vec<Variance> {
        vec![Co, Contra]
    }
    fn max_order(&self) -> usize {
        self.j.max_order()
    }
    fn eval(&self, x: &[Jet]) -> Result<JetTensor> {
        let m = self.dim();
        let n = m / 2;
        let j = self.j.eval(x)?;
        JetTensor::from_fn(m, &[Co, Contra], |idx| {
            let (a, b) = (idx[0], idx[1]);
            Ok(if a < n {
                j.component(&[0, 0]).constant_like(if a == b { 1.0 } else { 0.0 })
            } else {
                j.component(&[a - n, b])
            })
        })
    }
}

/// `Θ = E F⁻¹`, so that `E = Θ F`.
#[derive(Clone, Debug)]
struct FrameRatio {
    e: FieldRef,
    f: FieldRef,
}

impl Field for FrameRatio {
    fn dim(&self) -> usize {
        self.e.dim()
    }
    fn slots(&self) -> Vec<Variance> {
        vec![Co, Contra]
    }
    fn max_order(&self) -> usize {
        self.e.max_order().min(self.f.max_order())
    }
    fn eval(&self, x: &[Jet]) -> Result<JetTensor> {
        let e = self.e.eval(x)?;
        let finv = self.f.eval(x)?.inverse().map_err(|_| GeomError::Degenerate("host frame is singular".into()))?;
        Ok(einsum("ia,ab->ib", &[&e, &finv]))
    }
}

/// `J̃ = G⁻¹ D G` with `G = Θ(φx) F`.
#[derive(Clone, Debug)]
struct FrameStructure {
    theta: FieldRef,
    f: FieldRef,
    kind: StructureKind,
}

impl Field for FrameStructure {
    fn dim(&self) -> usize {
        self.f.dim()
    }
    fn slots(&self) -> Vec<Variance> {
        vec![Co, Contra]
    }
    fn max_order(&self) -> usize {
        self.theta.max_order().min(self.f.max_order())
    }
    fn eval(&self, x: &[Jet]) -> Result<JetTensor> {
        let m = self.dim();
        let theta = self.theta.eval(x)?;
        let f = self.f.eval(x)?;
        let g = einsum("ia,ab->ib", &[&theta, &f]);
        let ginv = g.inverse().map_err(|_| GeomError::Degenerate("interpolated frame is singular".into()))?;
        let d = JetTensor::constant(m, &[Co, Contra], g.order(), &crate::fields::standard_endomorphism(m, self.kind))?;
        Ok(einsum("ia,ab,bj->ij", &[&ginv, &d, &g]))
    }
}

fn frame_det(frame: &dyn Field, p: &[f64]) -> Result<f64> {
    let m = frame.dim();
    let v = crate::fields::eval_at(frame, p, 0)?.values();
    Ok(nalgebra::DMatrix::from_row_slice(m, m, &v).determinant())
}

fn check_j_normal(name: &str, j: &EndoField) -> Result<()> {
    let m = j.dim();
    let std = crate::fields::standard_endomorphism(m, j.kind);
    let v = j.at(&vec![0.0; m], 0)?.values();
    let d = v.iter().zip(&std).fold(0.0f64, |s, (a, b)| s.max((a - b).abs()));
    if d > 1e-10 {
        return Err(GeomError::Precondition(format!(
            "{name} structure is not in standard block form at the origin (defect {d:e}); normalize it first"
        )));
    }
    Ok(())
}

struct ComplexParts {
    out: EndoField,
    theta: FieldRef,
    frame: FieldRef,
}

fn build_structure(germ: &EndoField, host: &EndoField, r: f64) -> Result<ComplexParts> {
    let m = germ.dim();
    let phi: FieldRef = Arc::new(mesa(m, r)?);
    let e: FieldRef = Arc::new(AdaptedFrame { j: germ.field.clone() });
    let f: FieldRef = Arc::new(AdaptedFrame { j: host.field.clone() });
    let theta: FieldRef = Arc::new(FrameRatio { e, f: f.clone() });
    if crate::fields::same_field(&germ.field, &host.field) {
        return Ok(ComplexParts { out: host.clone(), theta, frame: f });
    }
    let theta_phi = compose_with_rescaled_argument(theta.clone(), phi.clone())?;
    let transition: FieldRef = Arc::new(FrameStructure { theta: theta_phi.clone(), f: f.clone(), kind: germ.kind });
    let out = PlateauSwitch::shared(phi, germ.field.clone(), host.field.clone(), transition)?;
    // `EndoField::new` checks the origin, where the germ is returned verbatim
    Ok(ComplexParts { out: EndoField::new(out, germ.kind)?, theta, frame: f })
}

fn check_frames(parts: &ComplexParts, points: &[Vec<f64>]) -> Result<()> {
    let dets: Vec<Result<f64>> = points
        .iter()
        .map(|p| {
            let f = frame_det(parts.frame.as_ref(), p)?;
            let t = frame_det(parts.theta.as_ref(), p).map_err(|_| GeomError::Degenerate("Θ is singular".into()))?;
            Ok(f.abs().min(t.abs()))
        })
        .collect();
    for d in dets {
        if d? < 1e-8 {
            return Err(GeomError::Degenerate("adapted frames degenerate inside the working ball".into()));
        }
    }
    Ok(())
}

/// Transplant a (para)-complex structure; both inputs must be standard at the origin.
pub fn transplant_almost_complex(
    germ: &EndoField,
    host: &EndoField,
    r: f64,
    opts: &TransplantOptions,
) -> Result<TransplantResult> {
    let m = germ.dim();
    if host.dim() != m {
        return Err(GeomError::DimensionMismatch { expected: m, found: host.dim() });
    }
    if germ.kind != host.kind {
        return Err(GeomError::Precondition("germ and host structures are of different kinds".into()));
    }
    check_j_normal("germ", germ)?;
    check_j_normal("host", host)?;
    let ((parts, s), radius, attempts) = with_retries(r, opts, |r| {
        let parts = build_structure(germ, host, r)?;
        let s = Samples::standard(m, r, opts);
        // Θ is evaluated at φ(x)x, which stays in the ball of radius |x|
        check_frames(&parts, &s.domain)?;
        Ok((parts, s))
    })?;
    let out = &parts.out;
    let mut rep = report(
        "almost-complex",
        r,
        radius,
        attempts,
        out.field.as_ref(),
        germ.field.as_ref(),
        host.field.as_ref(),
        &s,
    )?;
    let theta0 = crate::fields::eval_at(parts.theta.as_ref(), &vec![0.0; m], 0)?;
    let id = JetTensor::identity(m, 0)?;
    rep.checks.push(Check::at_most("theta_at_origin", theta0.max_abs_diff(&id), 1e-12));
    rep.checks.push(Check::at_most("square", sampled_max(&s.domain, |p| out.square_defect(p))?, 1e-10));
    Ok(TransplantResult { output: TransplantOutput { endo: Some(parts.out), ..Default::default() }, report: rep })
}

fn check_pair_normalized(name: &str, g: &MetricField, j: &EndoField) -> Result<()> {
    let f = verify_flags(g, Some(j))?;
    if !(f.value && f.derivative && f.j_normal) {
        return Err(GeomError::Precondition(format!(
            "{name} pair is not normalized (g(0): {}, ∂g(0) = 0: {}, J(0): {}); normalize it first",
            f.value, f.derivative, f.j_normal
        )));
    }
    Ok(())
}

/// Transplant an almost (para)-Hermitian pair. With `keep_host_j` the host
/// structure is kept, which requires the germ structure to coincide with it.
pub fn transplant_almost_hermitian(
    germ: (&MetricField, &EndoField),
    host: (&MetricField, &EndoField),
    r: f64,
    keep_host_j: bool,
    opts: &TransplantOptions,
) -> Result<TransplantResult> {
    let (g1, j1) = germ;
    let (g2, j2) = host;
    let m = g1.dim();
    if j1.kind != j2.kind {
        return Err(GeomError::Precondition("germ and host structures are of different kinds".into()));
    }
    check_pair_normalized("germ", g1, j1)?;
    check_pair_normalized("host", g2, j2)?;
    let origin = vec![0.0; m];
    let d0 = g1.at(&origin, 0)?.max_abs_diff(&g2.at(&origin, 0)?);
    if d0 > 1e-10 {
        return Err(GeomError::Precondition("germ and host metrics differ at the origin".into()));
    }
    let kind = j1.kind;
    let ((g, j, s), radius, attempts) = with_retries(r, opts, |r| {
        let s = Samples::standard(m, r, opts);
        let j = if keep_host_j {
            let d = sampled_max(&s.domain, |p| Ok(j1.at(p, 1)?.max_abs_diff(&j2.at(p, 1)?)))?;
            if d > 0.0 {
                return Err(GeomError::Precondition(format!(
                    "keeping the host structure needs the germ structure to coincide with it (difference {d:e})"
                )));
            }
            j2.clone()
        } else {
            let parts = build_structure(j1, j2, r)?;
            check_frames(&parts, &s.domain)?;
            parts.out
        };
        let g3 = metric_blend(g1, g2, r, (1.0, 2.0, 3.0), &TransplantOptions { max_retries: 0, ..*opts }, "metric")?;
        let g3 = g3.output.metric.expect("metric output");
        let avg = pullback_average(g3.field, j.field.clone(), kind)?;
        let phi: FieldRef = Arc::new(mesa(m, r)?);
        let g = MetricField::new(PlateauSwitch::shared(phi, g1.field.clone(), g2.field.clone(), avg)?, g2.signature)?;
        check_nondegenerate(&g, &s.domain)?;
        Ok((g, j, s))
    })?;
    let mut rep = report("almost-hermitian", r, radius, attempts, g.field.as_ref(), g1.field.as_ref(), g2.field.as_ref(), &s)?;
    rep.checks.push(Check::flag("j_agreement_inner", agrees_exactly(j.field.as_ref(), j1.field.as_ref(), &s.inner)?));
    rep.checks.push(Check::flag("j_agreement_outer", agrees_exactly(j.field.as_ref(), j2.field.as_ref(), &s.outer)?));
    rep.checks.push(Check::flag("nondegenerate", true));
    rep.checks.push(Check::at_most("square", sampled_max(&s.domain, |p| j.square_defect(p))?, 1e-10));
    rep.checks.push(Check::at_most("compatibility", sampled_max(&s.domain, |p| compatibility_defect(&g, &j, p))?, 1e-10));
    Ok(TransplantResult { output: TransplantOutput { metric: Some(g), endo: Some(j), ..Default::default() }, report: rep })
}
