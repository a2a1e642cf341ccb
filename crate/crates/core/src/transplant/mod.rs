//! Replacing a structure near the origin by a given germ while leaving it
//! unchanged away from the origin.
//!
//! Every construction blends with the mesa cutoff `φ_r`, so the output agrees
//! exactly with the germ on `B_r` and with the host outside `B_{2r}`. The
//! postconditions are verified on deterministic sample points of the working
//! ball and reported alongside the output fields.

mod frames;
mod kahler;
mod normalize;
mod weyl;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::fields::norms::{halton_ball, halton_shell, sampled_deviation, Norms};
use crate::fields::{ConnectionField, EndoField, Field, MetricField};
use crate::jets::coordinate_jets;

pub use frames::{transplant_almost_complex, transplant_almost_hermitian};
pub use kahler::{kahler_operator, kahler_potential_solve, transplant_kahler, KahlerGerm};
pub(crate) use normalize::adapted_basis;
pub use normalize::{normalize_connection, normalize_metric, normalize_pair, verify_flags, NormalizationFlags, NormalizedGerm};
pub use weyl::{
    anti_lee_form, kahler_weyl_4d, transplant_weyl, weyl_connection, weyl_structure_check, KahlerWeyl, WeylCheck,
};

/// Sampling and retry settings shared by the transplant operations.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TransplantOptions {
    /// Points sampled in the working ball for invariants and deviations.
    pub samples: usize,
    /// Points sampled in each agreement region.
    pub agreement_samples: usize,
    /// How often `r` may be halved after a degeneracy.
    pub max_retries: usize,
}

impl Default for TransplantOptions {
    fn default() -> Self {
        Self { samples: 200, agreement_samples: 50, max_retries: 8 }
    }
}

/// Outcome of one sampled postcondition.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.to_string(), value, tolerance, passed: value <= tolerance }
    }

    pub fn flag(name: &str, ok: bool) -> Self {
        Self { name: name.to_string(), value: if ok { 0.0 } else { 1.0 }, tolerance: 0.0, passed: ok }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TransplantReport {
    pub kind: String,
    pub radius_requested: f64,
    pub radius: f64,
    pub attempts: usize,
    pub samples: usize,
    /// Sampled `‖out − host‖` and `‖out − host‖¹` over the working ball.
    pub deviation: Norms,
    pub agreement_inner: bool,
    pub agreement_outer: bool,
    pub checks: Vec<Check>,
}

impl TransplantReport {
    pub fn passed(&self) -> bool {
        self.agreement_inner && self.agreement_outer && self.checks.iter().all(|c| c.passed)
    }
}

/// Output fields of a transplant; which are present depends on the kind.
#[derive(Clone, Debug, Default)]
pub struct TransplantOutput {
    pub metric: Option<MetricField>,
    pub endo: Option<EndoField>,
    pub connection: Option<ConnectionField>,
}

#[derive(Clone, Debug)]
pub struct TransplantResult {
    pub output: TransplantOutput,
    pub report: TransplantReport,
}

/// Sample points for a construction at radius `r`.
#[derive(Clone, Debug)]
pub(crate) struct Samples {
    pub domain: Vec<Vec<f64>>,
    pub inner: Vec<Vec<f64>>,
    pub outer: Vec<Vec<f64>>,
}

impl Samples {
    /// Domain `B_{extent·r}`, inner region `B_{inner}`, outer shell `[outer, extent·r]`.
    pub fn new(dim: usize, r: f64, inner: f64, outer: f64, extent: f64, opts: &TransplantOptions) -> Self {
        Self {
            domain: halton_ball(dim, extent * r, opts.samples),
            inner: halton_ball(dim, inner, opts.agreement_samples),
            outer: halton_shell(dim, outer, extent * r, opts.agreement_samples),
        }
    }

    pub fn standard(dim: usize, r: f64, opts: &TransplantOptions) -> Self {
        Self::new(dim, r, r, 2.0 * r, 3.0, opts)
    }
}

/// Whether two fields have identical jets (order 1) at every point.
pub(crate) fn agrees_exactly(a: &dyn Field, b: &dyn Field, points: &[Vec<f64>]) -> Result<bool> {
    let flags: Vec<bool> = points
        .par_iter()
        .map(|p| -> Result<bool> {
            let x = coordinate_jets(p, 1)?;
            Ok(a.eval(&x)?.exactly_equal(&b.eval(&x)?))
        })
        .collect::<Result<_>>()?;
    Ok(flags.into_iter().all(|f| f))
}

/// Largest value of a per-point quantity.
pub(crate) fn sampled_max(points: &[Vec<f64>], f: impl Fn(&[f64]) -> Result<f64> + Sync) -> Result<f64> {
    let v: Vec<f64> = points.par_iter().map(|p| f(p)).collect::<Result<_>>()?;
    Ok(v.into_iter().fold(0.0, f64::max))
}

/// Verify nondegeneracy and signature of a metric at every point.
pub(crate) fn check_nondegenerate(g: &MetricField, points: &[Vec<f64>]) -> Result<()> {
    let results: Vec<Result<()>> = points.par_iter().map(|p| g.check_at(p)).collect();
    for r in results {
        match r {
            Err(GeomError::SingularMetric { point, det }) => {
                return Err(GeomError::Degenerate(format!("metric degenerates at {point:?} (det {det:e})")))
            }
            Err(GeomError::SignatureMismatch { .. }) => {
                return Err(GeomError::Degenerate("metric changes signature inside the working ball".into()))
            }
            other => other?,
        }
    }
    Ok(())
}

fn retryable(e: &GeomError) -> bool {
    matches!(e, GeomError::Degenerate(_) | GeomError::SingularMetric { .. })
}

/// Run `attempt(r)`, halving `r` after each degeneracy.
pub(crate) fn with_retries<T>(
    r: f64,
    opts: &TransplantOptions,
    mut attempt: impl FnMut(f64) -> Result<T>,
) -> Result<(T, f64, usize)> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(GeomError::Precondition(format!("transplant radius must be positive, got {r}")));
    }
    let mut radius = r;
    let mut last = None;
    for k in 0..=opts.max_retries {
        match attempt(radius) {
            Ok(v) => return Ok((v, radius, k + 1)),
            Err(e) if retryable(&e) => {
                last = Some(e);
                radius *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

pub(crate) fn deviation(out: &dyn Field, host: &dyn Field, s: &Samples) -> Result<Norms> {
    sampled_deviation(out, host, &s.domain)
}

/// Report skeleton with the agreement checks filled in.
#[allow(clippy::too_many_arguments)]
pub(crate) fn report(
    kind: &str,
    requested: f64,
    radius: f64,
    attempts: usize,
    out: &dyn Field,
    germ: &dyn Field,
    host: &dyn Field,
    s: &Samples,
) -> Result<TransplantReport> {
    Ok(TransplantReport {
        kind: kind.to_string(),
        radius_requested: requested,
        radius,
        attempts,
        samples: s.domain.len(),
        deviation: deviation(out, host, s)?,
        agreement_inner: agrees_exactly(out, germ, &s.inner)?,
        agreement_outer: agrees_exactly(out, host, &s.outer)?,
        checks: Vec::new(),
    })
}

/// Blend two torsion-free connections with vanishing Christoffel symbols at the origin.
pub fn transplant_connection(
    germ: &ConnectionField,
    host: &ConnectionField,
    r: f64,
    opts: &TransplantOptions,
) -> Result<TransplantResult> {
    let m = germ.dim();
    if host.dim() != m {
        return Err(GeomError::DimensionMismatch { expected: m, found: host.dim() });
    }
    for (name, c) in [("germ", germ), ("host", host)] {
        c.check_torsion_free(&vec![0.0; m])?;
        let g0 = c.at(&vec![0.0; m], 0)?.max_abs_value();
        if g0 > 1e-10 {
            return Err(GeomError::Precondition(format!(
                "{name} connection is not normalized: |Γ(0)| = {g0:e}; normalize it first"
            )));
        }
    }
    let ((out, s), radius, attempts) = with_retries(r, opts, |r| {
        let phi = std::sync::Arc::new(crate::fields::mesa(m, r)?);
        let out = crate::fields::blend(germ.field.clone(), host.field.clone(), phi)?;
        Ok((ConnectionField::new(out)?, Samples::standard(m, r, opts)))
    })?;
    let mut rep = report("connection", r, radius, attempts, out.field.as_ref(), germ.field.as_ref(), host.field.as_ref(), &s)?;
    let torsion = sampled_max(&s.domain, |p| out.torsion_at(p))?;
    rep.checks.push(Check::at_most("torsion", torsion, 1e-10));
    Ok(TransplantResult { output: TransplantOutput { connection: Some(out), ..Default::default() }, report: rep })
}

/// Blend two normalized metrics of equal signature.
pub fn transplant_metric(germ: &MetricField, host: &MetricField, r: f64, opts: &TransplantOptions) -> Result<TransplantResult> {
    metric_blend(germ, host, r, (1.0, 2.0, 3.0), opts, "metric")
}

/// Metric blend with cutoff `Mesa(a·r, b·r)` sampled over `B_{c·r}` for `(a, b, c) = radii`.
pub(crate) fn metric_blend(
    germ: &MetricField,
    host: &MetricField,
    r: f64,
    radii: (f64, f64, f64),
    opts: &TransplantOptions,
    kind: &str,
) -> Result<TransplantResult> {
    let m = germ.dim();
    if host.dim() != m {
        return Err(GeomError::DimensionMismatch { expected: m, found: host.dim() });
    }
    if germ.signature != host.signature {
        return Err(GeomError::SignatureMismatch {
            expected_p: host.signature.0,
            expected_q: host.signature.1,
            found_p: germ.signature.0,
            found_q: germ.signature.1,
        });
    }
    for (name, g) in [("germ", germ), ("host", host)] {
        let f = verify_flags(g, None)?;
        if !(f.value && f.derivative) {
            return Err(GeomError::Precondition(format!(
                "{name} metric is not normalized (g(0) standard: {}, ∂g(0) = 0: {}); normalize it first",
                f.value, f.derivative
            )));
        }
    }
    let origin = vec![0.0; m];
    if germ.at(&origin, 0)?.max_abs_diff(&host.at(&origin, 0)?) > 1e-10 {
        return Err(GeomError::Precondition("germ and host metrics differ at the origin".into()));
    }
    let ((out, s), radius, attempts) = with_retries(r, opts, |r| {
        let phi = std::sync::Arc::new(crate::fields::Mesa::new(m, radii.0 * r, radii.1 * r)?);
        let out = crate::fields::blend(germ.field.clone(), host.field.clone(), phi)?;
        let out = MetricField::new(out, host.signature)?;
        let s = Samples::new(m, r, radii.0 * r, radii.1 * r, radii.2, opts);
        check_nondegenerate(&out, &s.domain)?;
        Ok((out, s))
    })?;
    let mut rep = report(kind, r, radius, attempts, out.field.as_ref(), germ.field.as_ref(), host.field.as_ref(), &s)?;
    rep.checks.push(Check::flag("nondegenerate", true));
    let sym = sampled_max(&s.domain, |p| crate::fields::symmetry_defect(out.field.as_ref(), p))?;
    rep.checks.push(Check::at_most("symmetry", sym, 1e-12));
    Ok(TransplantResult { output: TransplantOutput { metric: Some(out), ..Default::default() }, report: rep })
}
