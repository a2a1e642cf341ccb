//! Pointwise evaluation of universal curvature identities in dimension 4.
//!
//! Each identity returns its residual tensors at a point together with a
//! scale, the largest weighted term entering them, so that residuals can be
//! judged relative to the size of the curvature involved.

pub mod terms;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::curvature::{compatibility_defect, kahler_criteria, star_ricci_jets, MetricGeometry};
use crate::error::{GeomError, Result};
use crate::fields::{EndoField, MetricField, StructureKind};
use crate::jets::{einsum, JetTensor};
use terms::{combine, term_scale, HermitianJets, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Identity {
    Berger,
    Gray,
    Pontrjagin,
    Chern,
    Kahler,
}

impl Identity {
    pub const ALL: [Identity; 5] = [Self::Berger, Self::Gray, Self::Pontrjagin, Self::Chern, Self::Kahler];

    pub fn name(self) -> &'static str {
        match self {
            Self::Berger => "berger",
            Self::Gray => "gray",
            Self::Pontrjagin => "pontrjagin",
            Self::Chern => "chern",
            Self::Kahler => "kahler",
        }
    }

    pub fn default_tolerance(self) -> f64 {
        match self {
            Self::Pontrjagin | Self::Chern => 1e-6,
            _ => 1e-8,
        }
    }

    pub fn needs_structure(self) -> bool {
        self != Self::Berger
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Identity {
    type Err = GeomError;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|i| i.name() == s)
            .ok_or_else(|| GeomError::Precondition(format!("unknown identity {s:?}")))
    }
}

/// Sign of the term `4 J_j^a J^ub R_abk^l R_iul^k` following the bracket in
/// `T′`, which the displayed formula leaves unmarked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum JoinSign {
    Plus,
    Minus,
}

impl JoinSign {
    pub fn value(self) -> f64 {
        match self {
            Self::Plus => 1.0,
            Self::Minus => -1.0,
        }
    }
}

/// The sign for which the identities hold; `Plus` leaves the coupling identity
/// violated at order one (see the adjudication test).
pub const DEFAULT_JOIN_SIGN: JoinSign = JoinSign::Minus;

/// Residual tensors of one identity at one point.
#[derive(Clone, Debug, Serialize)]
pub struct Residual {
    /// Named residual tensors, row-major component values.
    pub tensors: Vec<(String, Vec<f64>)>,
    /// Largest absolute component over all residual tensors.
    pub absolute: f64,
    /// Largest weighted term entering the residuals.
    pub scale: f64,
}

impl Residual {
    fn new(tensors: Vec<(String, JetTensor)>, scale: f64) -> Self {
        let absolute = tensors.iter().map(|(_, t)| t.max_abs_value()).fold(0.0, f64::max);
        Self { tensors: tensors.into_iter().map(|(n, t)| (n, t.values())).collect(), absolute, scale }
    }

    /// `absolute / scale`, and 0 when both vanish.
    pub fn relative(&self) -> f64 {
        if self.absolute == 0.0 {
            0.0
        } else {
            self.absolute / self.scale.max(f64::MIN_POSITIVE)
        }
    }
}

fn require_dim4(m: usize) -> Result<()> {
    if m != 4 {
        return Err(GeomError::Precondition(format!("the identity is stated in dimension 4, input has dimension {m}")));
    }
    Ok(())
}

fn scaled(name: &'static str, c: f64, t: JetTensor) -> Term {
    Term { name, coefficient: c, value: t }
}

/// `¼(|R|² − 4|ρ|² + τ²)g − Ř + 2ρ̌ + Lρ − τρ`.
pub fn berger_residual(g: &MetricField, p: &[f64]) -> Result<Residual> {
    require_dim4(g.dim())?;
    let geo = MetricGeometry::at(g, p, 0)?;
    let q = geo.quadratic();
    let tau = &geo.scalar;
    let c = &(&(&q.norm_r_sq - &(&q.norm_ricci_sq * 4.0)) + &(tau * tau)) * 0.25;
    let terms = vec![
        scaled("g", 1.0, geo.g.mul_scalar(&c)),
        scaled("Ř", -1.0, q.r_check),
        scaled("ρ̌", 2.0, q.ricci_check),
        scaled("Lρ", 1.0, q.l_ricci),
        scaled("τρ", -1.0, geo.ricci.mul_scalar(tau)),
    ];
    Ok(Residual::new(vec![("berger".into(), combine(&terms))], term_scale(&terms)))
}

fn require_hermitian(g: &MetricField, j: &EndoField, p: &[f64]) -> Result<()> {
    require_dim4(g.dim())?;
    if j.dim() != g.dim() {
        return Err(GeomError::DimensionMismatch { expected: g.dim(), found: j.dim() });
    }
    if j.kind != StructureKind::Complex {
        return Err(GeomError::Precondition("the identity concerns almost Hermitian (complex) structures".into()));
    }
    let d = compatibility_defect(g, j, p)?;
    if d > 1e-8 {
        return Err(GeomError::Precondition(format!("metric and structure are not compatible at {p:?} (defect {d:e})")));
    }
    Ok(())
}

/// `ρ*_ij + ρ*_ji − ρ_ij − J_i^a J_j^b ρ_ab − ½(τ* − τ) g_ij`.
pub fn gray_residual(g: &MetricField, j: &EndoField, p: &[f64]) -> Result<Residual> {
    require_hermitian(g, j, p)?;
    let geo = MetricGeometry::at(g, p, 0)?;
    let jj = j.at(p, 0)?;
    let (rs, tau_star) = star_ricci_jets(&geo, &jj);
    let tau = geo.scalar.value();
    let terms = vec![
        scaled("ρ*", 1.0, rs.clone()),
        scaled("ρ*ᵀ", 1.0, einsum("ji->ij", &[&rs])),
        scaled("ρ", -1.0, geo.ricci.clone()),
        scaled("J*ρ", -1.0, einsum("ia,jb,ab->ij", &[&jj, &jj, &geo.ricci])),
        scaled("g", -0.5 * (tau_star - tau), geo.g.clone()),
    ];
    Ok(Residual::new(vec![("gray".into(), combine(&terms))], term_scale(&terms)))
}

/// Jets of `(g, J)` at `p` of the order the fourth-order identities need.
pub fn hermitian_jets(g: &MetricField, j: &EndoField, p: &[f64]) -> Result<HermitianJets> {
    HermitianJets::new(g.at(p, 4)?, j.at(p, 4)?)
}

fn sym(t: &JetTensor) -> JetTensor {
    t.lin_comb(0.5, &einsum("ji->ij", &[t]), 0.5)
}

fn antisym(t: &JetTensor) -> JetTensor {
    t.lin_comb(0.5, &einsum("ji->ij", &[t]), -0.5)
}

/// The three residuals `A_ij − A_ab J_i^a J_j^b`, `B_ij − B_ab J_i^a J_j^b`
/// and `A_ib J_j^b + B_ij` for covariant `A`, `B`.
fn pair_residuals(prefix: &str, a: &JetTensor, b: &JetTensor, j: &JetTensor) -> Vec<(String, JetTensor)> {
    let a = a.truncate(0);
    let b = b.truncate(0);
    let j = j.truncate(0);
    vec![
        (format!("{prefix}_invariance_a"), a.sub(&einsum("ia,jb,ab->ij", &[&j, &j, &a]))),
        (format!("{prefix}_invariance_b"), b.sub(&einsum("ia,jb,ab->ij", &[&j, &j, &b]))),
        (format!("{prefix}_coupling"), einsum("ib,jb->ij", &[&a, &j]).add(&b)),
    ]
}

/// `T′` and `S′` at a point for a given joining sign.
pub fn pontrjagin_tensors(h: &HermitianJets, join: JoinSign) -> Result<(JetTensor, JetTensor, f64)> {
    let t_terms = terms::t_prime_terms(h, join.value())?;
    let s_terms = terms::s_prime_terms(h);
    let t_prime = combine(&t_terms).truncate(0);
    let s_prime = combine(&s_terms).truncate(0);
    let scale = term_scale(&t_terms).max(term_scale(&s_terms));
    Ok((t_prime, s_prime, scale))
}

/// Residuals of the Pontrjagin identities: `T = J*T`, `S = J*S`, `T_ib J_j^b + S_ij = 0`
/// with `T = sym T′` and `S = antisym S′`.
pub fn pontrjagin_residuals(g: &MetricField, j: &EndoField, p: &[f64], join: JoinSign) -> Result<Residual> {
    require_hermitian(g, j, p)?;
    let h = hermitian_jets(g, j, p)?;
    let (tp, sp, scale) = pontrjagin_tensors(&h, join)?;
    Ok(Residual::new(pair_residuals("pontrjagin", &sym(&tp), &antisym(&sp), &h.j), scale))
}

/// `U′^ij` and `V′^pq` at a point.
pub fn chern_tensors(h: &HermitianJets) -> Result<(JetTensor, JetTensor, f64)> {
    let u_terms = terms::u_prime_terms(h)?;
    let v_terms = terms::v_prime_terms(h)?;
    let scale = term_scale(&u_terms).max(term_scale(&v_terms));
    Ok((combine(&u_terms).truncate(0), combine(&v_terms).truncate(0), scale))
}

/// Residuals of the Chern identities for `U = sym U′` and `V = antisym V′`,
/// both lowered with the metric.
pub fn chern_residuals(g: &MetricField, j: &EndoField, p: &[f64]) -> Result<Residual> {
    require_hermitian(g, j, p)?;
    let h = hermitian_jets(g, j, p)?;
    let (up, vp, scale) = chern_tensors(&h)?;
    let g0 = h.geo.g.truncate(0);
    let lower = |t: &JetTensor| einsum("ia,jb,ab->ij", &[&g0, &g0, t]);
    let u = lower(&sym(&up));
    let v = lower(&antisym(&vp));
    Ok(Residual::new(pair_residuals("chern", &u, &v, &h.j), scale))
}

/// Kähler identities `2ρ̌ − τρ − ½(|ρ|² − τ²/2)g` and `2Lρ − 8ρ̌ + 2τρ + ½(2|ρ|² − τ²)g`.
pub fn kahler_identity_residuals(g: &MetricField, j: &EndoField, p: &[f64]) -> Result<Residual> {
    require_hermitian(g, j, p)?;
    let c = kahler_criteria(g, j, p)?;
    if c.max() > 1e-8 {
        return Err(GeomError::Precondition(format!("input is not Kähler at {p:?} (criteria {c:?})")));
    }
    let geo = MetricGeometry::at(g, p, 0)?;
    let q = geo.quadratic();
    let tau = geo.scalar.value();
    let n = q.norm_ricci_sq.value();
    let first = vec![
        scaled("ρ̌", 2.0, q.ricci_check.clone()),
        scaled("τρ", -tau, geo.ricci.clone()),
        scaled("g", -0.5 * (n - 0.5 * tau * tau), geo.g.clone()),
    ];
    let second = vec![
        scaled("Lρ", 2.0, q.l_ricci.clone()),
        scaled("ρ̌", -8.0, q.ricci_check.clone()),
        scaled("τρ", 2.0 * tau, geo.ricci.clone()),
        scaled("g", 0.5 * (2.0 * n - tau * tau), geo.g.clone()),
    ];
    let scale = term_scale(&first).max(term_scale(&second));
    Ok(Residual::new(vec![("kahler_first".into(), combine(&first)), ("kahler_second".into(), combine(&second))], scale))
}

/// Residual of `identity` at `p`; `j` is required for all but Berger.
pub fn residual_at(identity: Identity, g: &MetricField, j: Option<&EndoField>, p: &[f64]) -> Result<Residual> {
    let need = || j.ok_or_else(|| GeomError::Precondition(format!("the {identity} identity needs a structure J")));
    match identity {
        Identity::Berger => berger_residual(g, p),
        Identity::Gray => gray_residual(g, need()?, p),
        Identity::Pontrjagin => pontrjagin_residuals(g, need()?, p, DEFAULT_JOIN_SIGN),
        Identity::Chern => chern_residuals(g, need()?, p),
        Identity::Kahler => kahler_identity_residuals(g, need()?, p),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PointResidual {
    pub point: Vec<f64>,
    /// Relative residual.
    pub residual: f64,
    pub absolute: f64,
    pub scale: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub identity: Identity,
    pub tolerance: f64,
    pub points_sampled: usize,
    pub max_residual: f64,
    pub passed: bool,
    pub points: Vec<PointResidual>,
}

impl IdentityReport {
    /// CSV with one row per point: coordinates, relative, absolute residual and scale.
    pub fn to_csv(&self) -> String {
        let m = self.points.first().map_or(0, |p| p.point.len());
        let mut out: Vec<String> = (0..m).map(|i| format!("x{i}")).collect();
        out.extend(["residual", "absolute", "scale"].map(String::from));
        let mut s = out.join(",") + "\n";
        for p in &self.points {
            let mut row: Vec<String> = p.point.iter().map(|v| format!("{v:e}")).collect();
            row.extend([p.residual, p.absolute, p.scale].map(|v| format!("{v:e}")));
            s += &(row.join(",") + "\n");
        }
        s
    }
}

/// Evaluate an identity at each point, in parallel, keeping input order.
pub fn verify(
    identity: Identity,
    g: &MetricField,
    j: Option<&EndoField>,
    points: &[Vec<f64>],
    tolerance: f64,
) -> Result<IdentityReport> {
    let rows: Vec<PointResidual> = points
        .par_iter()
        .map(|p| {
            let r = residual_at(identity, g, j, p)?;
            Ok(PointResidual { point: p.clone(), residual: r.relative(), absolute: r.absolute, scale: r.scale })
        })
        .collect::<Result<_>>()?;
    let max_residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    Ok(IdentityReport {
        identity,
        tolerance,
        points_sampled: rows.len(),
        max_residual,
        passed: max_residual <= tolerance,
        points: rows,
    })
}
