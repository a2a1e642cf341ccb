//! Quantities attached to a metric together with an endomorphism `J`.
//!
//! `σ = kind.sign()`: `J² = σ Id` and compatibility reads `g(JX, JY) = −σ g(X, Y)`.

use serde::Serialize;

use crate::error::Result;
use crate::fields::{EndoField, MetricField, StructureKind};
use crate::jets::{einsum, index_tuples, JetTensor};

use super::{covariant_derivative, exterior_derivative, metric_jets, MetricGeometry};

/// `Ω_ij = g(∂_i, J ∂_j) = J_j^a g_ia`.
pub fn kahler_form_jets(g: &JetTensor, j: &JetTensor) -> JetTensor {
    einsum("ja,ia->ij", &[j, g])
}

pub fn kahler_form(g: &MetricField, j: &EndoField, p: &[f64], order: usize) -> Result<JetTensor> {
    Ok(kahler_form_jets(&metric_jets(g, p, order)?, &j.at(p, order)?))
}

/// `max |J_i^a J_j^b g_ab + σ g_ij|` over the values.
pub fn compatibility_defect_jets(g: &JetTensor, j: &JetTensor, kind: StructureKind) -> f64 {
    let jjg = einsum("ia,jb,ab->ij", &[j, j, g]);
    jjg.lin_comb(1.0, g, kind.sign()).max_abs_value()
}

pub fn compatibility_defect(g: &MetricField, j: &EndoField, p: &[f64]) -> Result<f64> {
    Ok(compatibility_defect_jets(&metric_jets(g, p, 0)?, &j.at(p, 0)?, j.kind))
}

/// Nijenhuis tensor `N(∂_i, ∂_j) = N_ij^b ∂_b` with
/// `N(X, Y) = [JX, JY] − J[JX, Y] − J[X, JY] + J²[X, Y]`; one order lower than `J`.
pub fn nijenhuis_jets(j: &JetTensor) -> Result<JetTensor> {
    let dj = j.partials()?; // dj[i,a,c] = ∂_c J_i^a
    let t1 = einsum("ia,jba->ijb", &[j, &dj]);
    let t2 = einsum("ja,iba->ijb", &[j, &dj]);
    let t3 = einsum("iaj,ab->ijb", &[&dj, j]);
    let t4 = einsum("jai,ab->ijb", &[&dj, j]);
    Ok(t1.sub(&t2).add(&t3).sub(&t4))
}

pub fn nijenhuis(j: &EndoField, p: &[f64]) -> Result<JetTensor> {
    nijenhuis_jets(&j.at(p, 1)?)
}

/// `ρ*` and `τ*` at a point.
#[derive(Clone, Debug, Serialize)]
pub struct StarRicciData {
    pub star_ricci: Vec<f64>,
    pub star_scalar: f64,
}

/// `ρ*_ij = ½ J_j^b J_k^c R_ibc^k`, normalized so that `ρ* = ρ` for Kähler metrics.
pub fn star_ricci_jets(geo: &MetricGeometry, j: &JetTensor) -> (JetTensor, f64) {
    let j = j.truncate(geo.r_up.order());
    let rho = einsum("jb,kc,ibck->ij", &[&j, &j, &geo.r_up]).scale(0.5);
    let tau = einsum("ij,ij->", &[&rho, &geo.ginv.truncate(rho.order())]).as_scalar().value();
    (rho, tau)
}

pub fn star_ricci(g: &MetricField, j: &EndoField, p: &[f64]) -> Result<StarRicciData> {
    let geo = MetricGeometry::at(g, p, 0)?;
    let (rho, tau) = star_ricci_jets(&geo, &j.at(p, 0)?);
    Ok(StarRicciData { star_ricci: rho.values(), star_scalar: tau })
}

/// `max |R_ijkl + σ R_ijab J_k^a J_l^b|` over the values.
pub fn kahler_symmetry_defect_jets(r: &JetTensor, j: &JetTensor, kind: StructureKind) -> f64 {
    let rv = r.values();
    let jv = j.values();
    let m = r.dim();
    let mut worst = 0.0f64;
    for idx in index_tuples(m, 4) {
        let (i, jj, k, l) = (idx[0], idx[1], idx[2], idx[3]);
        let mut s = 0.0;
        for a in 0..m {
            let jka = jv[k * m + a];
            if jka == 0.0 {
                continue;
            }
            for b in 0..m {
                s += rv[((i * m + jj) * m + a) * m + b] * jka * jv[l * m + b];
            }
        }
        worst = worst.max((rv[((i * m + jj) * m + k) * m + l] + kind.sign() * s).abs());
    }
    worst
}

pub fn kahler_symmetry_defect(g: &MetricField, j: &EndoField, p: &[f64]) -> Result<f64> {
    let geo = MetricGeometry::at(g, p, 0)?;
    Ok(kahler_symmetry_defect_jets(&geo.r, &j.at(p, 0)?, j.kind))
}

/// Pointwise sup-norms of the four equivalent Kähler conditions.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct KahlerCriteria {
    pub nabla_omega: f64,
    pub nabla_j: f64,
    pub nijenhuis: f64,
    pub d_omega: f64,
    pub compatibility: f64,
}

impl KahlerCriteria {
    pub fn max(&self) -> f64 {
        [self.nabla_omega, self.nabla_j, self.nijenhuis, self.d_omega, self.compatibility]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub fn kahler_criteria(g: &MetricField, j: &EndoField, p: &[f64]) -> Result<KahlerCriteria> {
    let gj = metric_jets(g, p, 1)?;
    let jj = j.at(p, 1)?;
    let gamma = super::christoffel(&gj)?;
    let omega = kahler_form_jets(&gj, &jj);
    Ok(KahlerCriteria {
        nabla_omega: covariant_derivative(&omega, &gamma)?.max_abs_value(),
        nabla_j: covariant_derivative(&jj, &gamma)?.max_abs_value(),
        nijenhuis: nijenhuis_jets(&jj)?.max_abs_value(),
        d_omega: exterior_derivative(&omega)?.max_abs_value(),
        compatibility: compatibility_defect_jets(&gj, &jj, j.kind),
    })
}
