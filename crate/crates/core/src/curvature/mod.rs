//! Connections, curvature, covariant and exterior derivatives at a point.
//!
//! Conventions: `Γ[i,j,k] = Γ_ij^k` with `∇_{∂_i} ∂_j = Γ_ij^k ∂_k`;
//! `R(X,Y) = [∇_X, ∇_Y] − ∇_{[X,Y]}`, `R[i,j,k,l] = R_ijk^l` with
//! `R(∂_i, ∂_j) ∂_k = R_ijk^l ∂_l`, lowered as `R_ijkl = R_ijk^m g_ml`;
//! `ρ_jk = R_ijk^i`. Covariant derivatives append their slot last, so for a
//! tensor `T`, `(∇∇T)[.., a, b] = ∇_b ∇_a T[..]`.

mod hermitian;

use std::sync::Arc;

use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::fields::{eval_at, Field, FieldRef, MetricField};
use crate::jets::{coordinate_point, einsum, index_tuples, Jet, JetTensor, Variance};

pub use hermitian::{
    compatibility_defect, compatibility_defect_jets, kahler_criteria, kahler_form, kahler_form_jets,
    kahler_symmetry_defect, kahler_symmetry_defect_jets, nijenhuis, nijenhuis_jets, star_ricci, star_ricci_jets,
    KahlerCriteria, StarRicciData,
};

use Variance::{Co, Contra};

fn singular(g: &JetTensor, p: &[f64]) -> GeomError {
    let m = g.dim();
    let det = nalgebra::DMatrix::from_row_slice(m, m, &g.values()).determinant();
    GeomError::SingularMetric { point: p.to_vec(), det }
}

/// Metric jets at `p`, rejecting (numerically) singular values.
///
/// The test is scale free: `|det g|` is compared with the product of the row
/// norms (Hadamard's bound), so uniformly small metrics are accepted.
pub fn metric_jets(g: &MetricField, p: &[f64], order: usize) -> Result<JetTensor> {
    let t = g.at(p, order)?;
    let m = t.dim();
    let a = nalgebra::DMatrix::from_row_slice(m, m, &t.values());
    let det = a.determinant();
    let bound: f64 = a.row_iter().map(|r| r.norm()).product();
    if !(det.abs() > 1e-12 * bound) {
        return Err(GeomError::SingularMetric { point: p.to_vec(), det });
    }
    Ok(t)
}

/// Inverse metric jets `g^{ij}`.
pub fn inverse_metric(g: &JetTensor) -> Result<JetTensor> {
    g.inverse().map_err(|_| singular(g, &[]))
}

/// Levi-Civita Christoffel symbols from metric jets (one order lower).
pub fn christoffel(g: &JetTensor) -> Result<JetTensor> {
    let ginv = inverse_metric(g)?;
    christoffel_with_inverse(g, &ginv)
}

fn christoffel_with_inverse(g: &JetTensor, ginv: &JetTensor) -> Result<JetTensor> {
    let dg = g.partials()?; // dg[a,b,c] = ∂_c g_ab
    let a = einsum("jli->ijl", &[&dg]);
    let b = einsum("ilj->ijl", &[&dg]);
    let c = &dg; // ∂_l g_ij = dg[i,j,l]
    let s = a.add(&b).sub(c);
    Ok(einsum("ijl,lk->ijk", &[&s, ginv]).scale(0.5))
}

/// `R_ijk^l` from Christoffel jets (one order lower).
pub fn riemann_from_connection(gamma: &JetTensor) -> Result<JetTensor> {
    let dgam = gamma.partials()?; // dgam[j,k,l,i] = ∂_i Γ_jk^l
    let d1 = einsum("jkli->ijkl", &[&dgam]);
    let d2 = einsum("iklj->ijkl", &[&dgam]);
    let q1 = einsum("jkm,iml->ijkl", &[gamma, gamma]);
    let q2 = einsum("ikm,jml->ijkl", &[gamma, gamma]);
    Ok(d1.sub(&d2).add(&q1).sub(&q2))
}

/// Covariant derivative of a tensor with respect to a connection; the new
/// covariant slot is appended last. The result has one order less than
/// the lower of the two inputs' orders.
pub fn covariant_derivative(t: &JetTensor, gamma: &JetTensor) -> Result<JetTensor> {
    let mut out = t.partials()?;
    let rank = t.rank();
    if rank > 8 {
        return Err(GeomError::ValenceMismatch(format!("rank {rank} exceeds the supported maximum")));
    }
    let letters: Vec<char> = "abcdefgh".chars().take(rank).collect();
    let all: String = letters.iter().collect();
    for (s, v) in t.slots().iter().enumerate() {
        let mut inner = all.clone();
        inner.replace_range(s..s + 1, "z");
        let l = letters[s];
        let (spec, sign) = match v {
            Co => (format!("w{l}z,{inner}->{all}w"), -1.0),
            Contra => (format!("wz{l},{inner}->{all}w"), 1.0),
        };
        let corr = einsum(&spec, &[gamma, t]);
        out = out.lin_comb(1.0, &corr, sign);
    }
    Ok(out)
}

/// Exterior derivative of a p-form given as an alternating covariant tensor,
/// `(dω)_{i0..ip} = Σ_k (−1)^k ∂_{ik} ω_{i0..îk..ip}`.
pub fn exterior_derivative(omega: &JetTensor) -> Result<JetTensor> {
    if omega.slots().iter().any(|v| *v != Co) {
        return Err(GeomError::ValenceMismatch("exterior derivative of a non-covariant tensor".into()));
    }
    let p = omega.rank();
    let m = omega.dim();
    let d = omega.partials()?; // d[i1..ip, c] = ∂_c ω
    let slots = vec![Co; p + 1];
    JetTensor::from_fn(m, &slots, |idx| {
        let mut acc: Option<Jet> = None;
        for k in 0..=p {
            let mut sub: Vec<usize> = idx[..k].to_vec();
            sub.extend_from_slice(&idx[k + 1..]);
            sub.push(idx[k]);
            let term = d.component(&sub);
            let term = if k % 2 == 0 { term } else { -term };
            acc = Some(match acc {
                None => term,
                Some(a) => a + term,
            });
        }
        Ok(acc.expect("at least one term"))
    })
}

/// Codifferential of a p-form, `(δω)_{i2..ip} = −g^{ab} ∇_a ω_{b i2..ip}`.
pub fn codifferential(omega: &JetTensor, ginv: &JetTensor, gamma: &JetTensor) -> Result<JetTensor> {
    let p = omega.rank();
    if p == 0 {
        return Err(GeomError::ValenceMismatch("codifferential of a function".into()));
    }
    let nabla = covariant_derivative(omega, gamma)?; // [b, rest.., a]
    let rest: String = "cdefgh".chars().take(p - 1).collect();
    let spec = format!("b{rest}a,ab->{rest}");
    Ok(einsum(&spec, &[&nabla, ginv]).scale(-1.0))
}

/// Curvature data of a metric computed from its jets.
#[derive(Clone, Debug)]
pub struct MetricGeometry {
    pub g: JetTensor,
    pub ginv: JetTensor,
    pub gamma: JetTensor,
    /// `R_ijk^l`
    pub r_up: JetTensor,
    /// `R_ijkl`
    pub r: JetTensor,
    pub ricci: JetTensor,
    pub scalar: Jet,
}

impl MetricGeometry {
    /// From metric jets of order `K ≥ 2`; curvature has order `K − 2`.
    pub fn from_jets(g: JetTensor) -> Result<Self> {
        if g.order() < 2 {
            return Err(GeomError::InsufficientOrder { requested: 2, available: g.order() });
        }
        let ginv = inverse_metric(&g)?;
        let gamma = christoffel_with_inverse(&g, &ginv)?;
        let r_up = riemann_from_connection(&gamma)?;
        let r = einsum("ijkm,ml->ijkl", &[&r_up, &g]);
        let ricci = einsum("ijki->jk", &[&r_up]);
        let scalar = einsum("jk,jk->", &[&ricci, &ginv]).as_scalar();
        Ok(Self { g, ginv, gamma, r_up, r, ricci, scalar })
    }

    /// Metric evaluated at `p` with enough order for `extra` further derivatives of curvature.
    pub fn at(g: &MetricField, p: &[f64], extra: usize) -> Result<Self> {
        Self::from_jets(metric_jets(g, p, 2 + extra)?)
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn covariant_derivative(&self, t: &JetTensor) -> Result<JetTensor> {
        covariant_derivative(t, &self.gamma)
    }
}

/// Christoffel symbols of `g` at `p` (values only).
pub fn levi_civita(g: &MetricField, p: &[f64]) -> Result<JetTensor> {
    christoffel(&metric_jets(g, p, 1)?)
}

/// Levi-Civita connection of a metric, as a field (requires coordinate jets).
#[derive(Clone, Debug)]
pub struct LeviCivitaField {
    g: FieldRef,
}

impl LeviCivitaField {
    pub fn new(g: FieldRef) -> Result<Self> {
        if g.slots() != [Co, Co] {
            return Err(GeomError::ValenceMismatch("Levi-Civita connection of a non-metric field".into()));
        }
        Ok(Self { g })
    }

    pub fn shared(g: FieldRef) -> Result<FieldRef> {
        Ok(Arc::new(Self::new(g)?))
    }
}

impl Field for LeviCivitaField {
    fn dim(&self) -> usize {
        self.g.dim()
    }
    fn slots(&self) -> Vec<Variance> {
        vec![Co, Co, Contra]
    }
    fn max_order(&self) -> usize {
        self.g.max_order().saturating_sub(1)
    }
    fn eval(&self, x: &[Jet]) -> Result<JetTensor> {
        let p = coordinate_point(x).ok_or(GeomError::NotComposable("Levi-Civita connection"))?;
        let order = x[0].order();
        let g = eval_at(self.g.as_ref(), &p, order + 1)?;
        christoffel(&g).map_err(|_| singular(&g, &p))
    }
}

/// Fully covariant curvature at a point.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureAtPoint {
    pub dim: usize,
    pub point: Vec<f64>,
    /// `R_ijkl`, row-major
    pub components: Vec<f64>,
}

impl CurvatureAtPoint {
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let m = self.dim;
        self.components[((i * m + j) * m + k) * m + l]
    }

    /// Largest violation of (antisymmetry in ij, in kl, first Bianchi, pair symmetry),
    /// relative to `1 + max |R|`.
    pub fn symmetry_defects(&self) -> [f64; 4] {
        let m = self.dim;
        let scale = 1.0 + self.components.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut d = [0.0f64; 4];
        for idx in index_tuples(m, 4) {
            let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
            let r = self.get(i, j, k, l);
            d[0] = d[0].max((r + self.get(j, i, k, l)).abs());
            d[1] = d[1].max((r + self.get(i, j, l, k)).abs());
            d[2] = d[2].max((r + self.get(j, k, i, l) + self.get(k, i, j, l)).abs());
            d[3] = d[3].max((r - self.get(k, l, i, j)).abs());
        }
        d.map(|v| v / scale)
    }
}

/// Curvature tensor of `g` at `p`.
pub fn riemann(g: &MetricField, p: &[f64]) -> Result<CurvatureAtPoint> {
    let geo = MetricGeometry::at(g, p, 0)?;
    Ok(CurvatureAtPoint { dim: geo.dim(), point: p.to_vec(), components: geo.r.values() })
}

/// Ricci tensor, scalar curvature and the quadratic contractions used in
/// curvature identities, all at a point.
#[derive(Clone, Debug, Serialize)]
pub struct RicciData {
    pub ricci: Vec<f64>,
    pub scalar: f64,
    pub norm_r_sq: f64,
    pub norm_ricci_sq: f64,
    /// `Ř_ij = R_abci R^abc_j`
    pub r_check: Vec<f64>,
    /// `ρ̌_ij = ρ_ai ρ^a_j`
    pub ricci_check: Vec<f64>,
    /// `(Lρ)_ij = 2 R_iabj ρ^ab`
    pub l_ricci: Vec<f64>,
}

/// Quadratic curvature contractions as jets.
pub struct QuadraticContractions {
    pub norm_r_sq: Jet,
    pub norm_ricci_sq: Jet,
    pub r_check: JetTensor,
    pub ricci_check: JetTensor,
    pub l_ricci: JetTensor,
}

impl MetricGeometry {
    pub fn quadratic(&self) -> QuadraticContractions {
        let gi = &self.ginv;
        let r = &self.r;
        let r_raised = einsum("abcd,ai,bj,ck,dl->ijkl", &[r, gi, gi, gi, gi]);
        let norm_r_sq = einsum("ijkl,ijkl->", &[r, &r_raised]).as_scalar();
        let ric_raised = einsum("ab,ai,bj->ij", &[&self.ricci, gi, gi]);
        let norm_ricci_sq = einsum("ij,ij->", &[&self.ricci, &ric_raised]).as_scalar();
        // Ř_ij = R_abci R_{a'b'c'j} g^{aa'} g^{bb'} g^{cc'}
        let r_check = einsum("abci,ad,be,cf,defj->ij", &[r, gi, gi, gi, r]);
        let ricci_check = einsum("ai,ab,bj->ij", &[&self.ricci, gi, &self.ricci]);
        let l_ricci = einsum("iabj,ab->ij", &[r, &ric_raised]).scale(2.0);
        QuadraticContractions { norm_r_sq, norm_ricci_sq, r_check, ricci_check, l_ricci }
    }

    pub fn ricci_data(&self) -> RicciData {
        let q = self.quadratic();
        RicciData {
            ricci: self.ricci.values(),
            scalar: self.scalar.value(),
            norm_r_sq: q.norm_r_sq.value(),
            norm_ricci_sq: q.norm_ricci_sq.value(),
            r_check: q.r_check.values(),
            ricci_check: q.ricci_check.values(),
            l_ricci: q.l_ricci.values(),
        }
    }
}

/// Ricci data of `g` at `p`.
pub fn ricci_data(g: &MetricField, p: &[f64]) -> Result<RicciData> {
    Ok(MetricGeometry::at(g, p, 0)?.ricci_data())
}

/// `∇g` for an arbitrary connection (zero for Levi-Civita).
pub fn nonmetricity(g: &JetTensor, gamma: &JetTensor) -> Result<JetTensor> {
    covariant_derivative(g, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{constant_field, standard_endomorphism, EndoField, FnField, PolynomialField, StructureKind};
    use crate::jets::coordinate_jets;
    use crate::poly::Polynomial;

    /// `4/(1 + K|x|²)² δ`, constant sectional curvature `K`.
    fn sphere(m: usize, k: f64) -> MetricField {
        let f = FnField::new(m, &[Co, Co], move |x: &[Jet]| {
            let mut s = x[0].constant_like(1.0);
            for xi in x {
                s += &(xi * xi * k);
            }
            let c = (&s * &s).recip()? * 4.0;
            JetTensor::from_fn(m, &[Co, Co], |idx| Ok(if idx[0] == idx[1] { c.clone() } else { c.zero_like() }))
        });
        MetricField::new(Arc::new(f), (0, m)).unwrap()
    }

    #[test]
    fn christoffel_of_polar_type_metric() {
        let mut g = PolynomialField::zero(2, &[Co, Co]);
        g.component_mut(&[0, 0]).add_term(vec![0, 0], 1.0);
        g.component_mut(&[1, 1]).add_term(vec![2, 0], 1.0);
        let g = MetricField::new(Arc::new(g), (0, 2));
        // singular at the origin
        assert!(g.is_err());
        let mut h = PolynomialField::zero(2, &[Co, Co]);
        h.component_mut(&[0, 0]).add_term(vec![0, 0], 1.0);
        *h.component_mut(&[1, 1]) = Polynomial::variable(2, 0).mul(&Polynomial::variable(2, 0));
        let gamma = christoffel(&eval_at(&h, &[2.0, 0.3], 1).unwrap()).unwrap();
        assert!((gamma.value(&[1, 1, 0]) + 2.0).abs() < 1e-14);
        assert!((gamma.value(&[0, 1, 1]) - 0.5).abs() < 1e-14);
        assert!((gamma.value(&[1, 0, 1]) - 0.5).abs() < 1e-14);
        assert!(gamma.value(&[0, 0, 0]).abs() < 1e-14);
    }

    #[test]
    fn exterior_derivative_of_x_dy() {
        let x = coordinate_jets(&[0.4, -0.2], 2).unwrap();
        let w = JetTensor::from_jets(2, &[Co], vec![x[0].zero_like(), x[0].clone()]).unwrap();
        let dw = exterior_derivative(&w).unwrap();
        assert!((dw.value(&[0, 1]) - 1.0).abs() < 1e-15);
        assert!((dw.value(&[1, 0]) + 1.0).abs() < 1e-15);
        assert!(exterior_derivative(&dw).unwrap().is_exactly_zero());
    }

    #[test]
    fn levi_civita_is_metric_and_sphere_curvature_is_constant() {
        for m in [2, 3, 4] {
            let g = sphere(m, 1.0);
            let p: Vec<f64> = (0..m).map(|i| 0.1 * (i as f64 + 1.0)).collect();
            let geo = MetricGeometry::at(&g, &p, 0).unwrap();
            let ng = geo.covariant_derivative(&geo.g.truncate(1)).unwrap();
            assert!(ng.max_abs_value() < 1e-13);
            let gv = geo.g.values();
            let rv = geo.r.values();
            for idx in index_tuples(m, 4) {
                let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
                // R(X,Y)Z = K(g(Y,Z)X − g(X,Z)Y)
                let want = gv[j * m + k] * gv[i * m + l] - gv[i * m + k] * gv[j * m + l];
                assert!((rv[((i * m + j) * m + k) * m + l] - want).abs() < 1e-12);
            }
            for (a, b) in geo.ricci.values().iter().zip(&gv) {
                assert!((a - (m as f64 - 1.0) * b).abs() < 1e-12);
            }
            assert!((geo.scalar.value() - (m * (m - 1)) as f64).abs() < 1e-12);
            let c = riemann(&g, &p).unwrap();
            assert!(c.symmetry_defects().iter().all(|d| *d < 1e-13));
        }
    }

    #[test]
    fn star_ricci_equals_ricci_on_kahler_surface() {
        let g = sphere(2, 1.0);
        let j = EndoField::new(constant_field(2, &[Co, Contra], standard_endomorphism(2, StructureKind::Complex)), StructureKind::Complex)
            .unwrap();
        let p = [0.3, -0.5];
        let geo = MetricGeometry::at(&g, &p, 0).unwrap();
        let s = star_ricci(&g, &j, &p).unwrap();
        for (a, b) in s.star_ricci.iter().zip(geo.ricci.values()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!(kahler_symmetry_defect(&g, &j, &p).unwrap() < 1e-12);
        assert!(kahler_criteria(&g, &j, &p).unwrap().max() < 1e-12);
    }

    #[test]
    fn codifferential_of_exact_form_gives_laplacian() {
        // δ d f = −Δ f = −g^{ab} ∇_a ∇_b f
        let g = sphere(3, 0.5);
        let p = [0.2, 0.1, -0.3];
        let gj = metric_jets(&g, &p, 2).unwrap();
        let x = coordinate_jets(&p, 3).unwrap();
        let f = JetTensor::scalar(&x[0] * &x[1] + x[2].sin());
        let df = exterior_derivative(&f).unwrap();
        let ginv = inverse_metric(&gj).unwrap();
        let gamma = christoffel(&gj).unwrap();
        let ddf = covariant_derivative(&df, &gamma).unwrap();
        let lap = einsum("ab,ab->", &[&ddf, &ginv]).as_scalar().value();
        let delta = codifferential(&df, &ginv, &gamma).unwrap().as_scalar().value();
        assert!((delta + lap).abs() < 1e-12);
    }

    #[test]
    fn levi_civita_field_matches_pointwise() {
        let g = sphere(2, 1.0);
        let lc = LeviCivitaField::new(g.field.clone()).unwrap();
        let p = [0.2, 0.7];
        let a = eval_at(&lc, &p, 0).unwrap();
        let b = levi_civita(&g, &p).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-15);
        assert!(lc.eval(&[Jet::constant(0.2, 2, 1).unwrap(), Jet::constant(0.7, 2, 1).unwrap()]).is_err());
    }
}
