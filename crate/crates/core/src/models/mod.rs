//! Algebraic curvature models and their geometric realization by germs.

mod file;
mod para;

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::Serialize;

use crate::curvature::riemann;
use crate::error::{GeomError, Result};
use crate::fields::{
    standard_endomorphism, standard_hermitian_metric, standard_metric, MetricField, PolynomialField, StructureKind,
    Symmetry,
};
use crate::fixtures::rng;
use crate::jets::index_tuples;
use crate::jets::Variance::Co;
use crate::poly::Polynomial;
use crate::transplant::{transplant_kahler, transplant_metric, Check, KahlerGerm, TransplantOptions, TransplantResult};

pub use file::{ModelEntry, ModelFile};
pub use para::{
    curvature_of_theta, kappa_plus, para_kahler_spaces, para_model_space, null_para_frame, xi_span, random_theta,
    realize_para_kahler, theta_basis, xi, ParaKahlerRealization, ParaKahlerSpaces, ThetaTensor,
};

/// Symmetry defects are accepted up to this multiple of `1 + max |A|`.
pub const MODEL_TOL: f64 = 1e-12;

pub(crate) fn idx4(m: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * m + j) * m + k) * m + l
}

/// Inner product `ε`, tensor `A ∈ ⊗⁴V*` and, for para-Kähler models, `J₊`
/// stored as `J_i^a` with `J e_i = J_i^a e_a`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureModel {
    pub dim: usize,
    pub signature: (usize, usize),
    pub epsilon: Vec<f64>,
    pub a: Vec<f64>,
    pub j: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryCheck {
    pub name: String,
    pub defect: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelValidation {
    pub checks: Vec<SymmetryCheck>,
}

impl ModelValidation {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |s, x| s.max(x.abs()))
}

impl CurvatureModel {
    pub fn new(epsilon: Vec<f64>, signature: (usize, usize), a: Vec<f64>, j: Option<Vec<f64>>) -> Result<Self> {
        let m = signature.0 + signature.1;
        if m == 0 || m > 8 {
            return Err(GeomError::UnsupportedDimension(m));
        }
        if epsilon.len() != m * m || a.len() != m.pow(4) || j.as_ref().is_some_and(|j| j.len() != m * m) {
            return Err(GeomError::Precondition(format!("model components do not match dimension {m}")));
        }
        Ok(Self { dim: m, signature, epsilon, a, j })
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.a[idx4(self.dim, i, j, k, l)]
    }

    pub fn kind(&self) -> Option<StructureKind> {
        self.j.as_ref().map(|_| StructureKind::Para)
    }

    /// Every symmetry of the model, with defects relative to `1 + max |A|`.
    pub fn validate(&self) -> ModelValidation {
        let m = self.dim;
        let scale = 1.0 + max_abs(&self.a);
        let mut d = [0.0f64; 4];
        for t in index_tuples(m, 4) {
            let (i, j, k, l) = (t[0], t[1], t[2], t[3]);
            let a = self.get(i, j, k, l);
            d[0] = d[0].max((a + self.get(j, i, k, l)).abs());
            d[1] = d[1].max((a + self.get(j, k, i, l) + self.get(k, i, j, l)).abs());
            d[2] = d[2].max((a + self.get(i, j, l, k)).abs());
            d[3] = d[3].max((a - self.get(k, l, i, j)).abs());
        }
        let names = ["antisymmetry_xy", "first_bianchi", "antisymmetry_zw", "pair_symmetry"];
        let mut checks: Vec<SymmetryCheck> = names
            .iter()
            .zip(d)
            .map(|(n, v)| SymmetryCheck { name: n.to_string(), defect: v / scale, passed: v / scale <= MODEL_TOL })
            .collect();
        let eps = &self.epsilon;
        let sym = (0..m * m).map(|n| (eps[n] - eps[(n % m) * m + n / m]).abs()).fold(0.0, f64::max);
        checks.push(SymmetryCheck { name: "epsilon_symmetric".into(), defect: sym, passed: sym <= MODEL_TOL });
        let sig_ok = crate::fields::signature_of(eps, m).ok() == Some(self.signature);
        checks.push(SymmetryCheck { name: "epsilon_signature".into(), defect: if sig_ok { 0.0 } else { 1.0 }, passed: sig_ok });
        if let Some(jm) = &self.j {
            let jj = |i: usize, a: usize| jm[i * m + a];
            let mut sq = 0.0f64;
            let mut compat = 0.0f64;
            for i in 0..m {
                for k in 0..m {
                    let s: f64 = (0..m).map(|a| jj(i, a) * jj(a, k)).sum();
                    sq = sq.max((s - if i == k { 1.0 } else { 0.0 }).abs());
                    let mut c = eps[i * m + k];
                    for a in 0..m {
                        for b in 0..m {
                            c += jj(i, a) * jj(k, b) * eps[a * m + b];
                        }
                    }
                    compat = compat.max(c.abs());
                }
            }
            let trace: f64 = (0..m).map(|i| jj(i, i)).sum::<f64>().abs();
            let mut kahler = 0.0f64;
            for t in index_tuples(m, 4) {
                let (i, j, k, l) = (t[0], t[1], t[2], t[3]);
                let mut s = self.get(i, j, k, l);
                for a in 0..m {
                    for b in 0..m {
                        s += jj(k, a) * jj(l, b) * self.get(i, j, a, b);
                    }
                }
                kahler = kahler.max(s.abs());
            }
            for (name, v) in [("j_square", sq), ("j_trace", trace), ("j_epsilon", compat), ("para_kahler_symmetry", kahler / scale)] {
                checks.push(SymmetryCheck { name: name.into(), defect: v, passed: v <= MODEL_TOL.max(1e-12) });
            }
        }
        ModelValidation { checks }
    }

    pub(crate) fn require_valid(&self) -> Result<()> {
        let v = self.validate();
        if !v.passed() {
            return Err(GeomError::Precondition(format!("invalid curvature model: {}", v.failures().join(", "))));
        }
        Ok(())
    }

    /// The model in the basis given by the columns of `basis`.
    pub fn in_basis(&self, basis: &DMatrix<f64>) -> Result<Self> {
        let m = self.dim;
        let b = |a: usize, i: usize| basis[(a, i)];
        let e = DMatrix::from_row_slice(m, m, &self.epsilon);
        let eps = basis.transpose() * e * basis;
        let mut a = vec![0.0; m.pow(4)];
        // contract one slot at a time
        let mut cur = self.a.clone();
        for slot in 0..4 {
            a.iter_mut().for_each(|v| *v = 0.0);
            for t in index_tuples(m, 4) {
                let v = cur[idx4(m, t[0], t[1], t[2], t[3])];
                if v == 0.0 {
                    continue;
                }
                for n in 0..m {
                    let mut u = t.clone();
                    let old = u[slot];
                    u[slot] = n;
                    a[idx4(m, u[0], u[1], u[2], u[3])] += v * b(old, n);
                }
            }
            std::mem::swap(&mut cur, &mut a);
        }
        let j = match &self.j {
            None => None,
            Some(jv) => {
                let inv = basis.clone().try_inverse().ok_or_else(|| GeomError::Degenerate("singular basis".into()))?;
                let jm = basis.transpose() * DMatrix::from_row_slice(m, m, jv) * inv.transpose();
                Some(jm.transpose().as_slice().to_vec())
            }
        };
        let eps: Vec<f64> = eps.transpose().as_slice().to_vec();
        Self::new(eps, self.signature, cur, j)
    }

    /// A basis in which `ε` (and `J`) take the standard forms used by the transplant operations.
    pub fn standard_frame(&self) -> Result<DMatrix<f64>> {
        let m = self.dim;
        match &self.j {
            Some(j) => crate::transplant::adapted_basis(&self.epsilon, j, StructureKind::Para),
            None => {
                let e = SymmetricEigen::new(DMatrix::from_row_slice(m, m, &self.epsilon));
                let mut order: Vec<usize> = (0..m).collect();
                order.sort_by(|a, b| e.eigenvalues[*a].total_cmp(&e.eigenvalues[*b]));
                let cols: Vec<_> =
                    order.iter().map(|&k| e.eigenvectors.column(k) / e.eigenvalues[k].abs().sqrt()).collect();
                Ok(DMatrix::from_columns(&cols))
            }
        }
    }

    /// The model in its standard frame, with `ε` and `J` snapped to the exact standard values.
    pub fn standardized(&self) -> Result<(Self, DMatrix<f64>)> {
        let basis = self.standard_frame()?;
        let mut out = self.in_basis(&basis)?;
        let (p, q) = self.signature;
        let target = match self.j {
            Some(_) => standard_hermitian_metric(self.dim, p, StructureKind::Para)?,
            None => standard_metric(p, q),
        };
        snap(&mut out.epsilon, &target, "ε")?;
        if let Some(j) = out.j.as_mut() {
            snap(j, &standard_endomorphism(self.dim, StructureKind::Para), "J")?;
        }
        Ok((out, basis))
    }
}

fn snap(v: &mut [f64], target: &[f64], name: &str) -> Result<()> {
    let d = v.iter().zip(target).fold(0.0f64, |s, (a, b)| s.max((a - b).abs()));
    if d > 1e-9 {
        return Err(GeomError::Degenerate(format!("{name} did not reach its standard form (defect {d:e})")));
    }
    v.copy_from_slice(target);
    Ok(())
}

/// Report-based validation of every symmetry.
pub fn validate_model(model: &CurvatureModel) -> ModelValidation {
    model.validate()
}

/// `g_ik = ε_ik − ⅓ A_ijlk x^j x^l`, whose curvature at the origin is `A`.
pub fn realize_riemannian(model: &CurvatureModel) -> Result<MetricField> {
    model.require_valid()?;
    let m = model.dim;
    let g = PolynomialField::from_fn(m, &[Co, Co], |idx| {
        let (i, k) = (idx[0], idx[1]);
        let mut p = Polynomial::zero(m);
        p.add_term(vec![0; m], model.epsilon[i * m + k]);
        for j in 0..m {
            for l in 0..m {
                // symmetrized in (i, k), which a valid model already is
                let c = -(model.get(i, j, l, k) + model.get(k, j, l, i)) / 6.0;
                if c != 0.0 {
                    let mut e = vec![0u8; m];
                    e[j] += 1;
                    e[l] += 1;
                    p.add_term(e, c);
                }
            }
        }
        p
    })
    .with_symmetries(vec![Symmetry::Symmetric(0, 1)]);
    MetricField::new(Arc::new(g), model.signature)
}

/// Project an arbitrary 4-tensor onto the algebraic curvature tensors.
pub fn curvature_projection(m: usize, t: &[f64]) -> Vec<f64> {
    let get = |v: &[f64], i, j, k, l| v[idx4(m, i, j, k, l)];
    let mut s = vec![0.0; m.pow(4)];
    for u in index_tuples(m, 4) {
        let (i, j, k, l) = (u[0], u[1], u[2], u[3]);
        let a = |i, j, k, l| get(t, i, j, k, l) - get(t, j, i, k, l) - get(t, i, j, l, k) + get(t, j, i, l, k);
        s[idx4(m, i, j, k, l)] = (a(i, j, k, l) + a(k, l, i, j)) / 8.0;
    }
    let mut out = vec![0.0; m.pow(4)];
    for u in index_tuples(m, 4) {
        let (i, j, k, l) = (u[0], u[1], u[2], u[3]);
        let b = get(&s, i, j, k, l) + get(&s, j, k, i, l) + get(&s, k, i, j, l);
        out[idx4(m, i, j, k, l)] = get(&s, i, j, k, l) - b / 3.0;
    }
    out
}

/// Random valid model with a random inner product of the given signature.
pub fn random_riemannian_model(seed: u64, signature: (usize, usize)) -> CurvatureModel {
    let m = signature.0 + signature.1;
    let mut r = rng(seed);
    let t: Vec<f64> = (0..m.pow(4)).map(|_| r.gen_range(-1.0..=1.0)).collect();
    let a = curvature_projection(m, &t);
    // ε = Pᵀ diag P with P near the identity
    let p = DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { 0.0 } + r.gen_range(-0.3..=0.3));
    let d = DMatrix::from_row_slice(m, m, &standard_metric(signature.0, signature.1));
    let eps = p.transpose() * d * &p;
    let eps = (&eps + eps.transpose()) * 0.5;
    CurvatureModel::new(eps.as_slice().to_vec(), signature, a, None).expect("consistent sizes")
}

/// Random para-Kähler model in the standard frame of signature `(m/2, m/2)`.
pub fn random_para_kahler_model(seed: u64, m: usize) -> Result<CurvatureModel> {
    let j = standard_endomorphism(m, StructureKind::Para);
    let space = para_model_space(m, &j);
    let mut r = rng(seed);
    let c: Vec<f64> = (0..space.ncols()).map(|_| r.gen_range(-1.0..=1.0)).collect();
    let a = &space * nalgebra::DVector::from_vec(c);
    let eps = standard_hermitian_metric(m, m / 2, StructureKind::Para)?;
    CurvatureModel::new(eps, (m / 2, m / 2), a.as_slice().to_vec(), Some(j))
}

/// Host structure for the realize-then-transplant pipeline.
pub enum Host {
    Metric(MetricField),
    ParaKahler(KahlerGerm),
}

#[derive(Clone, Debug)]
pub struct HostRealization {
    /// The model in the frame where it was realized (isomorphic to the input).
    pub model: CurvatureModel,
    /// Columns: the realized frame in the model's original basis.
    pub basis: Vec<f64>,
    pub curvature_defect: f64,
    pub result: TransplantResult,
}

/// Realize a model by a germ and transplant it into `host` at the origin.
pub fn realize_into_host(model: &CurvatureModel, host: &Host, r: f64, opts: &TransplantOptions) -> Result<HostRealization> {
    model.require_valid()?;
    let (std, basis) = model.standardized()?;
    let mut result = match (host, &model.j) {
        (Host::Metric(h), None) => {
            let germ = realize_riemannian(&std)?;
            transplant_metric(&germ, h, r, opts)?
        }
        (Host::ParaKahler(h), Some(_)) => {
            let real = realize_para_kahler(&std)?;
            let germ = KahlerGerm::new(real.polynomial.clone(), std.signature, StructureKind::Para)?;
            transplant_kahler(&germ, h, r, opts)?
        }
        _ => return Err(GeomError::Precondition("host kind does not match the model".into())),
    };
    let out = result.output.metric.as_ref().expect("metric output");
    let got = riemann(out, &vec![0.0; model.dim])?;
    let defect = got.components.iter().zip(&std.a).fold(0.0f64, |s, (a, b)| s.max((a - b).abs()));
    result.report.checks.push(Check::at_most("curvature_at_origin", defect, 1e-9));
    Ok(HostRealization { model: std, basis: basis.transpose().as_slice().to_vec(), curvature_defect: defect, result })
}
