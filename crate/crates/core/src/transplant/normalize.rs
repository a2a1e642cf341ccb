//! Polynomial coordinate changes putting germs into standard form at the origin.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::curvature::christoffel;
use crate::curvature::compatibility_defect;
use crate::error::{GeomError, Result};
use crate::fields::{
    standard_endomorphism, standard_hermitian_metric, ConnectionField, EndoField, MetricField, PullbackField,
    StructureKind,
};
use crate::poly::Polynomial;

const FLAG_TOL: f64 = 1e-10;

/// Which normalizations hold at the origin.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct NormalizationFlags {
    /// `g(0)` is diagonal with entries `±1`.
    pub value: bool,
    /// `∂g(0) = 0`, or `Γ(0) = 0` for a connection.
    pub derivative: bool,
    /// `J(0)` is the standard block form.
    pub j_normal: bool,
}

/// A germ together with the coordinate change `x = Φ(y)` that produced it.
#[derive(Clone, Debug)]
pub struct NormalizedGerm<T> {
    pub germ: T,
    pub flags: NormalizationFlags,
    pub map: Vec<Polynomial>,
}

fn identity_map(m: usize) -> Vec<Polynomial> {
    (0..m).map(|i| Polynomial::variable(m, i)).collect()
}

/// `Φ^i(z) = Σ_a L[i][a] (z^a − ½ Γ_bc^a z^b z^c)`.
fn quadratic_map(l: &DMatrix<f64>, gamma0: &[f64]) -> Vec<Polynomial> {
    let m = l.nrows();
    let inner: Vec<Polynomial> = (0..m)
        .map(|a| {
            let mut p = Polynomial::variable(m, a);
            for b in 0..m {
                for c in 0..m {
                    let v = gamma0[(b * m + c) * m + a];
                    if v != 0.0 {
                        let mut e = vec![0u8; m];
                        e[b] += 1;
                        e[c] += 1;
                        p.add_term(e, -0.5 * v);
                    }
                }
            }
            p
        })
        .collect();
    (0..m)
        .map(|i| {
            let mut p = Polynomial::zero(m);
            for (a, q) in inner.iter().enumerate() {
                if l[(i, a)] != 0.0 {
                    p = p.add(&q.scale(l[(i, a)]));
                }
            }
            p
        })
        .collect()
}

fn linear_map(l: &DMatrix<f64>) -> Vec<Polynomial> {
    quadratic_map(l, &vec![0.0; l.nrows().pow(3)])
}

fn is_diagonal_unit(v: &[f64], m: usize) -> bool {
    (0..m).all(|i| {
        (0..m).all(|j| {
            let want = v[i * m + j].abs();
            if i == j {
                (want - 1.0).abs() <= FLAG_TOL
            } else {
                want <= FLAG_TOL
            }
        })
    })
}

/// Evaluate the normalization flags of a metric and optional endomorphism.
pub fn verify_flags(g: &MetricField, j: Option<&EndoField>) -> Result<NormalizationFlags> {
    let m = g.dim();
    let origin = vec![0.0; m];
    let gj = g.at(&origin, 1)?;
    let value = is_diagonal_unit(&gj.values(), m);
    let derivative = gj.partials()?.max_abs_value() <= FLAG_TOL;
    let j_normal = match j {
        Some(j) => {
            let std = standard_endomorphism(m, j.kind);
            j.at(&origin, 0)?.values().iter().zip(&std).all(|(a, b)| (a - b).abs() <= FLAG_TOL)
        }
        None => false,
    };
    Ok(NormalizationFlags { value, derivative, j_normal })
}

/// Coordinates in which `Γ(0) = 0`, via `x = y − ½ Γ(0) y y`.
pub fn normalize_connection(conn: &ConnectionField) -> Result<NormalizedGerm<ConnectionField>> {
    let m = conn.dim();
    let origin = vec![0.0; m];
    conn.check_torsion_free(&origin)?;
    let gamma0 = conn.at(&origin, 0)?.values();
    if gamma0.iter().all(|v| *v == 0.0) {
        let flags = NormalizationFlags { derivative: true, ..Default::default() };
        return Ok(NormalizedGerm { germ: conn.clone(), flags, map: identity_map(m) });
    }
    let map = quadratic_map(&DMatrix::identity(m, m), &gamma0);
    let out = ConnectionField::new(Arc::new(PullbackField::connection(conn.field.clone(), map.clone())?))?;
    let residual = out.at(&origin, 0)?.max_abs_value();
    if residual > FLAG_TOL {
        return Err(GeomError::Precondition(format!("connection normalization left |Γ(0)| = {residual:e}")));
    }
    let flags = NormalizationFlags { derivative: true, ..Default::default() };
    Ok(NormalizedGerm { germ: out, flags, map })
}

/// Apply `x = L(z − ½ Γ'(0) z z)`, where `Γ'` is the Levi-Civita connection after the linear step.
fn pull_back_metric(g: &MetricField, l: &DMatrix<f64>) -> Result<(MetricField, Vec<Polynomial>)> {
    let m = g.dim();
    let origin = vec![0.0; m];
    let linear = PullbackField::tensor(g.field.clone(), linear_map(l))?;
    let gl = crate::fields::eval_at(&linear, &origin, 1)?;
    let gamma0 = christoffel(&gl)?.values();
    let map = quadratic_map(l, &gamma0);
    let field = Arc::new(PullbackField::tensor(g.field.clone(), map.clone())?);
    Ok((MetricField::new(field, g.signature)?, map))
}

/// Coordinates with `g(0) = diag(−1 × p, +1 × q)` and `∂g(0) = 0`.
pub fn normalize_metric(g: &MetricField) -> Result<NormalizedGerm<MetricField>> {
    let m = g.dim();
    let (p, q) = g.signature;
    let origin = vec![0.0; m];
    let g0 = g.at(&origin, 0)?.values();
    let standard = crate::fields::standard_metric(p, q);
    let flags = verify_flags(g, None)?;
    let is_standard = g0.iter().zip(&standard).all(|(a, b)| a == b);
    if is_standard && flags.derivative {
        return Ok(NormalizedGerm { germ: g.clone(), flags, map: identity_map(m) });
    }
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(m, m, &g0));
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut l = DMatrix::zeros(m, m);
    for (col, &k) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[k];
        if lambda.abs() < 1e-12 {
            return Err(GeomError::SingularMetric { point: origin, det: 0.0 });
        }
        l.set_column(col, &(eig.eigenvectors.column(k) / lambda.abs().sqrt()));
    }
    let (out, map) = pull_back_metric(g, &l)?;
    let flags = verify_flags(&out, None)?;
    if !(flags.value && flags.derivative) {
        return Err(GeomError::Precondition("metric normalization failed to reach the standard form".into()));
    }
    Ok(NormalizedGerm { germ: out, flags, map })
}

/// `J`-adapted Gram–Schmidt: a basis `e_0..e_{2n}` with `e_{i+n} = J e_i` in
/// which `g(0)` has the standard Hermitian form. Returned as the columns of a matrix.
pub(crate) fn adapted_basis(g0: &[f64], j0: &[f64], kind: StructureKind) -> Result<DMatrix<f64>> {
    let m = (g0.len() as f64).sqrt() as usize;
    let n = m / 2;
    let gm = DMatrix::from_row_slice(m, m, g0);
    // (J v)^b = v^a J_a^b
    let jt = DMatrix::from_row_slice(m, m, j0).transpose();
    let ip = |u: &DVector<f64>, v: &DVector<f64>| (u.transpose() * &gm * v)[(0, 0)];
    let mut chosen: Vec<(DVector<f64>, f64)> = Vec::new();
    let mut planes: Vec<(DVector<f64>, DVector<f64>, f64)> = Vec::new();
    for _ in 0..n {
        let project = |u: DVector<f64>| {
            let mut u = u;
            for (w, s) in &chosen {
                let c = ip(&u, w) * s;
                u -= w * c;
            }
            u
        };
        let mut candidates: Vec<DVector<f64>> = (0..m).map(|k| project(DVector::from_fn(m, |i, _| (i == k) as u8 as f64))).collect();
        for a in 0..m {
            for b in a + 1..m {
                candidates.push(&candidates[a] + &candidates[b]);
            }
        }
        let best = candidates
            .into_iter()
            .map(|v| {
                let nv = ip(&v, &v);
                (v, nv)
            })
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("candidates");
        if best.1.abs() < 1e-8 {
            return Err(GeomError::Degenerate("no non-null vector in the remaining J-invariant subspace".into()));
        }
        let mut v = best.0 / best.1.abs().sqrt();
        let mut s = best.1.signum();
        if kind == StructureKind::Para && s > 0.0 {
            v = &jt * v;
            s = -1.0;
        }
        let jv = &jt * &v;
        let sj = match kind {
            StructureKind::Complex => s,
            StructureKind::Para => -s,
        };
        chosen.push((v.clone(), s));
        chosen.push((jv.clone(), sj));
        planes.push((v, jv, s));
    }
    if kind == StructureKind::Complex {
        planes.sort_by(|a, b| a.2.total_cmp(&b.2));
    }
    let mut basis = DMatrix::zeros(m, m);
    for (i, (v, jv, _)) in planes.iter().enumerate() {
        basis.set_column(i, v);
        basis.set_column(i + n, jv);
    }
    Ok(basis)
}

/// Coordinates in which `J(0)` is standard, `g(0)` has the standard Hermitian
/// form and `∂g(0) = 0`.
pub fn normalize_pair(g: &MetricField, j: &EndoField) -> Result<NormalizedGerm<(MetricField, EndoField)>> {
    let m = g.dim();
    if j.dim() != m {
        return Err(GeomError::DimensionMismatch { expected: m, found: j.dim() });
    }
    let (p, _) = g.signature;
    // rejects non-neutral para signatures and odd p for complex structures
    let target = standard_hermitian_metric(m, p, j.kind)?;
    let origin = vec![0.0; m];
    let defect = compatibility_defect(g, j, &origin)?;
    if defect > FLAG_TOL {
        return Err(GeomError::Precondition(format!(
            "g and J are not compatible at the origin (defect {defect:e})"
        )));
    }
    let flags = verify_flags(g, Some(j))?;
    let g0 = g.at(&origin, 0)?.values();
    if flags.j_normal && flags.derivative && g0.iter().zip(&target).all(|(a, b)| a == b) {
        return Ok(NormalizedGerm { germ: (g.clone(), j.clone()), flags, map: identity_map(m) });
    }
    let basis = adapted_basis(&g0, &j.at(&origin, 0)?.values(), j.kind)?;
    let (gn, map) = pull_back_metric(g, &basis)?;
    let jn = EndoField::new(Arc::new(PullbackField::tensor(j.field.clone(), map.clone())?), j.kind)?;
    let flags = verify_flags(&gn, Some(&jn))?;
    let gv = gn.at(&origin, 0)?.values();
    let value_ok = gv.iter().zip(&target).all(|(a, b)| (a - b).abs() <= FLAG_TOL);
    if !(flags.value && flags.derivative && flags.j_normal && value_ok) {
        return Err(GeomError::Precondition("pair normalization failed to reach the standard form".into()));
    }
    Ok(NormalizedGerm { germ: (gn, jn), flags, map })
}
