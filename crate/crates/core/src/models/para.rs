//! Para-Kähler models: the tensors `θ ∈ S²₋ ⊗ S²`, the maps `𝒦₊` and `ℛ`, and
//! the linear solve that realizes a model by `g_θ = ε + θ_ijkl x^k x^l`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::curvature::{exterior_derivative, kahler_form, riemann};
use crate::error::{GeomError, Result};
use crate::fields::{constant_field, EndoField, MetricField, PolynomialField, StructureKind, Symmetry};
use crate::fixtures::rng;
use crate::jets::index_tuples;
use crate::jets::Variance::{Co, Contra};
use crate::linalg::{least_norm_solve, null_space, rank};
use crate::poly::Polynomial;

use super::{idx4, max_abs, CurvatureModel};

const RCOND: f64 = 1e-10;

/// `θ_ijkl`, symmetric in `(i, j)` and `(k, l)` and `J₊`-anti-invariant in `(i, j)`.
/// `j` holds `J_i^a`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThetaTensor {
    pub dim: usize,
    pub j: Vec<f64>,
    pub components: Vec<f64>,
}

impl ThetaTensor {
    pub fn new(j: Vec<f64>, components: Vec<f64>) -> Result<Self> {
        let m = (j.len() as f64).sqrt() as usize;
        if m * m != j.len() || components.len() != m.pow(4) {
            return Err(GeomError::Precondition("θ and J₊ sizes do not match".into()));
        }
        let t = Self { dim: m, j, components };
        let d = t.membership_defect();
        if d > 1e-12 * (1.0 + max_abs(&t.components)) {
            return Err(GeomError::Precondition(format!("θ is not in S²₋ ⊗ S² (defect {d:e})")));
        }
        Ok(t)
    }

    pub fn zero(j: Vec<f64>) -> Self {
        let m = (j.len() as f64).sqrt() as usize;
        Self { dim: m, j, components: vec![0.0; m.pow(4)] }
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.components[idx4(self.dim, i, j, k, l)]
    }

    /// Largest violation of the two symmetries and of `θ(J₊x, J₊y, ·, ·) = −θ(x, y, ·, ·)`.
    pub fn membership_defect(&self) -> f64 {
        let m = self.dim;
        let jj = |i: usize, a: usize| self.j[i * m + a];
        let mut d = 0.0f64;
        for t in index_tuples(m, 4) {
            let (i, j, k, l) = (t[0], t[1], t[2], t[3]);
            let v = self.get(i, j, k, l);
            d = d.max((v - self.get(j, i, k, l)).abs()).max((v - self.get(i, j, l, k)).abs());
            let mut s = v;
            for a in 0..m {
                for b in 0..m {
                    s += jj(i, a) * jj(j, b) * self.get(a, b, k, l);
                }
            }
            d = d.max(s.abs());
        }
        d
    }

    /// `max |𝒦₊(θ)|`, zero exactly on `𝔎₊`.
    pub fn kernel_defect(&self) -> f64 {
        max_abs(&kappa_plus(self))
    }

    /// `g_θ = (ε_ij + θ_ijkl x^k x^l) dx^i ⊗ dx^j`.
    pub fn metric_polynomial(&self, epsilon: &[f64]) -> PolynomialField {
        let m = self.dim;
        PolynomialField::from_fn(m, &[Co, Co], |idx| {
            let (i, j) = (idx[0], idx[1]);
            let mut p = Polynomial::zero(m);
            p.add_term(vec![0; m], epsilon[i * m + j]);
            for k in 0..m {
                for l in 0..m {
                    let c = self.get(i, j, k, l);
                    if c != 0.0 {
                        let mut e = vec![0u8; m];
                        e[k] += 1;
                        e[l] += 1;
                        p.add_term(e, c);
                    }
                }
            }
            p
        })
        .with_symmetries(vec![Symmetry::Symmetric(0, 1)])
    }
}

/// Coefficients `c[x, y, z, l]` of the linear 3-form
/// `𝒦₊(θ)(x, y, z) = 2{θ(x, J₊y, z, e_l) + θ(y, J₊z, x, e_l) + θ(z, J₊x, y, e_l)} x^l`.
pub fn kappa_plus(theta: &ThetaTensor) -> Vec<f64> {
    let m = theta.dim;
    let jj = |i: usize, a: usize| theta.j[i * m + a];
    let mut out = vec![0.0; m.pow(4)];
    for t in index_tuples(m, 4) {
        let (x, y, z, l) = (t[0], t[1], t[2], t[3]);
        let mut s = 0.0;
        for a in 0..m {
            s += theta.get(x, a, z, l) * jj(y, a) + theta.get(y, a, x, l) * jj(z, a) + theta.get(z, a, y, l) * jj(x, a);
        }
        out[idx4(m, x, y, z, l)] = 2.0 * s;
    }
    out
}

/// `ℛ(θ)(x,y,z,w) = θ(x,z,y,w) + θ(y,w,x,z) − θ(x,w,y,z) − θ(y,z,x,w)`.
pub fn curvature_of_theta(theta: &ThetaTensor) -> Vec<f64> {
    let m = theta.dim;
    let mut out = vec![0.0; m.pow(4)];
    for t in index_tuples(m, 4) {
        let (x, y, z, w) = (t[0], t[1], t[2], t[3]);
        out[idx4(m, x, y, z, w)] =
            theta.get(x, z, y, w) + theta.get(y, w, x, z) - theta.get(x, w, y, z) - theta.get(y, z, x, w);
    }
    out
}

/// `ξ^{ijkl} = −sym(σ^{ij} ⊗ σ^{kl})` with `σ^{ij} = dx^i ⊗ dx^j − dx^j ⊗ dx^i`
/// and `sym(a ⊗ b) = ½(a ⊗ b + b ⊗ a)`. Indices are 0-based.
pub fn xi(m: usize, i: usize, j: usize, k: usize, l: usize) -> Vec<f64> {
    let sigma = |p: usize, q: usize, a: usize, b: usize| (a == p && b == q) as u8 as f64 - (a == q && b == p) as u8 as f64;
    let mut out = vec![0.0; m.pow(4)];
    for t in index_tuples(m, 4) {
        let (a, b, c, d) = (t[0], t[1], t[2], t[3]);
        out[idx4(m, a, b, c, d)] = -0.5 * (sigma(i, j, a, b) * sigma(k, l, c, d) + sigma(k, l, a, b) * sigma(i, j, c, d));
    }
    out
}

/// Neutral frame with `J₊ = diag(+1 × n, −1 × n)` and `ε(e_i, e_{i+n}) = 1`; returns `(ε, J₊)`.
pub fn null_para_frame(m: usize) -> (Vec<f64>, Vec<f64>) {
    let n = m / 2;
    let mut eps = vec![0.0; m * m];
    let mut j = vec![0.0; m * m];
    for i in 0..n {
        eps[i * m + i + n] = 1.0;
        eps[(i + n) * m + i] = 1.0;
        j[i * m + i] = 1.0;
        j[(i + n) * m + i + n] = -1.0;
    }
    (eps, j)
}

/// The nine tensors `ξ^{1313}, ξ^{1414}, ξ^{2323}, ξ^{2424}, ξ^{1323}, ξ^{1424},
/// ξ^{1314}, ξ^{2324}, ξ^{1324} + ξ^{1423}` (1-based labels) in the frame of
/// [`null_para_frame`] with `m = 4`.
pub fn xi_span() -> Vec<Vec<f64>> {
    let single = [[1, 3, 1, 3], [1, 4, 1, 4], [2, 3, 2, 3], [2, 4, 2, 4], [1, 3, 2, 3], [1, 4, 2, 4], [1, 3, 1, 4], [2, 3, 2, 4]];
    let x = |t: [usize; 4]| xi(4, t[0] - 1, t[1] - 1, t[2] - 1, t[3] - 1);
    let mut out: Vec<Vec<f64>> = single.iter().map(|t| x(*t)).collect();
    out.push(x([1, 3, 2, 4]).iter().zip(x([1, 4, 2, 3])).map(|(a, b)| a + b).collect());
    out
}

fn columns(vs: &[Vec<f64>], rows: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, vs.len(), |r, c| vs[c][r])
}

/// Orthonormal basis of `S²₋` for `J₊`, as `m²` row-major vectors.
fn s2_minus_basis(m: usize, j: &[f64]) -> Vec<Vec<f64>> {
    let mut rows = Vec::new();
    for i in 0..m {
        for k in 0..m {
            let mut sym = vec![0.0; m * m];
            sym[i * m + k] += 1.0;
            sym[k * m + i] -= 1.0;
            rows.push(sym);
            let mut anti = vec![0.0; m * m];
            anti[i * m + k] += 1.0;
            for a in 0..m {
                for b in 0..m {
                    anti[a * m + b] += j[i * m + a] * j[k * m + b];
                }
            }
            rows.push(anti);
        }
    }
    let c = DMatrix::from_fn(rows.len(), m * m, |r, col| rows[r][col]);
    let n = null_space(&c, RCOND);
    n.column_iter().map(|v| v.iter().copied().collect()).collect()
}

/// Basis `e^k ⊗ e^l + e^l ⊗ e^k` (`k < l`) and `e^k ⊗ e^k` of `S²`.
fn s2_basis(m: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for k in 0..m {
        for l in k..m {
            let mut v = vec![0.0; m * m];
            v[k * m + l] = 1.0;
            v[l * m + k] = 1.0;
            out.push(v);
        }
    }
    out
}

/// Basis of `S²₋ ⊗ S²` as full component vectors.
pub fn theta_basis(m: usize, j: &[f64]) -> Vec<Vec<f64>> {
    let minus = s2_minus_basis(m, j);
    let plain = s2_basis(m);
    let mut out = Vec::with_capacity(minus.len() * plain.len());
    for s in &minus {
        for t in &plain {
            out.push((0..m.pow(4)).map(|n| s[n / (m * m)] * t[n % (m * m)]).collect());
        }
    }
    out
}

/// Basis (columns) of the tensors satisfying the curvature symmetries and
/// `A(x, y, z, w) = −A(x, y, J₊z, J₊w)`.
pub fn para_model_space(m: usize, j: &[f64]) -> DMatrix<f64> {
    // Bianchi and the J₊ condition imposed on a basis of S²(Λ²)
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |k| (i, k))).collect();
    let mut sym_basis = Vec::new();
    for (p, &(i, k)) in pairs.iter().enumerate() {
        for &(a, b) in &pairs[p..] {
            sym_basis.push(xi(m, i, k, a, b));
        }
    }
    let n = m.pow(4);
    let mut c = DMatrix::zeros(2 * n, sym_basis.len());
    for (col, a) in sym_basis.iter().enumerate() {
        for t in index_tuples(m, 4) {
            let (x, y, z, w) = (t[0], t[1], t[2], t[3]);
            let here = idx4(m, x, y, z, w);
            c[(2 * here, col)] = a[here] + a[idx4(m, y, z, x, w)] + a[idx4(m, z, x, y, w)];
            let mut s = a[here];
            for p in 0..m {
                for q in 0..m {
                    let v = j[z * m + p] * j[w * m + q];
                    if v != 0.0 {
                        s += v * a[idx4(m, x, y, p, q)];
                    }
                }
            }
            c[(2 * here + 1, col)] = s;
        }
    }
    let coeffs = null_space(&c, RCOND);
    if coeffs.ncols() == 0 {
        return DMatrix::zeros(n, 0);
    }
    let space = columns(&sym_basis, n) * coeffs;
    let k = space.ncols();
    space.svd(true, false).u.expect("requested").columns(0, k).into_owned()
}

/// The spaces entering the para-Kähler solve, for one `J₊`.
#[derive(Clone, Debug)]
pub struct ParaKahlerSpaces {
    pub dim: usize,
    pub j: Vec<f64>,
    /// `dim S²₋ ⊗ S²`
    pub theta_dim: usize,
    /// Columns: a basis of `𝔎₊ = ker 𝒦₊` in full components.
    pub kernel: DMatrix<f64>,
    /// `ℛ` applied to the kernel basis.
    pub curvature: DMatrix<f64>,
    pub rank_on_kernel: usize,
}

impl ParaKahlerSpaces {
    pub fn kernel_dim(&self) -> usize {
        self.kernel.ncols()
    }
}

pub fn para_kahler_spaces(m: usize, j: &[f64]) -> Result<ParaKahlerSpaces> {
    if !m.is_multiple_of(2) || m == 0 {
        return Err(GeomError::UnsupportedDimension(m));
    }
    let basis = theta_basis(m, j);
    let n = m.pow(4);
    let thetas: Vec<ThetaTensor> =
        basis.iter().map(|b| ThetaTensor { dim: m, j: j.to_vec(), components: b.clone() }).collect();
    let k = columns(&thetas.iter().map(kappa_plus).collect::<Vec<_>>(), n);
    let coeffs = null_space(&k, RCOND);
    let kernel = columns(&basis, n) * coeffs;
    let curv: Vec<Vec<f64>> = kernel
        .column_iter()
        .map(|c| curvature_of_theta(&ThetaTensor { dim: m, j: j.to_vec(), components: c.iter().copied().collect() }))
        .collect();
    let curvature = columns(&curv, n);
    let rank_on_kernel = rank(&curvature, RCOND);
    Ok(ParaKahlerSpaces { dim: m, j: j.to_vec(), theta_dim: basis.len(), kernel, curvature, rank_on_kernel })
}

/// Random element of `S²₋ ⊗ S²` with coefficients in `[−1, 1]` on the basis.
pub fn random_theta(seed: u64, m: usize, j: &[f64]) -> ThetaTensor {
    let mut r = rng(seed);
    let mut c = vec![0.0; m.pow(4)];
    for b in theta_basis(m, j) {
        let s: f64 = r.gen_range(-1.0..=1.0);
        c.iter_mut().zip(&b).for_each(|(a, v)| *a += s * v);
    }
    ThetaTensor { dim: m, j: j.to_vec(), components: c }
}

/// A realizing `θ ∈ 𝔎₊` and the germ `g_θ` with its verification.
#[derive(Clone, Debug)]
pub struct ParaKahlerRealization {
    pub theta: ThetaTensor,
    pub polynomial: PolynomialField,
    pub metric: MetricField,
    pub structure: EndoField,
    pub solve_residual: f64,
    pub rank: usize,
    pub kernel_dim: usize,
    pub compatibility: f64,
    /// Largest `|dΩ|` over the sampled points.
    pub closedness: f64,
    pub curvature_defect: f64,
}

/// Solve `ℛ θ = A` by least squares within `𝔎₊`.
pub fn realize_para_kahler(model: &CurvatureModel) -> Result<ParaKahlerRealization> {
    let j = model.j.clone().ok_or_else(|| GeomError::Precondition("model has no para-complex structure".into()))?;
    let m = model.dim;
    if !m.is_multiple_of(2) || model.signature != (m / 2, m / 2) {
        return Err(GeomError::Precondition("para-Kähler models need even dimension and neutral signature".into()));
    }
    model.require_valid()?;
    let spaces = para_kahler_spaces(m, &j)?;
    let sol = least_norm_solve(&spaces.curvature, &DVector::from_column_slice(&model.a), RCOND);
    if sol.residual > 1e-9 {
        return Err(GeomError::Inconsistent(format!(
            "ℛθ = A has no solution in 𝔎₊ (residual {:e}, rank {} of {})",
            sol.residual,
            sol.rank,
            spaces.kernel_dim()
        )));
    }
    let components = (&spaces.kernel * &sol.x).iter().copied().collect();
    let theta = ThetaTensor { dim: m, j: j.clone(), components };
    let polynomial = theta.metric_polynomial(&model.epsilon);
    let metric = MetricField::new(Arc::new(polynomial.clone()), model.signature)?;
    let structure = EndoField::new(constant_field(m, &[Co, Contra], j), StructureKind::Para)?;
    let points = crate::fields::norms::halton_ball(m, 1.0, 20);
    let mut compatibility = 0.0f64;
    let mut closedness = 0.0f64;
    for p in &points {
        compatibility = compatibility.max(crate::curvature::compatibility_defect(&metric, &structure, p)?);
        closedness = closedness.max(exterior_derivative(&kahler_form(&metric, &structure, p, 1)?)?.max_abs_value());
    }
    let r0 = riemann(&metric, &vec![0.0; m])?;
    let curvature_defect = r0.components.iter().zip(&model.a).fold(0.0f64, |s, (a, b)| s.max((a - b).abs()));
    Ok(ParaKahlerRealization {
        theta,
        polynomial,
        metric,
        structure,
        solve_residual: sol.residual,
        rank: sol.rank,
        kernel_dim: spaces.kernel_dim(),
        compatibility,
        closedness,
        curvature_defect,
    })
}
