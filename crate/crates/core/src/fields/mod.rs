//! Tensor fields on a coordinate chart, evaluated to component jets.

mod combinators;
pub mod germ_file;
mod mesa;
pub mod norms;
mod polynomial;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::jets::{coordinate_jets, Jet, JetTensor, Variance, MAX_ORDER};

pub use combinators::{
    blend, compose_with_rescaled_argument, pullback_average, Blend, ComposeRescaled, ConstantField, FnField,
    HermitianAverage, LinearCombination, PlateauSwitch, PullbackField, ScaledBy,
};
pub use mesa::{mesa, Mesa};
pub use polynomial::PolynomialField;

/// Declared symmetry of two slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Symmetry {
    Symmetric(usize, usize),
    Antisymmetric(usize, usize),
}

/// A smooth tensor field on a chart domain.
///
/// `eval` receives jets of the chart coordinates. For most fields any jets
/// may be passed, which composes the field with them; fields whose definition
/// differentiates another field require genuine coordinate jets and report
/// [`GeomError::NotComposable`] otherwise.
pub trait Field: Send + Sync {
    fn dim(&self) -> usize;
    fn slots(&self) -> Vec<Variance>;
    fn symmetries(&self) -> Vec<Symmetry> {
        Vec::new()
    }
    /// Highest jet order this field can deliver.
    fn max_order(&self) -> usize {
        MAX_ORDER
    }
    fn eval(&self, x: &[Jet]) -> Result<JetTensor>;
    fn as_polynomial(&self) -> Option<&PolynomialField> {
        None
    }
}

/// Shared or structurally equal polynomial fields.
pub fn same_field(a: &FieldRef, b: &FieldRef) -> bool {
    Arc::ptr_eq(a, b) || matches!((a.as_polynomial(), b.as_polynomial()), (Some(p), Some(q)) if p == q)
}

pub type FieldRef = Arc<dyn Field>;

impl fmt::Debug for dyn Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Field(dim={}, slots={:?})", self.dim(), self.slots())
    }
}

/// Evaluate a field at a point with coordinate jets of the given order.
pub fn eval_at(field: &dyn Field, p: &[f64], order: usize) -> Result<JetTensor> {
    if p.len() != field.dim() {
        return Err(GeomError::DimensionMismatch { expected: field.dim(), found: p.len() });
    }
    if order > field.max_order() {
        return Err(GeomError::InsufficientOrder { requested: order, available: field.max_order() });
    }
    field.eval(&coordinate_jets(p, order)?)
}

/// Largest violation of the declared symmetries at a point (value level).
pub fn symmetry_defect(field: &dyn Field, p: &[f64]) -> Result<f64> {
    let t = eval_at(field, p, 0)?;
    let mut worst: f64 = 0.0;
    for s in field.symmetries() {
        let (a, b, sign) = match s {
            Symmetry::Symmetric(a, b) => (a, b, 1.0),
            Symmetry::Antisymmetric(a, b) => (a, b, -1.0),
        };
        for idx in crate::jets::index_tuples(t.dim(), t.rank()) {
            let mut swapped = idx.clone();
            swapped.swap(a, b);
            worst = worst.max((t.value(&idx) - sign * t.value(&swapped)).abs());
        }
    }
    Ok(worst)
}

/// Chart: the ball `B_{3r}` in `R^m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub dim: usize,
    pub radius: f64,
}

impl ChartSpec {
    pub fn new(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(GeomError::UnsupportedDimension(dim));
        }
        if !(radius > 0.0) {
            return Err(GeomError::Precondition(format!("chart radius must be positive, got {radius}")));
        }
        Ok(Self { dim, radius })
    }

    pub fn domain_radius(&self) -> f64 {
        3.0 * self.radius
    }
}

/// Para-complex (`J² = +Id`) or complex (`J² = −Id`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureKind {
    Para,
    Complex,
}

impl StructureKind {
    /// `J² = sign · Id`.
    pub fn sign(self) -> f64 {
        match self {
            StructureKind::Para => 1.0,
            StructureKind::Complex => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StructureKind::Para => "para",
            StructureKind::Complex => "complex",
        }
    }
}

/// Counts of (negative, positive) eigenvalues of a symmetric matrix.
pub fn signature_of(values: &[f64], m: usize) -> Result<(usize, usize)> {
    let a = DMatrix::from_row_slice(m, m, values);
    let sym = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let scale = eig.eigenvalues.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    let mut p = 0;
    let mut q = 0;
    for &v in eig.eigenvalues.iter() {
        if v.abs() <= 1e-12 * scale {
            return Err(GeomError::SingularMetric { point: Vec::new(), det: a.determinant() });
        }
        if v < 0.0 {
            p += 1;
        } else {
            q += 1;
        }
    }
    Ok((p, q))
}

/// Symmetric covariant 2-tensor field of signature `(p, q)` (p negative directions).
#[derive(Clone, Debug)]
pub struct MetricField {
    pub field: FieldRef,
    pub signature: (usize, usize),
}

impl MetricField {
    /// Wrap a field, checking slots and the signature at the origin.
    pub fn new(field: FieldRef, signature: (usize, usize)) -> Result<Self> {
        if field.slots() != [Variance::Co, Variance::Co] {
            return Err(GeomError::ValenceMismatch(format!("metric needs slots (co, co), got {:?}", field.slots())));
        }
        let m = field.dim();
        if signature.0 + signature.1 != m {
            return Err(GeomError::Precondition(format!("signature {signature:?} does not fit dimension {m}")));
        }
        let g = Self { field, signature };
        g.check_at(&vec![0.0; m])?;
        Ok(g)
    }

    /// Wrap a field, reading the signature off its value at the origin.
    pub fn infer(field: FieldRef) -> Result<Self> {
        let m = field.dim();
        let g0 = eval_at(field.as_ref(), &vec![0.0; m], 0)?;
        let signature = signature_of(&g0.values(), m).map_err(|_| GeomError::SingularMetric {
            point: vec![0.0; m],
            det: DMatrix::from_row_slice(m, m, &g0.values()).determinant(),
        })?;
        Self::new(field, signature)
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn at(&self, p: &[f64], order: usize) -> Result<JetTensor> {
        eval_at(self.field.as_ref(), p, order)
    }

    /// Symmetric, nondegenerate, and of the declared signature at `p`.
    pub fn check_at(&self, p: &[f64]) -> Result<()> {
        let m = self.dim();
        let g = self.at(p, 0)?;
        let v = g.values();
        for i in 0..m {
            for j in 0..i {
                if (v[i * m + j] - v[j * m + i]).abs() > 1e-10 {
                    return Err(GeomError::SymmetryViolation(format!("g[{i},{j}] != g[{j},{i}] at {p:?}")));
                }
            }
        }
        let det = DMatrix::from_row_slice(m, m, &v).determinant();
        if det.abs() <= 1e-12 {
            return Err(GeomError::SingularMetric { point: p.to_vec(), det });
        }
        let (fp, fq) = signature_of(&v, m).map_err(|_| GeomError::SingularMetric { point: p.to_vec(), det })?;
        if (fp, fq) != self.signature {
            return Err(GeomError::SignatureMismatch {
                expected_p: self.signature.0,
                expected_q: self.signature.1,
                found_p: fp,
                found_q: fq,
            });
        }
        Ok(())
    }
}

/// Endomorphism field `J_i^j` (with `J ∂_i = J_i^j ∂_j`) squaring to `±Id`.
#[derive(Clone, Debug)]
pub struct EndoField {
    pub field: FieldRef,
    pub kind: StructureKind,
}

impl EndoField {
    pub fn new(field: FieldRef, kind: StructureKind) -> Result<Self> {
        if field.slots() != [Variance::Co, Variance::Contra] {
            return Err(GeomError::ValenceMismatch(format!(
                "endomorphism needs slots (co, contra), got {:?}",
                field.slots()
            )));
        }
        if !field.dim().is_multiple_of(2) {
            return Err(GeomError::Precondition(format!("{} structure in odd dimension {}", kind.name(), field.dim())));
        }
        let j = Self { field, kind };
        j.check_at(&vec![0.0; j.dim()])?;
        Ok(j)
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn at(&self, p: &[f64], order: usize) -> Result<JetTensor> {
        eval_at(self.field.as_ref(), p, order)
    }

    /// max |J² ∓ Id| (plus |tr J| for para) at `p`.
    pub fn square_defect(&self, p: &[f64]) -> Result<f64> {
        let m = self.dim();
        let v = self.at(p, 0)?.values();
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for k in 0..m {
                let s: f64 = (0..m).map(|j| v[i * m + j] * v[j * m + k]).sum();
                let target = if i == k { self.kind.sign() } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        if self.kind == StructureKind::Para {
            let tr: f64 = (0..m).map(|i| v[i * m + i]).sum();
            worst = worst.max(tr.abs());
        }
        Ok(worst)
    }

    pub fn check_at(&self, p: &[f64]) -> Result<()> {
        let d = self.square_defect(p)?;
        if d > 1e-10 {
            return Err(GeomError::Precondition(format!(
                "J fails the {} structure identities at {p:?} (defect {d:e})",
                self.kind.name()
            )));
        }
        Ok(())
    }
}

/// Christoffel symbols `Γ[i,j,k] = Γ_ij^k`, slots (co, co, contra).
#[derive(Clone, Debug)]
pub struct ConnectionField {
    pub field: FieldRef,
}

impl ConnectionField {
    pub fn new(field: FieldRef) -> Result<Self> {
        if field.slots() != [Variance::Co, Variance::Co, Variance::Contra] {
            return Err(GeomError::ValenceMismatch(format!(
                "connection needs slots (co, co, contra), got {:?}",
                field.slots()
            )));
        }
        Ok(Self { field })
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn at(&self, p: &[f64], order: usize) -> Result<JetTensor> {
        eval_at(self.field.as_ref(), p, order)
    }

    /// max |Γ_ij^k − Γ_ji^k| at `p`.
    pub fn torsion_at(&self, p: &[f64]) -> Result<f64> {
        let m = self.dim();
        let g = self.at(p, 0)?;
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    worst = worst.max((g.value(&[i, j, k]) - g.value(&[j, i, k])).abs());
                }
            }
        }
        Ok(worst)
    }

    pub fn check_torsion_free(&self, p: &[f64]) -> Result<()> {
        let t = self.torsion_at(p)?;
        if t > 1e-10 {
            return Err(GeomError::Torsion(t));
        }
        Ok(())
    }
}

/// Covector field `ω_i`.
#[derive(Clone, Debug)]
pub struct OneFormField {
    pub field: FieldRef,
}

impl OneFormField {
    pub fn new(field: FieldRef) -> Result<Self> {
        if field.slots() != [Variance::Co] {
            return Err(GeomError::ValenceMismatch(format!("one-form needs slot (co), got {:?}", field.slots())));
        }
        Ok(Self { field })
    }

    pub fn at(&self, p: &[f64], order: usize) -> Result<JetTensor> {
        eval_at(self.field.as_ref(), p, order)
    }
}

/// Standard structure of the block form `J ∂_i = ∂_{i+n}`, `J ∂_{i+n} = ±∂_i`.
pub fn standard_endomorphism(m: usize, kind: StructureKind) -> Vec<f64> {
    let n = m / 2;
    let mut v = vec![0.0; m * m];
    for i in 0..n {
        v[i * m + (i + n)] = 1.0;
        v[(i + n) * m + i] = kind.sign();
    }
    v
}

/// `diag(−1 × p, +1 × q)`.
pub fn standard_metric(p: usize, q: usize) -> Vec<f64> {
    let m = p + q;
    let mut v = vec![0.0; m * m];
    for i in 0..m {
        v[i * m + i] = if i < p { -1.0 } else { 1.0 };
    }
    v
}

/// Metric value at the origin adapted to the standard `J` for signature `(p, q)`:
/// complex case `p̄ = p/2` negative entries in each block, para case neutral.
pub fn standard_hermitian_metric(m: usize, p: usize, kind: StructureKind) -> Result<Vec<f64>> {
    let n = m / 2;
    let mut v = vec![0.0; m * m];
    match kind {
        StructureKind::Complex => {
            if !p.is_multiple_of(2) {
                return Err(GeomError::Precondition(format!("complex structure needs even p, got {p}")));
            }
            let pb = p / 2;
            for i in 0..m {
                let within = i % n;
                v[i * m + i] = if within < pb { -1.0 } else { 1.0 };
            }
        }
        StructureKind::Para => {
            if 2 * p != m {
                return Err(GeomError::Precondition(format!(
                    "para-Hermitian metrics have neutral signature; got p = {p} in dimension {m}"
                )));
            }
            for i in 0..m {
                v[i * m + i] = if i < n { -1.0 } else { 1.0 };
            }
        }
    }
    Ok(v)
}

/// Flat metric / constant endomorphism as fields.
pub fn constant_field(dim: usize, slots: &[Variance], values: Vec<f64>) -> FieldRef {
    Arc::new(ConstantField::new(dim, slots, values))
}
