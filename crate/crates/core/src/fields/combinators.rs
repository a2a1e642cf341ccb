use std::sync::Arc;

use crate::error::{GeomError, Result};
use crate::jets::{einsum, Jet, JetTensor, Variance};
use crate::poly::Polynomial;

use super::{Field, FieldRef, StructureKind, Symmetry};

/// Field with the same value everywhere.
#[derive(Clone, Debug)]
pub struct ConstantField {
    dim: usize,
    slots: Vec<Variance>,
    values: Vec<f64>,
}

impl ConstantField {
    pub fn new(dim: usize, slots: &[Variance], values: Vec<f64>) -> Self {
        assert_eq!(values.len(), dim.pow(slots.len() as u32), "constant field has the wrong number of values");
        Self { dim, slots: slots.to_vec(), values }
    }
}

impl Field for ConstantField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn slots(&self) -> Vec<Variance> {
        self.slots.clone()
    }
    fn eval(&self, x: &[Jet]) -> Result<JetTensor> {
        JetTensor::constant(self.dim, &self.slots, x[0].order(), &self.values)
    }
}

type EvalFn = dyn Fn(&[Jet]) -> Result<JetTensor> + Send + Sync;

/// Field given by an evaluation closure.
#[derive(Clone)]
pub struct FnField {
    dim: usize,
    slots: Vec<Variance>,
    symmetries: Vec<Symmetry>,
    max_order: usize,
    f: Arc<EvalFn>,
}

impl FnField {
    pub fn new(
        dim: usize,
        slots: &[Variance],
        f: impl Fn(&[Jet]) -> Result<JetTensor> + Send + Sync + 'static,
    ) -> Self {
        Self { dim, slots: slots.to_vec(), symmetries: Vec::new(), max_order: crate::jets::MAX_ORDER, f: Arc::new(f) }
    }

    pub fn with_symmetries(mut self, symmetries: Vec<Symmetry>) -> Self {
        self.symmetries = symmetries;
        self
    }

    pub fn with_max_order(mut self, order: usize) -> Self {
        self.max_order = order;
        self
    }
}

impl Field for FnField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn slots(&self) -> Vec<Variance> {
        self.slots.clone()
    }
    fn symmetries(&self) -> Vec<Symmetry> {
        self.symmetries.clone()
    }
    fn max_order(&self) -> usize {
        self.max_order
    }
    fn eval(&self, x: &[Jet]) -> Result<JetTensor> {
        (self.f)(x)
    }
}

fn same_shape(a: &dyn Field, b: &dyn Field) -> Result<()> {
    if a.dim() != b.dim() || a.slots() != b.slots() {
        return Err(GeomError::ValenceMismatch(format!(
            "fields of shape ({}, {:?}) and ({}, {:?})",
            a.dim(),
            a.slots(),
            b.dim(),
            b.slots()
        )));
    }
    Ok(())
}

/// `Σ c_k F_k`.
#[derive(Clone, Debug)]
pub struct LinearCombination {
    terms: Vec<(f64, FieldRef)>,
}

impl LinearCombination {
    pub fn new(terms: Vec<(f64, FieldRef)>) -> Result<Self> {
        let first = terms.first().ok_or_else(|| GeomError::Precondition("empty linear combination".into()))?;
        for (_, f) in &terms[1..] {
            same_shape(first.1.as_ref(), f.as_ref())?;
        }
        Ok(Self { terms })
    }

    /// `a − b`.
    pub fn difference(a: FieldRef, b: FieldRef) -> Result<Self> {
        Self::new(vec![(1.0, a), (-1.0, b)])
    }
}

impl Field for LinearCombination {
    fn dim(&self) -> usize {
        self.terms[0].1.dim()
    }
    fn slots(&self) -> Vec<Variance> {
        self.terms[0].1.slots()
    }
    fn max_order(&self) -> usize {
        self.terms.iter().map(|(_, f)| f.max_order()).min().unwrap_or(0)
    }
    fn eval(&self, x: &[Jet]) -> Result<JetTensor> {
        let mut acc = self.terms[0].1.eval(x)?.scale(self.terms[0].0);
        for (c, f) in &self.terms[1..] {
            acc = acc.lin_comb(1.0, &f.eval(x)?, *c);
        }
        Ok(acc)
    }
}

/// Scalar field times a tensor field.
#[derive(Clone, Debug)]
pub struct ScaledBy {
    scalar: FieldRef,
    field: FieldRef,
}

impl ScaledBy {
    pub fn new(scalar: FieldRef, field: FieldRef) -> Result<Self> {
        if scalar.slots().is_empty() && scalar.dim() == field.dim() {
            Ok(Self { scalar, field })
        } else {
            Err(GeomError::ValenceMismatch("ScaledBy needs a scalar field of the same dimension".into()))
        }
    }
}

impl Field for ScaledBy {
    fn dim(&self) -> usize {
        self.field.dim()
    }
    fn slots(&self) -> Vec<Variance> {
        self.field.slots()
    }
    fn symmetries(&self) -> Vec<Symmetry> {
        self.field.symmetries()
    }
    fn max_order(&self) -> usize {
        self.field.max_order().min(self.scalar.max_order())
    }
    fn eval(&self, x: &[Jet]) -> Result<JetTensor> {
        let s = self.scalar.eval(x)?.as_scalar();
        if s.is_constant() && s.value() == 0.0 {
            return JetTensor::zeros(self.dim(), &self.slots(), s.order());
        }
        Ok(self.field.eval(x)?.mul_scalar(&s))
    }
}

/// `φ·a + (1 − φ)·b` for a scalar cutoff `φ`.
///
/// Where the cutoff jet is exactly 1 (resp. 0) the result is `a` (resp. `b`)
/// verbatim, and the other field is not evaluated.
#[derive(Clone, Debug)]
pub struct Blend {
    a: FieldRef,
    b: FieldRef,
    phi: FieldRef,
}

impl Blend {
    pub fn new(a: FieldRef, b: FieldRef, phi: FieldRef) -> Result<Self> {
        same_shape(a.as_ref(), b.as_ref())?;
        if !phi.slots().is_empty() || phi.dim() != a.dim() {
            return Err(GeomError::ValenceMismatch("blend weight must be a scalar field on the same chart".into()));
        }
        Ok(Self { a, b, phi })
    }
}

/// Convenience constructor returning a shared field.
pub fn blend(a: FieldRef, b: FieldRef, phi: FieldRef) -> Result<FieldRef> {
    Ok(Arc::new(Blend::new(a, b, phi)?))
}

impl Field for Blend {
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn slots(&self) -> Vec<Variance> {
        self.a.slots()
    }
    fn symmetries(&self) -> Vec<Symmetry> {
        let sb = self.b.symmetries();
        self.a.symmetries().into_iter().filter(|s| sb.contains(s)).collect()
    }
    fn max_order(&self) -> usize {
        self.a.max_order().min(self.b.max_order()).min(self.phi.max_order())
    }
    fn eval(&self, x: &[Jet]) -> Result<JetTensor> {
        let phi = self.phi.eval(x)?.as_scalar();
        if phi.is_constant() {
            if phi.value() == 1.0 {
                return self.a.eval(x);
            }
            if phi.value() == 0.0 {
                return self.b.eval(x);
            }
        }
        let a = self.a.eval(x)?;
        let b = self.b.eval(x)?;
        // b + φ (a − b)
        Ok(b.add(&a.sub(&b).mul_scalar(&phi)))
    }
}

/// `inside` where the cutoff jet is exactly 1, `outside` where it is exactly 0,
/// and `transition` elsewhere. Used when the transition formula reduces to the
/// plateau fields only in exact arithmetic.
#[derive(Clone, Debug)]
pub struct PlateauSwitch {
    phi: FieldRef,
    inside: FieldRef,
    outside: FieldRef,
    transition: FieldRef,
}

impl PlateauSwitch {
    pub fn new(phi: FieldRef, inside: FieldRef, outside: FieldRef, transition: FieldRef) -> Result<Self> {
        same_shape(inside.as_ref(), outside.as_ref())?;
        same_shape(inside.as_ref(), transition.as_ref())?;
        if !phi.slots().is_empty() || phi.dim() != inside.dim() {
            return Err(GeomError::ValenceMismatch("switch weight must be a scalar field on the same chart".into()));
        }
        Ok(Self { phi, inside, outside, transition })
    }

    pub fn shared(phi: FieldRef, inside: FieldRef, outside: FieldRef, transition: FieldRef) -> Result<FieldRef> {
        Ok(Arc::new(Self::new(phi, inside, outside, transition)?))
    }
}

impl Field for PlateauSwitch {
    fn dim(&self) -> usize {
        self.inside.dim()
    }
    fn slots(&self) -> Vec<Variance> {
        self.inside.slots()
    }
    fn symmetries(&self) -> Vec<Symmetry> {
        self.transition.symmetries()
    }
    fn max_order(&self) -> usize {
        self.inside.max_order().min(self.outside.max_order()).min(self.transition.max_order())
    }
    fn eval(&self, x: &[Jet]) -> Result<JetTensor> {
        let phi = self.phi.eval(x)?.as_scalar();
        if phi.is_constant() {
            if phi.value() == 1.0 {
                return self.inside.eval(x);
            }
            if phi.value() == 0.0 {
                return self.outside.eval(x);
            }
        }
        self.transition.eval(x)
    }
}

/// `½(g ∓ J*g)`: the part of `g` compatible with `J` (`J*g = ∓g` for `J±`).
#[derive(Clone, Debug)]
pub struct HermitianAverage {
    g: FieldRef,
    j: FieldRef,
    kind: StructureKind,
}

impl HermitianAverage {
    pub fn new(g: FieldRef, j: FieldRef, kind: StructureKind) -> Result<Self> {
        if g.slots() != [Variance::Co, Variance::Co] || j.slots() != [Variance::Co, Variance::Contra] {
            return Err(GeomError::ValenceMismatch("averaging needs a (co, co) metric and a (co, contra) J".into()));
        }
        if g.dim() != j.dim() {
            return Err(GeomError::DimensionMismatch { expected: g.dim(), found: j.dim() });
        }
        Ok(Self { g, j, kind })
    }
}

/// Average `g` over the action of `J` (see [`HermitianAverage`]).
pub fn pullback_average(g: FieldRef, j: FieldRef, kind: StructureKind) -> Result<FieldRef> {
    Ok(Arc::new(HermitianAverage::new(g, j, kind)?))
}

impl Field for HermitianAverage {
    fn dim(&self) -> usize {
        self.g.dim()
    }
    fn slots(&self) -> Vec<Variance> {
        vec![Variance::Co, Variance::Co]
    }
    fn symmetries(&self) -> Vec<Symmetry> {
        vec![Symmetry::Symmetric(0, 1)]
    }
    fn max_order(&self) -> usize {
        self.g.max_order().min(self.j.max_order())
    }
    fn eval(&self, x: &[Jet]) -> Result<JetTensor> {
        let g = self.g.eval(x)?;
        let j = self.j.eval(x)?;
        let jg = einsum("ia,jb,ab->ij", &[&j, &j, &g]);
        Ok(g.lin_comb(0.5, &jg, -0.5 * self.kind.sign()))
    }
}

/// `Θ(φ(x)·x)` for a field `Θ` and scalar cutoff `φ`.
#[derive(Clone, Debug)]
pub struct ComposeRescaled {
    theta: FieldRef,
    phi: FieldRef,
}

impl ComposeRescaled {
    pub fn new(theta: FieldRef, phi: FieldRef) -> Result<Self> {
        if !phi.slots().is_empty() || phi.dim() != theta.dim() {
            return Err(GeomError::ValenceMismatch("rescaling weight must be a scalar field on the same chart".into()));
        }
        Ok(Self { theta, phi })
    }
}

/// See [`ComposeRescaled`].
pub fn compose_with_rescaled_argument(theta: FieldRef, phi: FieldRef) -> Result<FieldRef> {
    Ok(Arc::new(ComposeRescaled::new(theta, phi)?))
}

impl Field for ComposeRescaled {
    fn dim(&self) -> usize {
        self.theta.dim()
    }
    fn slots(&self) -> Vec<Variance> {
        self.theta.slots()
    }
    fn symmetries(&self) -> Vec<Symmetry> {
        self.theta.symmetries()
    }
    fn max_order(&self) -> usize {
        self.theta.max_order().min(self.phi.max_order())
    }
    fn eval(&self, x: &[Jet]) -> Result<JetTensor> {
        let phi = self.phi.eval(x)?.as_scalar();
        if phi.is_constant() && phi.value() == 1.0 {
            return self.theta.eval(x);
        }
        let y: Vec<Jet> = x.iter().map(|xi| xi * &phi).collect();
        self.theta.eval(&y)
    }
}

/// Pullback of a field along a polynomial coordinate change `x = Φ(y)`.
///
/// Tensors transform with the Jacobian `∂_a Φ^i` and its inverse; a
/// connection additionally picks up the second derivatives of `Φ`.
#[derive(Clone, Debug)]
pub struct PullbackField {
    inner: FieldRef,
    map: Vec<Polynomial>,
    jacobian: Vec<Polynomial>,
    hessian: Vec<Polynomial>,
    connection: bool,
}

impl PullbackField {
    pub fn tensor(inner: FieldRef, map: Vec<Polynomial>) -> Result<Self> {
        Self::build(inner, map, false)
    }

    pub fn connection(inner: FieldRef, map: Vec<Polynomial>) -> Result<Self> {
        if inner.slots() != [Variance::Co, Variance::Co, Variance::Contra] {
            return Err(GeomError::ValenceMismatch("connection pullback needs (co, co, contra) slots".into()));
        }
        Self::build(inner, map, true)
    }

    fn build(inner: FieldRef, map: Vec<Polynomial>, connection: bool) -> Result<Self> {
        let m = inner.dim();
        if map.len() != m || map.iter().any(|p| p.dim() != m) {
            return Err(GeomError::DimensionMismatch { expected: m, found: map.len() });
        }
        // jacobian[a * m + i] = ∂_a Φ^i, hessian[(a * m + b) * m + k] = ∂_a ∂_b Φ^k
        let mut jacobian = Vec::with_capacity(m * m);
        let mut hessian = Vec::with_capacity(m * m * m);
        for a in 0..m {
            for phi in &map {
                jacobian.push(phi.partial(a));
            }
        }
        for a in 0..m {
            for b in 0..m {
                for phi in &map {
                    hessian.push(phi.partial(a).partial(b));
                }
            }
        }
        Ok(Self { inner, map, jacobian, hessian, connection })
    }

    pub fn map(&self) -> &[Polynomial] {
        &self.map
    }
}

fn letters(n: usize) -> Vec<char> {
    "abcdefgh".chars().take(n).collect()
}

impl Field for PullbackField {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn slots(&self) -> Vec<Variance> {
        self.inner.slots()
    }
    fn symmetries(&self) -> Vec<Symmetry> {
        self.inner.symmetries()
    }
    fn max_order(&self) -> usize {
        self.inner.max_order()
    }
    fn eval(&self, y: &[Jet]) -> Result<JetTensor> {
        let m = self.dim();
        let x: Vec<Jet> = self.map.iter().map(|p| p.eval_jets(y)).collect::<Result<_>>()?;
        let jets = self.jacobian.iter().map(|p| p.eval_jets(y)).collect::<Result<Vec<_>>>()?;
        let jac = JetTensor::from_jets(m, &[Variance::Co, Variance::Contra], jets)?;
        let inv = jac.inverse()?;
        let mut t = self.inner.eval(&x)?;
        let slots = t.slots().to_vec();
        let rank = slots.len();
        for (s, v) in slots.iter().enumerate() {
            let ls = letters(rank);
            let mut input: String = ls.iter().collect();
            input.replace_range(s..s + 1, "z");
            let out: String = ls.iter().collect();
            let new = ls[s];
            let spec = match v {
                Variance::Co => format!("{new}z,{input}->{out}"),
                Variance::Contra => format!("{input},z{new}->{out}"),
            };
            t = match v {
                Variance::Co => einsum(&spec, &[&jac, &t]),
                Variance::Contra => einsum(&spec, &[&t, &inv]),
            };
        }
        if self.connection {
            let jets = self.hessian.iter().map(|p| p.eval_jets(y)).collect::<Result<Vec<_>>>()?;
            let hess = JetTensor::from_jets(m, &[Variance::Co, Variance::Co, Variance::Contra], jets)?;
            t = t.add(&einsum("abk,kc->abc", &[&hess, &inv]));
        }
        Ok(t)
    }
}
