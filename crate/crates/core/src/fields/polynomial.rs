use crate::error::{GeomError, Result};
use crate::jets::{index_tuples, Jet, JetTensor, Variance};
use crate::poly::{PowerCache, Polynomial};

use super::{Field, Symmetry};

/// Tensor field whose components are polynomials in the chart coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialField {
    dim: usize,
    slots: Vec<Variance>,
    symmetries: Vec<Symmetry>,
    components: Vec<Polynomial>,
}

impl PolynomialField {
    /// Components in row-major slot order.
    pub fn new(dim: usize, slots: &[Variance], components: Vec<Polynomial>) -> Result<Self> {
        let n = dim.pow(slots.len() as u32);
        if components.len() != n {
            return Err(GeomError::DimensionMismatch { expected: n, found: components.len() });
        }
        if let Some(bad) = components.iter().find(|p| p.dim() != dim) {
            return Err(GeomError::DimensionMismatch { expected: dim, found: bad.dim() });
        }
        Ok(Self { dim, slots: slots.to_vec(), symmetries: Vec::new(), components })
    }

    pub fn zero(dim: usize, slots: &[Variance]) -> Self {
        let n = dim.pow(slots.len() as u32);
        Self { dim, slots: slots.to_vec(), symmetries: Vec::new(), components: vec![Polynomial::zero(dim); n] }
    }

    pub fn constant(dim: usize, slots: &[Variance], values: &[f64]) -> Result<Self> {
        Self::new(dim, slots, values.iter().map(|&v| Polynomial::constant(dim, v)).collect())
    }

    pub fn from_fn(dim: usize, slots: &[Variance], mut f: impl FnMut(&[usize]) -> Polynomial) -> Self {
        let components = index_tuples(dim, slots.len()).map(|idx| f(&idx)).collect();
        Self { dim, slots: slots.to_vec(), symmetries: Vec::new(), components }
    }

    pub fn with_symmetries(mut self, symmetries: Vec<Symmetry>) -> Self {
        self.symmetries = symmetries;
        self
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn component(&self, idx: &[usize]) -> &Polynomial {
        &self.components[self.flat(idx)]
    }

    pub fn component_mut(&mut self, idx: &[usize]) -> &mut Polynomial {
        let f = self.flat(idx);
        &mut self.components[f]
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn degree(&self) -> usize {
        self.components.iter().map(Polynomial::degree).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.slots != other.slots || self.dim != other.dim {
            return Err(GeomError::ValenceMismatch("adding polynomial fields of different shapes".into()));
        }
        let components = self.components.iter().zip(&other.components).map(|(a, b)| a.add(b)).collect();
        Ok(Self { components, ..self.clone() })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { components: self.components.iter().map(|p| p.scale(s)).collect(), ..self.clone() }
    }

    /// Replace `x` by `λx` in every component.
    pub fn dilate(&self, lambda: f64) -> Self {
        Self { components: self.components.iter().map(|p| p.dilate(lambda)).collect(), ..self.clone() }
    }

    /// Taylor polynomial of degree `degree` at `center` (in powers of `x − center`).
    pub fn taylor(field: &dyn Field, center: &[f64], degree: usize) -> Result<Self> {
        let t = super::eval_at(field, center, degree)?;
        let m = field.dim();
        let components = t
            .components()
            .map(|(_, jet)| {
                let mut p = Polynomial::zero(m);
                for (k, alpha) in jet.layout().monomials(jet.order()).iter().enumerate() {
                    p.add_term(alpha.exponents().to_vec(), jet.coeffs()[k]);
                }
                p
            })
            .collect();
        Ok(Self { dim: m, slots: field.slots(), symmetries: field.symmetries(), components })
    }

    /// Pullback of a covariant field along `x = Φ(y)`, which stays polynomial.
    pub fn pullback_covariant(&self, map: &[Polynomial]) -> Result<Self> {
        if self.slots.iter().any(|v| *v != Variance::Co) {
            return Err(GeomError::ValenceMismatch("polynomial pullback needs a covariant field".into()));
        }
        if map.len() != self.dim {
            return Err(GeomError::DimensionMismatch { expected: self.dim, found: map.len() });
        }
        let m = self.dim;
        let rank = self.slots.len();
        let composed: Vec<Polynomial> = self.components.iter().map(|p| p.compose(map)).collect();
        // jac[a][i] = ∂_a Φ^i
        let jac: Vec<Vec<Polynomial>> = (0..m).map(|a| map.iter().map(|f| f.partial(a)).collect()).collect();
        let components = index_tuples(m, rank)
            .map(|out| {
                let mut acc = Polynomial::zero(m);
                for inp in index_tuples(m, rank) {
                    let c = &composed[inp.iter().fold(0, |s, &i| s * m + i)];
                    if c.is_zero() {
                        continue;
                    }
                    let mut term = c.clone();
                    for (a, i) in out.iter().zip(&inp) {
                        term = term.mul(&jac[*a][*i]);
                    }
                    acc = acc.add(&term);
                }
                acc
            })
            .collect();
        Ok(Self { dim: m, slots: self.slots.clone(), symmetries: self.symmetries.clone(), components })
    }

    /// Coordinate partials with a trailing covariant slot.
    pub fn partials(&self) -> Self {
        let mut slots = self.slots.clone();
        slots.push(Variance::Co);
        let mut components = Vec::with_capacity(self.components.len() * self.dim);
        for p in &self.components {
            for k in 0..self.dim {
                components.push(p.partial(k));
            }
        }
        Self { dim: self.dim, slots, symmetries: Vec::new(), components }
    }
}

impl Field for PolynomialField {
    fn as_polynomial(&self) -> Option<&PolynomialField> {
        Some(self)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn slots(&self) -> Vec<Variance> {
        self.slots.clone()
    }

    fn symmetries(&self) -> Vec<Symmetry> {
        self.symmetries.clone()
    }

    fn eval(&self, x: &[Jet]) -> Result<JetTensor> {
        if x.len() != self.dim {
            return Err(GeomError::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        let mut cache = PowerCache::new(x);
        let jets = self.components.iter().map(|p| p.eval_cached(&mut cache)).collect();
        JetTensor::from_jets(self.dim, &self.slots, jets)
    }
}
