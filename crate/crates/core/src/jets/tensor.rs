use nalgebra::DMatrix;

use super::jet::Jet;
use super::layout::{layout, Layout};
use crate::error::{GeomError, Result};

/// Position of a tensor slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variance {
    Co,
    Contra,
}

impl Variance {
    pub fn flip(self) -> Self {
        match self {
            Variance::Co => Variance::Contra,
            Variance::Contra => Variance::Co,
        }
    }
}

/// Components of a tensor field, each one a jet about a common point.
///
/// Components are stored row-major over the slots; each component occupies a
/// contiguous block of `layout.len(order)` Taylor coefficients.
#[derive(Clone)]
pub struct JetTensor {
    dim: usize,
    slots: Vec<Variance>,
    order: usize,
    layout: &'static Layout,
    data: Vec<f64>,
}

impl std::fmt::Debug for JetTensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("JetTensor")
            .field("dim", &self.dim)
            .field("slots", &self.slots)
            .field("order", &self.order)
            .field("values", &self.values())
            .finish()
    }
}

fn ncomp(dim: usize, rank: usize) -> usize {
    dim.pow(rank as u32)
}

impl JetTensor {
    pub fn zeros(dim: usize, slots: &[Variance], order: usize) -> Result<Self> {
        let layout = layout(dim)?;
        if order > super::MAX_ORDER {
            return Err(GeomError::InsufficientOrder { requested: order, available: super::MAX_ORDER });
        }
        let data = vec![0.0; ncomp(dim, slots.len()) * layout.len(order)];
        Ok(Self { dim, slots: slots.to_vec(), order, layout, data })
    }

    /// Build from one jet per component (row-major). Order is the minimum jet order.
    pub fn from_jets(dim: usize, slots: &[Variance], jets: Vec<Jet>) -> Result<Self> {
        let n = ncomp(dim, slots.len());
        if jets.len() != n {
            return Err(GeomError::DimensionMismatch { expected: n, found: jets.len() });
        }
        if jets.iter().any(|j| j.dim() != dim) {
            return Err(GeomError::DimensionMismatch { expected: dim, found: jets[0].dim() });
        }
        let order = jets.iter().map(Jet::order).min().unwrap_or(0);
        let layout = layout(dim)?;
        let block = layout.len(order);
        let mut data = Vec::with_capacity(n * block);
        for j in &jets {
            data.extend_from_slice(&j.coeffs()[..block]);
        }
        Ok(Self { dim, slots: slots.to_vec(), order, layout, data })
    }

    pub fn from_fn(
        dim: usize,
        slots: &[Variance],
        mut f: impl FnMut(&[usize]) -> Result<Jet>,
    ) -> Result<Self> {
        let rank = slots.len();
        let mut jets = Vec::with_capacity(ncomp(dim, rank));
        for flat in 0..ncomp(dim, rank) {
            jets.push(f(&unflatten(flat, dim, rank))?);
        }
        Self::from_jets(dim, slots, jets)
    }

    /// Constant tensor with the given values (row-major).
    pub fn constant(dim: usize, slots: &[Variance], order: usize, values: &[f64]) -> Result<Self> {
        let mut t = Self::zeros(dim, slots, order)?;
        if values.len() != t.len() {
            return Err(GeomError::DimensionMismatch { expected: t.len(), found: values.len() });
        }
        let block = t.block();
        for (c, v) in values.iter().enumerate() {
            t.data[c * block] = *v;
        }
        Ok(t)
    }

    pub fn scalar(jet: Jet) -> Self {
        let dim = jet.dim();
        let order = jet.order();
        let layout = jet.layout();
        Self { dim, slots: Vec::new(), order, layout, data: jet.into_coeffs() }
    }

    /// Kronecker delta δ_i^j with slots (Co, Contra).
    pub fn identity(dim: usize, order: usize) -> Result<Self> {
        let mut v = vec![0.0; dim * dim];
        for i in 0..dim {
            v[i * dim + i] = 1.0;
        }
        Self::constant(dim, &[Variance::Co, Variance::Contra], order, &v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Variance] {
        &self.slots
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of components.
    pub fn len(&self) -> usize {
        ncomp(self.dim, self.slots.len())
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn block(&self) -> usize {
        self.layout.len(self.order)
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| {
            debug_assert!(i < self.dim);
            acc * self.dim + i
        })
    }

    pub fn component(&self, idx: &[usize]) -> Jet {
        self.component_flat(self.flat_index(idx))
    }

    pub fn component_flat(&self, flat: usize) -> Jet {
        let b = self.block();
        Jet::from_parts(self.layout, self.order, self.data[flat * b..(flat + 1) * b].to_vec())
    }

    pub fn set_component(&mut self, idx: &[usize], jet: &Jet) {
        let b = self.block();
        let flat = self.flat_index(idx);
        self.data[flat * b..(flat + 1) * b].copy_from_slice(&jet.coeffs()[..b]);
    }

    pub fn as_scalar(&self) -> Jet {
        assert!(self.slots.is_empty(), "tensor of rank {} is not a scalar", self.rank());
        self.component_flat(0)
    }

    pub fn value(&self, idx: &[usize]) -> f64 {
        self.data[self.flat_index(idx) * self.block()]
    }

    /// Component values at the base point, row-major.
    pub fn values(&self) -> Vec<f64> {
        self.data.iter().step_by(self.block()).copied().collect()
    }

    pub fn max_abs_value(&self) -> f64 {
        self.values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn components(&self) -> impl Iterator<Item = (Vec<usize>, Jet)> + '_ {
        (0..self.len()).map(move |flat| (unflatten(flat, self.dim, self.rank()), self.component_flat(flat)))
    }

    /// Copy with the slot variances replaced (no change to components).
    pub fn with_slots(mut self, slots: &[Variance]) -> Self {
        assert_eq!(slots.len(), self.slots.len());
        self.slots = slots.to_vec();
        self
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        let old = self.block();
        let new = self.layout.len(order);
        let mut data = Vec::with_capacity(self.len() * new);
        for c in 0..self.len() {
            data.extend_from_slice(&self.data[c * old..c * old + new]);
        }
        Self { dim: self.dim, slots: self.slots.clone(), order, layout: self.layout, data }
    }

    /// Coordinate partial derivatives, appended as a trailing covariant slot:
    /// `out[.., k] = ∂_k self[..]`.
    pub fn partials(&self) -> Result<Self> {
        if self.order == 0 {
            return Err(GeomError::InsufficientOrder { requested: 1, available: 0 });
        }
        let order = self.order - 1;
        let old = self.block();
        let new = self.layout.len(order);
        let m = self.dim;
        let mut data = vec![0.0; self.len() * m * new];
        for c in 0..self.len() {
            let src = &self.data[c * old..(c + 1) * old];
            for k in 0..m {
                let start = (c * m + k) * new;
                self.layout.partial_acc(k, order, src, &mut data[start..start + new]);
            }
        }
        let mut slots = self.slots.clone();
        slots.push(Variance::Co);
        Ok(Self { dim: m, slots, order, layout: self.layout, data })
    }

    fn check_same_shape(&self, other: &Self) {
        assert_eq!(self.dim, other.dim, "tensor dimensions differ");
        assert_eq!(self.slots, other.slots, "tensor slots differ");
    }

    fn combine(&self, other: &Self, a: f64, b: f64) -> Self {
        self.check_same_shape(other);
        let order = self.order.min(other.order);
        let n = self.layout.len(order);
        let (bs, bo) = (self.block(), other.block());
        let mut data = Vec::with_capacity(self.len() * n);
        for c in 0..self.len() {
            let x = &self.data[c * bs..c * bs + n];
            let y = &other.data[c * bo..c * bo + n];
            data.extend(x.iter().zip(y).map(|(u, v)| a * u + b * v));
        }
        Self { dim: self.dim, slots: self.slots.clone(), order, layout: self.layout, data }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, 1.0, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, 1.0, -1.0)
    }

    /// `a·self + b·other`
    pub fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Self {
        self.combine(other, a, b)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Multiply every component by a scalar jet.
    pub fn mul_scalar(&self, s: &Jet) -> Self {
        let order = self.order.min(s.order());
        let n = self.layout.len(order);
        let b = self.block();
        let mut data = vec![0.0; self.len() * n];
        for c in 0..self.len() {
            self.layout
                .mul_acc(order, &self.data[c * b..(c + 1) * b], s.coeffs(), &mut data[c * n..(c + 1) * n]);
        }
        Self { dim: self.dim, slots: self.slots.clone(), order, layout: self.layout, data }
    }

    /// Largest absolute difference of any stored coefficient.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.check_same_shape(other);
        let order = self.order.min(other.order);
        let n = self.layout.len(order);
        let (bs, bo) = (self.block(), other.block());
        let mut m: f64 = 0.0;
        for c in 0..self.len() {
            for k in 0..n {
                m = m.max((self.data[c * bs + k] - other.data[c * bo + k]).abs());
            }
        }
        m
    }

    /// Largest absolute difference of component values.
    pub fn max_value_diff(&self, other: &Self) -> f64 {
        self.check_same_shape(other);
        self.values()
            .iter()
            .zip(other.values())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Exactly equal coefficients (up to the lower of the two orders).
    pub fn exactly_equal(&self, other: &Self) -> bool {
        self.max_abs_diff(other) == 0.0
    }

    pub fn is_exactly_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    /// Inverse of a rank-2 tensor viewed as a matrix `M[i][j] = T[i,j]`.
    ///
    /// The result has slots `(flip(s1), flip(s0))`, so that `T_{ij} S^{jk} = δ_i^k`
    /// for a metric and `J_i^j K_j^k = δ_i^k` for an endomorphism.
    pub fn inverse(&self) -> Result<Self> {
        if self.rank() != 2 {
            return Err(GeomError::ValenceMismatch(format!("inverse of a rank-{} tensor", self.rank())));
        }
        let m = self.dim;
        let a0 = DMatrix::from_row_slice(m, m, &self.values());
        let det = a0.determinant();
        let inv0 = a0
            .clone()
            .try_inverse()
            .filter(|_| det.abs() > 1e-300)
            .ok_or(GeomError::SingularMetric { point: Vec::new(), det })?;
        let slots = [self.slots[1].flip(), self.slots[0].flip()];
        let b0 = Self::constant(m, &slots, self.order, inv0.transpose().as_slice())?;
        if self.order == 0 {
            return Ok(b0);
        }
        // A = A0 (I + A0^{-1} N) with N nilpotent in the jet algebra, so
        // A^{-1} = Σ_k (−A0^{-1} N)^k A0^{-1}.
        let mut nil = self.clone();
        let b = self.block();
        for c in 0..self.len() {
            nil.data[c * b] = 0.0;
        }
        let q = matmul(&b0, &nil).scale(-1.0);
        let mut term = b0.clone();
        let mut acc = b0;
        for _ in 0..self.order {
            term = matmul(&q, &term);
            acc = acc.add(&term);
        }
        Ok(acc.with_slots(&slots))
    }

    /// Contraction described by an index string, e.g. `"ij,jk->ik"`.
    pub fn einsum(spec: &str, operands: &[&JetTensor]) -> JetTensor {
        einsum(spec, operands)
    }
}

fn unflatten(mut flat: usize, dim: usize, rank: usize) -> Vec<usize> {
    let mut idx = vec![0; rank];
    for slot in (0..rank).rev() {
        idx[slot] = flat % dim;
        flat /= dim;
    }
    idx
}

/// Row-major index tuples of a rank-`rank` tensor in `dim` dimensions.
pub fn index_tuples(dim: usize, rank: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..ncomp(dim, rank)).map(move |f| unflatten(f, dim, rank))
}

/// Matrix product of two rank-2 tensors as plain matrices, ignoring variance.
fn matmul(a: &JetTensor, b: &JetTensor) -> JetTensor {
    let m = a.dim;
    let order = a.order.min(b.order);
    let n = a.layout.len(order);
    let (ba, bb) = (a.block(), b.block());
    let mut data = vec![0.0; m * m * n];
    for i in 0..m {
        for k in 0..m {
            let out = &mut data[(i * m + k) * n..(i * m + k + 1) * n];
            for j in 0..m {
                let x = &a.data[(i * m + j) * ba..(i * m + j + 1) * ba];
                let y = &b.data[(j * m + k) * bb..(j * m + k + 1) * bb];
                a.layout.mul_acc(order, x, y, out);
            }
        }
    }
    JetTensor { dim: m, slots: a.slots.clone(), order, layout: a.layout, data }
}

struct Operand<'a> {
    t: &'a JetTensor,
    letters: Vec<u8>,
}

fn contract_pair(a: &Operand, b: &Operand, keep: &[u8], keep_slots: Vec<Variance>) -> JetTensor {
    let dim = a.t.dim;
    assert_eq!(dim, b.t.dim, "einsum operands have different dimensions");
    let layout = a.t.layout;
    let order = a.t.order.min(b.t.order);
    let n = layout.len(order);

    let mut union: Vec<u8> = Vec::new();
    for &l in a.letters.iter().chain(&b.letters).chain(keep) {
        if !union.contains(&l) {
            union.push(l);
        }
    }
    let strides = |letters: &[u8], block: usize| -> Vec<usize> {
        let rank = letters.len();
        union
            .iter()
            .map(|u| {
                letters
                    .iter()
                    .enumerate()
                    .filter(|(_, l)| *l == u)
                    .map(|(p, _)| dim.pow((rank - 1 - p) as u32) * block)
                    .sum()
            })
            .collect()
    };
    let sa = strides(&a.letters, a.t.block());
    let sb = strides(&b.letters, b.t.block());
    let so = strides(keep, n);

    let mut data = vec![0.0; ncomp(dim, keep.len()) * n];
    let u = union.len();
    let mut counter = vec![0usize; u];
    let (mut ia, mut ib, mut io) = (0usize, 0usize, 0usize);
    loop {
        layout.mul_acc(order, &a.t.data[ia..], &b.t.data[ib..], &mut data[io..io + n]);
        // odometer increment with incremental offsets
        let mut pos = u;
        loop {
            if pos == 0 {
                return JetTensor { dim, slots: keep_slots, order, layout, data };
            }
            pos -= 1;
            counter[pos] += 1;
            ia += sa[pos];
            ib += sb[pos];
            io += so[pos];
            if counter[pos] < dim {
                break;
            }
            ia -= sa[pos] * dim;
            ib -= sb[pos] * dim;
            io -= so[pos] * dim;
            counter[pos] = 0;
        }
    }
}

/// Einstein-summation contraction of jet tensors.
///
/// Letters repeated across operands but absent from the output are summed;
/// such a pair must join a covariant and a contravariant slot. Letters that
/// reach the output keep the variance of their first occurrence. Operands
/// are contracted pairwise from left to right.
///
/// Panics on malformed specifications; they are programming errors.
pub fn einsum(spec: &str, operands: &[&JetTensor]) -> JetTensor {
    let (lhs, rhs) = spec.split_once("->").unwrap_or_else(|| panic!("einsum spec {spec:?} lacks '->'"));
    let inputs: Vec<Vec<u8>> = lhs.split(',').map(|s| s.trim().bytes().collect()).collect();
    let output: Vec<u8> = rhs.trim().bytes().collect();
    assert_eq!(inputs.len(), operands.len(), "einsum {spec:?}: operand count");
    for (letters, t) in inputs.iter().zip(operands) {
        assert_eq!(letters.len(), t.rank(), "einsum {spec:?}: rank of operand");
    }

    // variance bookkeeping
    let mut occurrences: Vec<(u8, Variance)> = Vec::new();
    for (letters, t) in inputs.iter().zip(operands) {
        for (l, v) in letters.iter().zip(t.slots()) {
            occurrences.push((*l, *v));
        }
    }
    let variance_of = |l: u8| -> Variance {
        occurrences
            .iter()
            .find(|(x, _)| *x == l)
            .map(|(_, v)| *v)
            .unwrap_or_else(|| panic!("einsum {spec:?}: output letter '{}' not in inputs", l as char))
    };
    let mut seen: Vec<u8> = Vec::new();
    for &(l, _) in &occurrences {
        if seen.contains(&l) || output.contains(&l) {
            continue;
        }
        seen.push(l);
        let vs: Vec<Variance> = occurrences.iter().filter(|(x, _)| *x == l).map(|(_, v)| *v).collect();
        assert!(
            vs.len() == 2 && vs[0] != vs[1],
            "einsum {spec:?}: summed letter '{}' must join one covariant and one contravariant slot",
            l as char
        );
    }
    let out_slots: Vec<Variance> = output.iter().map(|&l| variance_of(l)).collect();

    let first = operands[0];
    let mut current: Option<JetTensor> = None;
    let mut cur_letters = inputs[0].clone();
    let one;
    let (rest_ops, rest_letters): (Vec<&JetTensor>, Vec<Vec<u8>>) = if operands.len() == 1 {
        one = JetTensor::scalar(Jet::constant(1.0, first.dim(), first.order()).expect("valid dim"));
        (vec![&one], vec![Vec::new()])
    } else {
        (operands[1..].to_vec(), inputs[1..].to_vec())
    };
    for (k, (t, letters)) in rest_ops.iter().zip(&rest_letters).enumerate() {
        let last = k + 1 == rest_ops.len();
        let keep: Vec<u8> = if last {
            output.clone()
        } else {
            let later: Vec<u8> = rest_letters[k + 1..].iter().flatten().copied().chain(output.iter().copied()).collect();
            let mut keep = Vec::new();
            for &l in cur_letters.iter().chain(letters.iter()) {
                if later.contains(&l) && !keep.contains(&l) {
                    keep.push(l);
                }
            }
            keep
        };
        let keep_slots: Vec<Variance> = keep.iter().map(|&l| variance_of(l)).collect();
        let a = Operand { t: current.as_ref().unwrap_or(first), letters: cur_letters.clone() };
        let b = Operand { t, letters: letters.clone() };
        let next = contract_pair(&a, &b, &keep, keep_slots);
        current = Some(next);
        cur_letters = keep;
    }
    let mut out = current.expect("at least one contraction");
    out.slots = out_slots;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::coordinate_jets;
    use Variance::{Co, Contra};

    fn poly_metric(p: &[f64]) -> JetTensor {
        let x = coordinate_jets(p, 3).unwrap();
        let one = x[0].constant_like(1.0);
        let g00 = &one + &(&x[0] * &x[1]);
        let g01 = x[1].scale(0.3);
        let g11 = &one + &(&x[0] * &x[0]).scale(0.5);
        JetTensor::from_jets(2, &[Co, Co], vec![g00, g01.clone(), g01, g11]).unwrap()
    }

    #[test]
    fn inverse_is_inverse_as_jets() {
        let g = poly_metric(&[0.2, -0.4]);
        let gi = g.inverse().unwrap();
        assert_eq!(gi.slots(), &[Contra, Contra]);
        let prod = einsum("ij,jk->ik", &[&g, &gi]);
        let id = JetTensor::identity(2, 3).unwrap();
        assert!(prod.max_abs_diff(&id) < 1e-14);
    }

    #[test]
    fn einsum_matches_index_loops() {
        let g = poly_metric(&[0.1, 0.7]);
        let gi = g.inverse().unwrap();
        let dg = g.partials().unwrap();
        let t = einsum("ija,jk->ika", &[&dg, &gi]);
        for i in 0..2 {
            for k in 0..2 {
                for a in 0..2 {
                    let mut acc = dg.component(&[i, 0, a]).zero_like().truncate(2);
                    for j in 0..2 {
                        acc += &(&dg.component(&[i, j, a]) * &gi.component(&[j, k]));
                    }
                    assert!((&t.component(&[i, k, a]) - &acc).coeffs().iter().all(|c| c.abs() < 1e-15));
                }
            }
        }
    }

    #[test]
    fn einsum_permutation_and_trace() {
        let g = poly_metric(&[0.3, 0.1]);
        let dg = g.partials().unwrap();
        let p = einsum("ijk->kji", &[&dg]);
        assert_eq!(p.component(&[1, 0, 0]), dg.component(&[0, 0, 1]));
        let gi = g.inverse().unwrap();
        let tr = einsum("ij,ij->", &[&g, &gi]);
        assert!((tr.as_scalar().value() - 2.0).abs() < 1e-14);
        assert!(tr.as_scalar().coeffs()[1..].iter().all(|c| c.abs() < 1e-13));
    }

    #[test]
    #[should_panic(expected = "covariant and one contravariant")]
    fn einsum_rejects_same_variance_contraction() {
        let g = poly_metric(&[0.0, 0.0]);
        einsum("ij,jk->ik", &[&g, &g]);
    }

    #[test]
    fn partials_slot_layout() {
        let g = poly_metric(&[0.5, 0.25]);
        let dg = g.partials().unwrap();
        assert_eq!(dg.slots(), &[Co, Co, Co]);
        assert_eq!(dg.order(), 2);
        // ∂_1 g_00 = x0
        assert!((dg.value(&[0, 0, 1]) - 0.5).abs() < 1e-15);
        assert!((dg.value(&[0, 0, 0]) - 0.25).abs() < 1e-15);
    }
}
