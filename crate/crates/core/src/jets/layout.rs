use std::collections::HashMap;
use std::sync::OnceLock;

use crate::error::{GeomError, Result};

/// Highest supported truncation order.
pub const MAX_ORDER: usize = 4;
/// Highest supported number of jet variables.
pub const MAX_DIM: usize = 8;

/// Exponent vector of a monomial / partial derivative.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u8>);

impl MultiIndex {
    pub fn new(exponents: Vec<u8>) -> Self {
        Self(exponents)
    }

    pub fn zero(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn unit(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        Self(e)
    }

    pub fn exponents(&self) -> &[u8] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    /// α! = Π α_i!
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&e| (1..=e as u32).map(f64::from).product::<f64>())
            .product()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl From<&[u8]> for MultiIndex {
    fn from(e: &[u8]) -> Self {
        Self(e.to_vec())
    }
}

/// Coefficient layout shared by every jet in `dim` variables.
///
/// Monomials are enumerated in graded lexicographic order, so the
/// coefficients of an order-K jet are a prefix of the order-4 layout and
/// truncation is slicing.
pub struct Layout {
    dim: usize,
    monomials: Vec<MultiIndex>,
    index: HashMap<MultiIndex, usize>,
    len_by_order: [usize; MAX_ORDER + 1],
    mul: Vec<(u16, u16, u16)>,
    mul_len_by_order: [usize; MAX_ORDER + 1],
    // per variable: (target, source, factor), sorted by target
    deriv: Vec<Vec<(u16, u16, f64)>>,
    deriv_len_by_order: Vec<[usize; MAX_ORDER + 1]>,
}

fn enumerate_degree(dim: usize, degree: usize, prefix: &mut Vec<u8>, out: &mut Vec<MultiIndex>) {
    if prefix.len() == dim - 1 {
        let used: usize = prefix.iter().map(|&e| e as usize).sum();
        let mut e = prefix.clone();
        e.push((degree - used) as u8);
        out.push(MultiIndex(e));
        return;
    }
    let used: usize = prefix.iter().map(|&e| e as usize).sum();
    for k in (0..=degree - used).rev() {
        prefix.push(k as u8);
        enumerate_degree(dim, degree, prefix, out);
        prefix.pop();
    }
}

impl Layout {
    fn build(dim: usize) -> Self {
        let mut monomials = Vec::new();
        let mut len_by_order = [0; MAX_ORDER + 1];
        for d in 0..=MAX_ORDER {
            enumerate_degree(dim, d, &mut Vec::new(), &mut monomials);
            len_by_order[d] = monomials.len();
        }
        let index: HashMap<MultiIndex, usize> =
            monomials.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();

        let mut mul = Vec::new();
        for (i, a) in monomials.iter().enumerate() {
            for (j, b) in monomials.iter().enumerate() {
                if a.degree() + b.degree() <= MAX_ORDER {
                    let k = index[&a.add(b)];
                    mul.push((i as u16, j as u16, k as u16));
                }
            }
        }
        mul.sort_by_key(|&(i, j, k)| (k, i, j));
        let mut mul_len_by_order = [0; MAX_ORDER + 1];
        for (order, slot) in mul_len_by_order.iter_mut().enumerate() {
            *slot = mul.iter().take_while(|t| (t.2 as usize) < len_by_order[order]).count();
        }

        let mut deriv = Vec::with_capacity(dim);
        let mut deriv_len_by_order = Vec::with_capacity(dim);
        for v in 0..dim {
            let mut table = Vec::new();
            for (t, alpha) in monomials.iter().enumerate() {
                if alpha.degree() < MAX_ORDER {
                    let s = index[&alpha.add(&MultiIndex::unit(dim, v))];
                    table.push((t as u16, s as u16, f64::from(alpha.0[v]) + 1.0));
                }
            }
            let mut lens = [0; MAX_ORDER + 1];
            for (order, slot) in lens.iter_mut().enumerate() {
                *slot = table.iter().take_while(|e| (e.0 as usize) < len_by_order[order]).count();
            }
            deriv.push(table);
            deriv_len_by_order.push(lens);
        }

        Layout {
            dim,
            monomials,
            index,
            len_by_order,
            mul,
            mul_len_by_order,
            deriv,
            deriv_len_by_order,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of coefficients of a jet of the given order.
    pub fn len(&self, order: usize) -> usize {
        self.len_by_order[order]
    }

    pub fn monomial(&self, k: usize) -> &MultiIndex {
        &self.monomials[k]
    }

    pub fn monomials(&self, order: usize) -> &[MultiIndex] {
        &self.monomials[..self.len(order)]
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.index.get(alpha).copied()
    }

    /// `out += a * b`, truncated at `order`.
    #[inline]
    pub fn mul_acc(&self, order: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
        for &(i, j, k) in &self.mul[..self.mul_len_by_order[order]] {
            out[k as usize] += a[i as usize] * b[j as usize];
        }
    }

    /// `out += s * a * b`, truncated at `order`.
    #[inline]
    pub fn mul_acc_scaled(&self, order: usize, s: f64, a: &[f64], b: &[f64], out: &mut [f64]) {
        for &(i, j, k) in &self.mul[..self.mul_len_by_order[order]] {
            out[k as usize] += s * a[i as usize] * b[j as usize];
        }
    }

    /// `out += ∂_var a`, where `out` has order `order` (and `a` at least `order + 1`).
    #[inline]
    pub fn partial_acc(&self, var: usize, order: usize, a: &[f64], out: &mut [f64]) {
        for &(t, s, f) in &self.deriv[var][..self.deriv_len_by_order[var][order]] {
            out[t as usize] += f * a[s as usize];
        }
    }
}

static LAYOUTS: [OnceLock<Layout>; MAX_DIM + 1] = [const { OnceLock::new() }; MAX_DIM + 1];

/// Shared layout for jets in `dim` variables.
pub fn layout(dim: usize) -> Result<&'static Layout> {
    if dim == 0 || dim > MAX_DIM {
        return Err(GeomError::UnsupportedDimension(dim));
    }
    Ok(LAYOUTS[dim].get_or_init(|| Layout::build(dim)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn sizes_match_monomial_counts() {
        for dim in 1..=MAX_DIM {
            let l = layout(dim).unwrap();
            for order in 0..=MAX_ORDER {
                assert_eq!(l.len(order), binom(dim + order, order));
            }
        }
        assert_eq!(layout(8).unwrap().len(4), 495);
    }

    #[test]
    fn graded_prefix_property() {
        let l = layout(3).unwrap();
        for order in 0..=MAX_ORDER {
            assert!(l.monomials(order).iter().all(|m| m.degree() <= order));
            assert!(l.monomials[l.len(order)..].iter().all(|m| m.degree() > order));
        }
    }

    #[test]
    fn rejects_bad_dimension() {
        assert!(layout(0).is_err());
        assert!(layout(9).is_err());
    }
}
