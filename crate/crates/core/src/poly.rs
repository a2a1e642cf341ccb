//! Real polynomials in a fixed number of variables.

use std::collections::BTreeMap;

use crate::error::{GeomError, Result};
use crate::jets::Jet;

/// Sparse polynomial: exponent vector → coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<Vec<u8>, f64>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(vec![0; dim], c);
        p
    }

    /// The coordinate function `x^i`.
    pub fn variable(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        let mut p = Self::zero(dim);
        p.add_term(e, 1.0);
        p
    }

    pub fn monomial(exponents: Vec<u8>, c: f64) -> Self {
        let mut p = Self::zero(exponents.len());
        p.add_term(exponents, c);
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u8>, f64)> {
        self.terms.iter().map(|(e, c)| (e, *c))
    }

    pub fn coefficient(&self, exponents: &[u8]) -> f64 {
        self.terms.get(exponents).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, exponents: Vec<u8>, c: f64) {
        assert_eq!(exponents.len(), self.dim, "monomial has the wrong number of variables");
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(exponents).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.retain(|_, v| *v != 0.0);
        }
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|e| deg(e)).max().unwrap_or(0)
    }

    /// Lowest degree carrying a nonzero coefficient (0 for the zero polynomial).
    pub fn min_degree(&self) -> usize {
        self.terms.keys().map(|e| deg(e)).min().unwrap_or(0)
    }

    pub fn homogeneous_part(&self, d: usize) -> Self {
        Self {
            dim: self.dim,
            terms: self.terms.iter().filter(|(e, _)| deg(e) == d).map(|(e, c)| (e.clone(), *c)).collect(),
        }
    }

    pub fn truncate(&self, max_degree: usize) -> Self {
        Self {
            dim: self.dim,
            terms: self.terms.iter().filter(|(e, _)| deg(e) <= max_degree).map(|(e, c)| (e.clone(), *c)).collect(),
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.dim);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn partial(&self, var: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            if e[var] > 0 {
                let mut f = e.clone();
                f[var] -= 1;
                out.add_term(f, c * f64::from(e[var]));
            }
        }
        out
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(p).map(|(&k, x)| x.powi(i32::from(k))).product::<f64>())
            .sum()
    }

    /// Evaluate on jets (composition of the polynomial with the jets).
    pub fn eval_jets(&self, x: &[Jet]) -> Result<Jet> {
        if x.len() != self.dim {
            return Err(GeomError::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        let mut powers = PowerCache::new(x);
        Ok(self.eval_cached(&mut powers))
    }

    pub(crate) fn eval_cached(&self, powers: &mut PowerCache) -> Jet {
        let mut acc = powers.x[0].zero_like();
        for (e, c) in &self.terms {
            let mut term: Option<Jet> = None;
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    let p = powers.get(i, k);
                    term = Some(match term {
                        None => p.clone(),
                        Some(t) => &t * p,
                    });
                }
            }
            match term {
                None => acc = acc + *c,
                Some(t) => {
                    for (a, b) in acc.coeffs_mut().iter_mut().zip(t.coeffs()) {
                        *a += c * b;
                    }
                }
            }
        }
        acc
    }

    /// `self(q_0(y), …, q_{m-1}(y))`.
    pub fn compose(&self, q: &[Polynomial]) -> Self {
        assert_eq!(q.len(), self.dim);
        let target = q[0].dim;
        let mut out = Self::zero(target);
        let mut cache: Vec<Vec<Polynomial>> = q.iter().map(|p| vec![Self::constant(target, 1.0), p.clone()]).collect();
        for (e, c) in &self.terms {
            let mut term = Self::constant(target, *c);
            for (i, &k) in e.iter().enumerate() {
                while cache[i].len() <= k as usize {
                    let next = cache[i].last().unwrap().mul(&q[i]);
                    cache[i].push(next);
                }
                if k > 0 {
                    term = term.mul(&cache[i][k as usize]);
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Replace `x` by `λx`.
    pub fn dilate(&self, lambda: f64) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * lambda.powi(deg(e) as i32));
        }
        out
    }
}

fn deg(e: &[u8]) -> usize {
    e.iter().map(|&k| k as usize).sum()
}

/// Cache of integer powers of input jets, shared across polynomial components.
pub(crate) struct PowerCache<'a> {
    x: &'a [Jet],
    powers: Vec<Vec<Jet>>,
}

impl<'a> PowerCache<'a> {
    pub(crate) fn new(x: &'a [Jet]) -> Self {
        Self { x, powers: x.iter().map(|xi| vec![xi.constant_like(1.0), xi.clone()]).collect() }
    }

    fn get(&mut self, i: usize, k: u8) -> &Jet {
        let k = k as usize;
        while self.powers[i].len() <= k {
            let next = self.powers[i].last().unwrap() * &self.x[i];
            self.powers[i].push(next);
        }
        &self.powers[i][k]
    }
}

/// All exponent vectors of total degree exactly `d` in `dim` variables.
pub fn monomials_of_degree(dim: usize, d: usize) -> Vec<Vec<u8>> {
    fn rec(dim: usize, left: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if prefix.len() + 1 == dim {
            let mut e = prefix.clone();
            e.push(left as u8);
            out.push(e);
            return;
        }
        for k in (0..=left).rev() {
            prefix.push(k as u8);
            rec(dim, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, d, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::coordinate_jets;

    #[test]
    fn compose_and_eval_agree() {
        let x = Polynomial::variable(2, 0);
        let y = Polynomial::variable(2, 1);
        let p = x.mul(&x).mul(&y).add(&Polynomial::constant(2, 3.0));
        let q = [x.add(&y), y.scale(2.0)];
        let pq = p.compose(&q);
        let pt = [0.3, -0.7];
        let direct = p.eval(&[pt[0] + pt[1], 2.0 * pt[1]]);
        assert!((pq.eval(&pt) - direct).abs() < 1e-14);
    }

    #[test]
    fn jets_reproduce_partials() {
        let x = Polynomial::variable(2, 0);
        let y = Polynomial::variable(2, 1);
        let p = x.mul(&x).mul(&y).sub(&y.mul(&y).scale(0.5));
        let pt = [1.5, 2.0];
        let j = p.eval_jets(&coordinate_jets(&pt, 3).unwrap()).unwrap();
        assert!((j.value() - p.eval(&pt)).abs() < 1e-14);
        let dx = p.partial(0).eval(&pt);
        let k = j.layout().position(&crate::jets::MultiIndex::unit(2, 0)).unwrap();
        assert!((j.coeffs()[k] - dx).abs() < 1e-14);
    }

    #[test]
    fn monomial_counts() {
        assert_eq!(monomials_of_degree(4, 2).len(), 10);
        assert_eq!(monomials_of_degree(1, 3), vec![vec![3]]);
    }
}
