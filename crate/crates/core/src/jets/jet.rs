use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use super::layout::{layout, Layout, MultiIndex, MAX_ORDER};
use crate::error::{GeomError, Result};

/// Elementary functions that can be composed with a jet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Elementary {
    Exp,
    Sin,
    Cos,
    Sqrt,
    Reciprocal,
    Log,
}

/// Truncated multivariate Taylor expansion of a scalar at a point.
///
/// Coefficient `k` is `∂^α f(P) / α!` for the `k`-th multi-index `α` of the
/// shared [`Layout`].
#[derive(Clone)]
pub struct Jet {
    layout: &'static Layout,
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut map = f.debug_map();
        for (k, c) in self.coeffs.iter().enumerate() {
            if *c != 0.0 || k == 0 {
                map.entry(&self.layout.monomial(k).exponents(), c);
            }
        }
        map.finish()
    }
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        return Err(GeomError::InsufficientOrder { requested: order, available: MAX_ORDER });
    }
    Ok(())
}

impl Jet {
    pub fn constant(value: f64, dim: usize, order: usize) -> Result<Self> {
        check_order(order)?;
        let layout = layout(dim)?;
        let mut coeffs = vec![0.0; layout.len(order)];
        coeffs[0] = value;
        Ok(Self { layout, order, coeffs })
    }

    /// The coordinate function `x^i` expanded about a point whose i-th coordinate is `value`.
    pub fn variable(i: usize, value: f64, dim: usize, order: usize) -> Result<Self> {
        if i >= dim {
            return Err(GeomError::IndexOutOfRange { index: i, dim });
        }
        let mut jet = Self::constant(value, dim, order)?;
        if order >= 1 {
            let k = jet.layout.position(&MultiIndex::unit(dim, i)).expect("unit index");
            jet.coeffs[k] = 1.0;
        }
        Ok(jet)
    }

    pub(crate) fn from_parts(layout: &'static Layout, order: usize, coeffs: Vec<f64>) -> Self {
        debug_assert_eq!(coeffs.len(), layout.len(order));
        Self { layout, order, coeffs }
    }

    pub fn from_coefficients(dim: usize, order: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_order(order)?;
        let layout = layout(dim)?;
        if coeffs.len() != layout.len(order) {
            return Err(GeomError::DimensionMismatch { expected: layout.len(order), found: coeffs.len() });
        }
        Ok(Self { layout, order, coeffs })
    }

    pub fn constant_like(&self, value: f64) -> Self {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        coeffs[0] = value;
        Self { layout: self.layout, order: self.order, coeffs }
    }

    pub fn zero_like(&self) -> Self {
        self.constant_like(0.0)
    }

    pub fn layout(&self) -> &'static Layout {
        self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub(crate) fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Stored (Taylor) coefficient of `alpha`; zero if `alpha` is beyond the order.
    pub fn coefficient(&self, alpha: &MultiIndex) -> f64 {
        match self.layout.position(alpha) {
            Some(k) if k < self.coeffs.len() => self.coeffs[k],
            _ => 0.0,
        }
    }

    /// Raw partial derivative `∂^α f(P) = α! · c_α`.
    pub fn derivative(&self, alpha: &MultiIndex) -> Result<f64> {
        if alpha.dim() != self.dim() {
            return Err(GeomError::DimensionMismatch { expected: self.dim(), found: alpha.dim() });
        }
        if alpha.degree() > self.order {
            return Err(GeomError::InsufficientOrder { requested: alpha.degree(), available: self.order });
        }
        Ok(alpha.factorial() * self.coefficient(alpha))
    }

    /// True when every coefficient beyond the constant term is exactly zero.
    pub fn is_constant(&self) -> bool {
        self.coeffs[1..].iter().all(|&c| c == 0.0)
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        Self {
            layout: self.layout,
            order,
            coeffs: self.coeffs[..self.layout.len(order)].to_vec(),
        }
    }

    /// ∂/∂x^var as a jet of one lower order.
    pub fn partial(&self, var: usize) -> Result<Self> {
        if var >= self.dim() {
            return Err(GeomError::IndexOutOfRange { index: var, dim: self.dim() });
        }
        if self.order == 0 {
            return Err(GeomError::InsufficientOrder { requested: 1, available: 0 });
        }
        let order = self.order - 1;
        let mut coeffs = vec![0.0; self.layout.len(order)];
        self.layout.partial_acc(var, order, &self.coeffs, &mut coeffs);
        Ok(Self { layout: self.layout, order, coeffs })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            layout: self.layout,
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    fn binary_check(&self, other: &Jet) {
        assert!(
            std::ptr::eq(self.layout, other.layout),
            "jets in {} and {} variables cannot be combined",
            self.dim(),
            other.dim()
        );
    }

    fn mul_jet(&self, other: &Jet) -> Jet {
        self.binary_check(other);
        let order = self.order.min(other.order);
        let mut coeffs = vec![0.0; self.layout.len(order)];
        self.layout.mul_acc(order, &self.coeffs, &other.coeffs, &mut coeffs);
        Jet { layout: self.layout, order, coeffs }
    }

    fn add_jet(&self, other: &Jet, sign: f64) -> Jet {
        self.binary_check(other);
        let order = self.order.min(other.order);
        let n = self.layout.len(order);
        let coeffs = self.coeffs[..n]
            .iter()
            .zip(&other.coeffs[..n])
            .map(|(a, b)| a + sign * b)
            .collect();
        Jet { layout: self.layout, order, coeffs }
    }

    /// Integer power by repeated multiplication.
    pub fn powi(&self, n: u32) -> Jet {
        let mut acc = self.constant_like(1.0);
        for _ in 0..n {
            acc = acc.mul_jet(self);
        }
        acc
    }

    /// Compose with a univariate function given its Taylor coefficients
    /// `f^(k)(x0)/k!` for `k = 0..=order`.
    pub fn compose_univariate(&self, taylor: &[f64]) -> Jet {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut out = self.constant_like(taylor[0]);
        let mut power = self.constant_like(1.0);
        for t in taylor.iter().take(self.order + 1).skip(1) {
            power = power.mul_jet(&h);
            for (o, p) in out.coeffs.iter_mut().zip(&power.coeffs) {
                *o += t * p;
            }
        }
        out
    }

    pub fn apply(&self, f: Elementary) -> Result<Jet> {
        let x0 = self.value();
        let k = self.order;
        let mut t = vec![0.0; k + 1];
        match f {
            Elementary::Exp => {
                let e = x0.exp();
                let mut fact = 1.0;
                for (n, tn) in t.iter_mut().enumerate() {
                    if n > 0 {
                        fact *= n as f64;
                    }
                    *tn = e / fact;
                }
            }
            Elementary::Sin | Elementary::Cos => {
                let (s, c) = x0.sin_cos();
                // derivative cycle of sin: s, c, -s, -c; of cos: c, -s, -c, s
                let cycle = if f == Elementary::Sin { [s, c, -s, -c] } else { [c, -s, -c, s] };
                let mut fact = 1.0;
                for (n, tn) in t.iter_mut().enumerate() {
                    if n > 0 {
                        fact *= n as f64;
                    }
                    *tn = cycle[n % 4] / fact;
                }
            }
            Elementary::Sqrt => {
                if !(x0 > 0.0) || !x0.is_finite() {
                    return Err(GeomError::Domain { function: "sqrt", value: x0 });
                }
                // binom(1/2, n) x0^(1/2 - n)
                let mut b = 1.0;
                for (n, tn) in t.iter_mut().enumerate() {
                    if n > 0 {
                        b *= (0.5 - (n as f64 - 1.0)) / n as f64;
                    }
                    *tn = b * x0.powf(0.5 - n as f64);
                }
            }
            Elementary::Reciprocal => {
                if x0 == 0.0 || !x0.is_finite() {
                    return Err(GeomError::Domain { function: "reciprocal", value: x0 });
                }
                let inv = 1.0 / x0;
                let mut p = inv;
                for (n, tn) in t.iter_mut().enumerate() {
                    *tn = if n % 2 == 0 { p } else { -p };
                    p *= inv;
                }
            }
            Elementary::Log => {
                if !(x0 > 0.0) || !x0.is_finite() {
                    return Err(GeomError::Domain { function: "log", value: x0 });
                }
                t[0] = x0.ln();
                for n in 1..=k {
                    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                    t[n] = sign / (n as f64 * x0.powi(n as i32));
                }
            }
        }
        Ok(self.compose_univariate(&t))
    }

    pub fn exp(&self) -> Jet {
        self.apply(Elementary::Exp).expect("exp is total")
    }

    pub fn sin(&self) -> Jet {
        self.apply(Elementary::Sin).expect("sin is total")
    }

    pub fn cos(&self) -> Jet {
        self.apply(Elementary::Cos).expect("cos is total")
    }

    pub fn sqrt(&self) -> Result<Jet> {
        self.apply(Elementary::Sqrt)
    }

    pub fn recip(&self) -> Result<Jet> {
        self.apply(Elementary::Reciprocal)
    }

    pub fn ln(&self) -> Result<Jet> {
        self.apply(Elementary::Log)
    }

    pub fn div(&self, other: &Jet) -> Result<Jet> {
        Ok(self * &other.recip()?)
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.layout, other.layout) && self.order == other.order && self.coeffs == other.coeffs
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl $tr<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, |a, b| a.add_jet(b, 1.0));
forward_binop!(Sub, sub, |a, b| a.add_jet(b, -1.0));
forward_binop!(Mul, mul, |a, b| a.mul_jet(b));

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += rhs;
        out
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.coeffs[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.coeffs[0] -= rhs;
        self
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        *self = self.add_jet(rhs, 1.0);
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        *self = self.add_jet(rhs, -1.0);
    }
}

/// Coordinate jets `x^0 .. x^{m-1}` expanded about `point`.
pub fn coordinate_jets(point: &[f64], order: usize) -> Result<Vec<Jet>> {
    let m = point.len();
    (0..m).map(|i| Jet::variable(i, point[i], m, order)).collect()
}

/// If `x` are coordinate jets (value `p_i`, unit linear part, nothing else),
/// return the base point.
pub fn coordinate_point(x: &[Jet]) -> Option<Vec<f64>> {
    let m = x.len();
    let first = x.first()?;
    if first.dim() != m {
        return None;
    }
    let layout = first.layout();
    let mut p = Vec::with_capacity(m);
    for (i, xi) in x.iter().enumerate() {
        for (k, &c) in xi.coeffs().iter().enumerate().skip(1) {
            let alpha = layout.monomial(k);
            let expected = if alpha.degree() == 1 && alpha.exponents()[i] == 1 { 1.0 } else { 0.0 };
            if c != expected {
                return None;
            }
        }
        if xi.order() == 0 && m > 0 && first.order() != 0 {
            return None;
        }
        p.push(xi.value());
    }
    Some(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(e: &[u8]) -> MultiIndex {
        MultiIndex::new(e.to_vec())
    }

    #[test]
    fn variable_jets() {
        let x = Jet::variable(0, 2.0, 2, 2).unwrap();
        assert_eq!(x.value(), 2.0);
        assert_eq!(x.coefficient(&mi(&[1, 0])), 1.0);
        assert_eq!(x.coefficient(&mi(&[0, 1])), 0.0);
        assert_eq!(x.coefficient(&mi(&[2, 0])), 0.0);

        let y = Jet::variable(1, 0.0, 2, 1).unwrap();
        assert_eq!(y.coeffs(), &[0.0, 0.0, 1.0]);
        assert!(Jet::variable(2, 0.0, 2, 1).is_err());
    }

    #[test]
    fn square_of_variable() {
        let x = Jet::variable(0, 3.0, 2, 2).unwrap();
        let sq = &x * &x;
        assert_eq!(sq.value(), 9.0);
        assert_eq!(sq.coefficient(&mi(&[1, 0])), 6.0);
        assert_eq!(sq.coefficient(&mi(&[2, 0])), 1.0);
        assert_eq!(sq.derivative(&mi(&[2, 0])).unwrap(), 2.0);
        assert_eq!(sq.derivative(&mi(&[0, 0])).unwrap(), 9.0);
        assert!(sq.derivative(&mi(&[3, 0])).is_err());
    }

    #[test]
    fn mixed_partial_of_product() {
        let x = Jet::variable(0, 0.7, 2, 2).unwrap();
        let y = Jet::variable(1, -1.3, 2, 2).unwrap();
        assert_eq!((&x * &y).derivative(&mi(&[1, 1])).unwrap(), 1.0);
    }

    #[test]
    fn exp_of_zero_constant() {
        let z = Jet::constant(0.0, 3, 4).unwrap();
        let e = z.exp();
        assert_eq!(e.value(), 1.0);
        assert!(e.is_constant());
    }

    #[test]
    fn reciprocal_expansion() {
        let x = Jet::variable(0, 2.0, 2, 2).unwrap();
        let r = x.recip().unwrap();
        assert_eq!(r.value(), 0.5);
        assert_eq!(r.coefficient(&mi(&[1, 0])), -0.25);
        assert_eq!(r.coefficient(&mi(&[2, 0])), 0.125);
    }

    #[test]
    fn sin_series() {
        let x = Jet::variable(0, 0.0, 1, 3).unwrap();
        let s = x.sin();
        let expected = [0.0, 1.0, 0.0, -1.0 / 6.0];
        for (c, e) in s.coeffs().iter().zip(expected) {
            assert!((c - e).abs() < 1e-15);
        }
    }

    #[test]
    fn domain_errors() {
        let z = Jet::constant(0.0, 1, 2).unwrap();
        assert!(matches!(z.recip(), Err(GeomError::Domain { .. })));
        assert!(matches!(z.sqrt(), Err(GeomError::Domain { .. })));
        assert!(matches!(z.ln(), Err(GeomError::Domain { .. })));
        let neg = Jet::constant(-1.0, 1, 2).unwrap();
        assert!(neg.sqrt().is_err());
    }

    #[test]
    fn sqrt_and_log_are_inverse_to_square_and_exp() {
        let x = Jet::variable(0, 1.7, 2, 4).unwrap() + Jet::variable(1, 0.3, 2, 4).unwrap();
        let back = x.sqrt().unwrap().powi(2);
        for (a, b) in back.coeffs().iter().zip(x.coeffs()) {
            assert!((a - b).abs() < 1e-13);
        }
        let back = x.ln().unwrap().exp();
        for (a, b) in back.coeffs().iter().zip(x.coeffs()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn partial_lowers_order() {
        let x = Jet::variable(0, 1.0, 2, 3).unwrap();
        let y = Jet::variable(1, 2.0, 2, 3).unwrap();
        let f = &(&x * &x) * &y; // x^2 y
        let fx = f.partial(0).unwrap(); // 2xy
        assert_eq!(fx.order(), 2);
        assert_eq!(fx.value(), 4.0);
        assert_eq!(fx.derivative(&mi(&[1, 1])).unwrap(), 2.0);
    }

    #[test]
    fn coordinate_point_detection() {
        let p = [0.5, -0.25];
        let x = coordinate_jets(&p, 3).unwrap();
        assert_eq!(coordinate_point(&x), Some(p.to_vec()));
        let moved = vec![&x[0] * &x[0], x[1].clone()];
        assert_eq!(coordinate_point(&moved), None);
    }
}
