use crate::error::{GeomError, Result};
use crate::jets::{Jet, JetTensor, Variance};

use super::Field;

/// Smooth radial cutoff: 1 on `|x| ≤ inner`, 0 on `|x| ≥ outer`.
///
/// With `t = (|x|² − a²)/(b² − a²)` the profile is `1 − h(t)`, where
/// `h(t) = ψ(t)/(ψ(t) + ψ(1−t))` and `ψ(t) = exp(−1/t)` for `t > 0`.
/// On the plateaus the returned jet is an exact constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mesa {
    dim: usize,
    inner: f64,
    outer: f64,
}

/// The mesa function `φ_r`: 1 on `B_r`, 0 outside `B_{2r}`.
pub fn mesa(dim: usize, r: f64) -> Result<Mesa> {
    Mesa::new(dim, r, 2.0 * r)
}

impl Mesa {
    pub fn new(dim: usize, inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && outer > inner) {
            return Err(GeomError::Precondition(format!("mesa radii must satisfy 0 < {inner} < {outer}")));
        }
        Ok(Self { dim, inner, outer })
    }

    pub fn inner(&self) -> f64 {
        self.inner
    }

    pub fn outer(&self) -> f64 {
        self.outer
    }

    pub fn value_at(&self, p: &[f64]) -> f64 {
        let s: f64 = p.iter().map(|v| v * v).sum();
        let t = (s - self.inner * self.inner) / (self.outer * self.outer - self.inner * self.inner);
        if t <= 0.0 {
            1.0
        } else if t >= 1.0 {
            0.0
        } else {
            let psi = |u: f64| if u < 1e-3 { 0.0 } else { (-1.0 / u).exp() };
            let a = psi(t);
            let b = psi(1.0 - t);
            1.0 - a / (a + b)
        }
    }

    /// Scalar jet of the cutoff composed with `x`.
    pub fn jet(&self, x: &[Jet]) -> Result<Jet> {
        if x.len() != self.dim {
            return Err(GeomError::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        let mut s = x[0].zero_like();
        for xi in x {
            s += &(xi * xi);
        }
        let a2 = self.inner * self.inner;
        let t = (s - a2) * (1.0 / (self.outer * self.outer - a2));
        let t0 = t.value();
        if t0 <= 0.0 {
            return Ok(t.constant_like(1.0));
        }
        if t0 >= 1.0 {
            return Ok(t.constant_like(0.0));
        }
        // exp(−1/u) and all its derivatives are below f64 resolution for u < 1e-3
        let psi = |u: &Jet| -> Result<Jet> {
            if u.value() < 1e-3 {
                Ok(u.zero_like())
            } else {
                Ok((-u.recip()?).exp())
            }
        };
        let a = psi(&t)?;
        let b = psi(&(-&t + 1.0))?;
        let h = a.div(&(&a + &b))?;
        Ok(-h + 1.0)
    }
}

impl Field for Mesa {
    fn dim(&self) -> usize {
        self.dim
    }

    fn slots(&self) -> Vec<Variance> {
        Vec::new()
    }

    fn eval(&self, x: &[Jet]) -> Result<JetTensor> {
        Ok(JetTensor::scalar(self.jet(x)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::coordinate_jets;

    #[test]
    fn plateaus_are_exact() {
        let phi = mesa(3, 0.5).unwrap();
        let inside = phi.jet(&coordinate_jets(&[0.1, 0.2, 0.3], 4).unwrap()).unwrap();
        assert_eq!(inside.value(), 1.0);
        assert!(inside.is_constant());
        let outside = phi.jet(&coordinate_jets(&[1.25, 0.0, 0.0], 4).unwrap()).unwrap();
        assert_eq!(outside.value(), 0.0);
        assert!(outside.is_constant());
    }

    #[test]
    fn transition_is_monotone_and_bounded() {
        let phi = mesa(1, 1.0).unwrap();
        let mut last = 1.0;
        for k in 0..=100 {
            let r = 1.0 + k as f64 / 100.0;
            let v = phi.value_at(&[r]);
            assert!((0.0..=1.0).contains(&v));
            assert!(v <= last + 1e-15);
            last = v;
        }
    }

    #[test]
    fn jet_value_matches_pointwise() {
        let phi = Mesa::new(2, 0.4, 1.0).unwrap();
        let p = [0.5, 0.3];
        let j = phi.jet(&coordinate_jets(&p, 2).unwrap()).unwrap();
        assert!((j.value() - phi.value_at(&p)).abs() < 1e-15);
    }
}
