//! Sampled sup-norms over balls.

use rayon::prelude::*;

use crate::error::Result;
use crate::jets::coordinate_jets;

use super::Field;

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(mut n: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut x = 0.0;
    while n > 0 {
        x += (n % base) as f64 * f;
        n /= base;
        f *= inv;
    }
    x
}

/// Deterministic quasi-random points in the closed ball of the given radius.
///
/// Halton points of the enclosing cube are kept when they fall in the ball;
/// the origin and the axis points on the boundary sphere are always included.
pub fn halton_ball(dim: usize, radius: f64, count: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    out.push(vec![0.0; dim]);
    for i in 0..dim {
        for s in [1.0, -1.0] {
            if out.len() < count {
                let mut p = vec![0.0; dim];
                p[i] = s * radius;
                out.push(p);
            }
        }
    }
    let mut n = 1u64;
    while out.len() < count {
        let p: Vec<f64> = (0..dim).map(|k| (2.0 * radical_inverse(n, PRIMES[k]) - 1.0) * radius).collect();
        n += 1;
        if p.iter().map(|v| v * v).sum::<f64>() <= radius * radius {
            out.push(p);
        }
    }
    out
}

/// Halton points on spherical shells `|x| ∈ [lo, hi]`.
pub fn halton_shell(dim: usize, lo: f64, hi: f64, count: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut n = 1u64;
    while out.len() < count {
        let p: Vec<f64> = (0..dim).map(|k| (2.0 * radical_inverse(n, PRIMES[k]) - 1.0) * hi).collect();
        n += 1;
        let r2: f64 = p.iter().map(|v| v * v).sum();
        if r2 <= hi * hi && r2 >= lo * lo {
            out.push(p);
        }
    }
    out
}

/// Sampled `(‖h‖, ‖h‖¹)`: sup of components and sup of components plus sup of first partials.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct Norms {
    pub c0: f64,
    pub c1: f64,
}

/// Norms of a field over sample points, evaluated in parallel.
pub fn sampled_norms(h: &dyn Field, points: &[Vec<f64>]) -> Result<Norms> {
    let per_point: Vec<(f64, f64)> = points
        .par_iter()
        .map(|p| -> Result<(f64, f64)> {
            let t = h.eval(&coordinate_jets(p, 1)?)?;
            let c0 = t.max_abs_value();
            let d = t.partials()?.max_abs_value();
            Ok((c0, d))
        })
        .collect::<Result<_>>()?;
    let c0 = per_point.iter().fold(0.0f64, |m, v| m.max(v.0));
    let d = per_point.iter().fold(0.0f64, |m, v| m.max(v.1));
    Ok(Norms { c0, c1: c0 + d })
}

/// Norms of `a − b` over sample points.
pub fn sampled_deviation(a: &dyn Field, b: &dyn Field, points: &[Vec<f64>]) -> Result<Norms> {
    let per_point: Vec<(f64, f64)> = points
        .par_iter()
        .map(|p| -> Result<(f64, f64)> {
            let x = coordinate_jets(p, 1)?;
            let t = a.eval(&x)?.sub(&b.eval(&x)?);
            Ok((t.max_abs_value(), t.partials()?.max_abs_value()))
        })
        .collect::<Result<_>>()?;
    let c0 = per_point.iter().fold(0.0f64, |m, v| m.max(v.0));
    let d = per_point.iter().fold(0.0f64, |m, v| m.max(v.1));
    Ok(Norms { c0, c1: c0 + d })
}
