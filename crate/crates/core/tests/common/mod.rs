//! Random scalar expressions evaluated both in `f64` and in jet arithmetic.

#![allow(dead_code)]

use germforge::jets::{coordinate_jets, Jet, MultiIndex};
use proptest::prelude::*;
use rand::Rng;

#[derive(Clone, Debug)]
pub enum Expr {
    Var(usize),
    Const(f64),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    /// `sqrt(1 + u²)`
    Hypot(Box<Expr>),
    /// `ln(1 + u²)`
    LogSq(Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Var(i) => x[*i],
            Expr::Const(c) => *c,
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / (2.0 + b.eval(x).powi(2)),
            Expr::Sin(a) => a.eval(x).sin(),
            Expr::Cos(a) => a.eval(x).cos(),
            Expr::Exp(a) => a.eval(x).exp(),
            Expr::Hypot(a) => (1.0 + a.eval(x).powi(2)).sqrt(),
            Expr::LogSq(a) => (1.0 + a.eval(x).powi(2)).ln(),
        }
    }

    pub fn jet(&self, x: &[Jet]) -> Jet {
        match self {
            Expr::Var(i) => x[*i].clone(),
            Expr::Const(c) => x[0].constant_like(*c),
            Expr::Add(a, b) => a.jet(x) + b.jet(x),
            Expr::Mul(a, b) => a.jet(x) * b.jet(x),
            Expr::Div(a, b) => {
                let d = b.jet(x).powi(2) + 2.0;
                a.jet(x).div(&d).unwrap()
            }
            Expr::Sin(a) => a.jet(x).sin(),
            Expr::Cos(a) => a.jet(x).cos(),
            Expr::Exp(a) => a.jet(x).exp(),
            Expr::Hypot(a) => (a.jet(x).powi(2) + 1.0).sqrt().unwrap(),
            Expr::LogSq(a) => (a.jet(x).powi(2) + 1.0).ln().unwrap(),
        }
    }

    pub fn random(rng: &mut impl Rng, m: usize, depth: usize) -> Expr {
        if depth == 0 || rng.gen_bool(0.2) {
            return if rng.gen_bool(0.75) { Expr::Var(rng.gen_range(0..m)) } else { Expr::Const(rng.gen_range(-2.0..2.0)) };
        }
        let sub = |rng: &mut _| Box::new(Expr::random(rng, m, depth - 1));
        match rng.gen_range(0..9) {
            0 => Expr::Add(sub(rng), sub(rng)),
            1 => Expr::Mul(sub(rng), sub(rng)),
            2 => Expr::Div(sub(rng), sub(rng)),
            3 => Expr::Sin(sub(rng)),
            4 => Expr::Cos(sub(rng)),
            5 => Expr::Exp(sub(rng)),
            6 => Expr::Hypot(sub(rng)),
            7 => Expr::LogSq(sub(rng)),
            _ => Expr::Mul(sub(rng), sub(rng)),
        }
    }
}

pub fn expr_strategy(m: usize) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![(0..m).prop_map(Expr::Var), (-2.0..2.0f64).prop_map(Expr::Const)];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
            inner.clone().prop_map(|a| Expr::Sin(Box::new(a))),
            inner.clone().prop_map(|a| Expr::Cos(Box::new(a))),
            inner.clone().prop_map(|a| Expr::Exp(Box::new(a))),
            inner.clone().prop_map(|a| Expr::Hypot(Box::new(a))),
            inner.prop_map(|a| Expr::LogSq(Box::new(a))),
        ]
    })
}

fn unit(m: usize, i: usize) -> MultiIndex {
    MultiIndex::unit(m, i)
}

fn pair(m: usize, i: usize, j: usize) -> MultiIndex {
    let mut e = vec![0u8; m];
    e[i] += 1;
    e[j] += 1;
    MultiIndex::new(e)
}

/// Largest relative disagreement between jet derivatives of order 1 and 2 and
/// central differences: `f64` differences of the value for the gradient,
/// differences of the order-one jet gradient for the Hessian.
pub fn finite_difference_error(e: &Expr, p: &[f64]) -> f64 {
    let m = p.len();
    let x = coordinate_jets(p, 2).unwrap();
    let f = e.jet(&x);
    let mut worst = 0.0f64;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
    let h1 = 1e-6;
    let h2 = 1e-5;
    for i in 0..m {
        let mut pp = p.to_vec();
        let mut pm = p.to_vec();
        pp[i] += h1;
        pm[i] -= h1;
        let fd = (e.eval(&pp) - e.eval(&pm)) / (2.0 * h1);
        worst = worst.max(rel(f.derivative(&unit(m, i)).unwrap(), fd));
        pp[i] = p[i] + h2;
        pm[i] = p[i] - h2;
        let gp = e.jet(&coordinate_jets(&pp, 1).unwrap());
        let gm = e.jet(&coordinate_jets(&pm, 1).unwrap());
        for j in 0..m {
            let fd2 = (gp.derivative(&unit(m, j)).unwrap() - gm.derivative(&unit(m, j)).unwrap()) / (2.0 * h2);
            worst = worst.max(rel(f.derivative(&pair(m, i, j)).unwrap(), fd2));
        }
    }
    worst
}
