//! Geodesics of affine connections and metrics: adaptive integration,
//! completeness probing and the small-perturbation completeness check.

mod integrator;
mod lemma;
mod scenarios;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::curvature::{levi_civita, metric_jets};
use crate::error::Result;
use crate::fields::{ConnectionField, MetricField};

pub use integrator::{integrate_geodesic, GeodesicOptions, GeodesicResult, GeodesicStatus, TrajectorySample};
pub use lemma::{largest_passing_epsilon, lemma_check, LemmaReport, LemmaSample, LemmaSpec};
pub use scenarios::{circle_connection, flat_metric, meneghini_metric, misner_metric, Scenario};

/// Geodesics are computed from the Christoffel symbols of either kind.
#[derive(Clone, Debug)]
pub enum Geometry {
    Connection(ConnectionField),
    Metric(MetricField),
}

impl Geometry {
    pub fn dim(&self) -> usize {
        match self {
            Geometry::Connection(c) => c.dim(),
            Geometry::Metric(g) => g.dim(),
        }
    }

    /// `Γ[(i·m + j)·m + k] = Γ_ij^k` at `p`.
    pub fn christoffel(&self, p: &[f64]) -> Result<Vec<f64>> {
        Ok(match self {
            Geometry::Connection(c) => c.at(p, 0)?.values(),
            Geometry::Metric(g) => levi_civita(g, p)?.values(),
        })
    }

    /// `g(v, v)` for metric geodesics.
    pub fn energy(&self, p: &[f64], v: &[f64]) -> Result<Option<f64>> {
        let Geometry::Metric(g) = self else { return Ok(None) };
        let m = g.dim();
        let gv = metric_jets(g, p, 0)?.values();
        let mut e = 0.0;
        for i in 0..m {
            for j in 0..m {
                e += gv[i * m + j] * v[i] * v[j];
            }
        }
        Ok(Some(e))
    }
}

/// Euclidean unit directions: `±1` in dimension 1, equally spaced angles in
/// dimension 2, seeded uniform directions otherwise.
pub fn unit_directions(m: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    match m {
        1 => (0..count).map(|k| vec![if k % 2 == 0 { 1.0 } else { -1.0 }]).collect(),
        2 => (0..count)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            let mut r = crate::fixtures::rng(seed);
            let mut out = Vec::with_capacity(count);
            while out.len() < count {
                let v: Vec<f64> = (0..m).map(|_| r.gen_range(-1.0..=1.0)).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > 1e-3 && n <= 1.0 {
                    out.push(v.iter().map(|x| x / n).collect());
                }
            }
            out
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProbeSpec {
    pub basepoints: Vec<Vec<f64>>,
    /// Directions per basepoint.
    pub directions: usize,
    pub seed: u64,
    pub options: GeodesicOptions,
    /// The structure is declared flat outside this ball, so leaving it counts as complete.
    pub flat_outside: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeSample {
    pub basepoint: Vec<f64>,
    pub direction: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<GeodesicResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Completeness {
    IncompleteEvidence,
    CompleteUpTo { t_max: f64 },
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeSummary {
    pub reached_horizon: usize,
    pub escaped: usize,
    pub blowup: usize,
    pub errors: usize,
    pub completeness: Completeness,
    pub samples: Vec<ProbeSample>,
}

/// Integrate from every basepoint in every direction (in parallel, results in input order).
pub fn completeness_probe(geometry: &Geometry, spec: &ProbeSpec) -> ProbeSummary {
    let m = geometry.dim();
    let dirs = unit_directions(m, spec.directions, spec.seed);
    let jobs: Vec<(Vec<f64>, Vec<f64>)> =
        spec.basepoints.iter().flat_map(|b| dirs.iter().map(move |d| (b.clone(), d.clone()))).collect();
    let opts = GeodesicOptions { escape_radius: spec.flat_outside, ..spec.options };
    let samples: Vec<ProbeSample> = jobs
        .into_par_iter()
        .map(|(basepoint, direction)| match integrate_geodesic(geometry, &basepoint, &direction, &opts) {
            Ok(r) => ProbeSample { basepoint, direction, result: Some(r), error: None },
            Err(e) => ProbeSample { basepoint, direction, result: None, error: Some(e.to_string()) },
        })
        .collect();
    let count = |f: fn(&GeodesicStatus) -> bool| samples.iter().filter(|s| s.result.as_ref().is_some_and(|r| f(&r.status))).count();
    let reached_horizon = count(|s| matches!(s, GeodesicStatus::ReachedHorizon { .. }));
    let escaped = count(|s| matches!(s, GeodesicStatus::EscapedBall { .. }));
    let blowup = count(|s| matches!(s, GeodesicStatus::Blowup { .. }));
    let errors = samples.iter().filter(|s| s.error.is_some()).count();
    let completeness = if blowup > 0 {
        Completeness::IncompleteEvidence
    } else if errors == 0 {
        Completeness::CompleteUpTo { t_max: spec.options.t_max.abs() }
    } else {
        Completeness::Inconclusive
    };
    ProbeSummary { reached_horizon, escaped, blowup, errors, completeness, samples }
}
