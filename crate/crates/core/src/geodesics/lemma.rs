//! Completeness of small compactly supported perturbations of the flat connection.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::fields::norms::halton_ball;
use crate::fields::{constant_field, eval_at, ConnectionField, PullbackField};
use crate::jets::Variance::{Co, Contra};
use crate::poly::Polynomial;
use crate::transplant::{normalize_connection, transplant_connection, TransplantOptions};

use super::{integrate_geodesic, unit_directions, GeodesicOptions, GeodesicStatus, Geometry};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LemmaSpec {
    pub samples: usize,
    pub seed: u64,
    /// Time allowed before exiting, and the length of the straight-line continuation.
    pub t_max: f64,
    pub tolerance: f64,
}

impl Default for LemmaSpec {
    fn default() -> Self {
        Self { samples: 200, seed: 0, t_max: 10.0, tolerance: 1e-10 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaSample {
    pub basepoint: Vec<f64>,
    pub direction: Vec<f64>,
    pub exited: bool,
    pub exit_time: Option<f64>,
    /// Largest Euclidean speed up to the exit.
    pub max_speed: f64,
    /// Distance from the straight line after the exit, position and velocity.
    pub straight_deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    pub epsilon: f64,
    /// Transplant radius `ε/2`, so the perturbation is supported in `B_ε`.
    pub radius: f64,
    /// The germ is used in the coordinates `x = λ y`.
    pub rescaling: f64,
    /// Sampled `‖∇̃ − ∇‖` (largest Christoffel symbol).
    pub deviation: f64,
    pub transplant_passed: bool,
    pub all_exit: bool,
    pub max_speed: f64,
    pub max_straight_deviation: f64,
    pub passed: bool,
    pub samples: Vec<LemmaSample>,
}

fn dilated(conn: &ConnectionField, lambda: f64) -> Result<ConnectionField> {
    let m = conn.dim();
    let map = (0..m).map(|i| Polynomial::variable(m, i).scale(lambda)).collect();
    ConnectionField::new(Arc::new(PullbackField::connection(conn.field.clone(), map)?))
}

fn sup_norm(conn: &ConnectionField, points: &[Vec<f64>]) -> Result<f64> {
    let v: Vec<f64> = points
        .par_iter()
        .map(|p| Ok(eval_at(conn.field.as_ref(), p, 0)?.max_abs_value()))
        .collect::<Result<_>>()?;
    Ok(v.into_iter().fold(0.0, f64::max))
}

/// Transplant the germ into the flat connection inside `B_ε` (rescaling it until
/// the sampled deviation is below `ε/2`) and follow unit-speed geodesics from `B_ε`.
pub fn lemma_check(germ: &ConnectionField, epsilon: f64, spec: &LemmaSpec) -> Result<LemmaReport> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(GeomError::Precondition(format!("ε must be positive, got {epsilon}")));
    }
    let m = germ.dim();
    let germ = normalize_connection(germ)?.germ;
    let ball = halton_ball(m, epsilon, 256);
    let mut rescaling = 1.0;
    let mut scaled = germ.clone();
    while sup_norm(&scaled, &ball)? > 0.5 * epsilon {
        rescaling *= 0.5;
        if rescaling < 1e-8 {
            return Err(GeomError::Precondition(format!(
                "deviation bound ε = {epsilon} not reached even after rescaling the germ by {rescaling:e}"
            )));
        }
        scaled = dilated(&germ, rescaling)?;
    }
    let flat = ConnectionField::new(constant_field(m, &[Co, Co, Contra], vec![0.0; m * m * m]))?;
    let radius = 0.5 * epsilon;
    let opts = TransplantOptions { max_retries: 0, ..Default::default() };
    let t = transplant_connection(&scaled, &flat, radius, &opts)?;
    let out = t.output.connection.expect("connection output");
    let deviation = sup_norm(&out, &halton_ball(m, epsilon, 256))?.max(t.report.deviation.c0);
    let geo = Geometry::Connection(out);
    let starts = halton_ball(m, 0.999 * epsilon, spec.samples);
    let dirs = unit_directions(m, spec.samples, spec.seed);
    let samples: Vec<LemmaSample> = starts
        .into_par_iter()
        .zip(dirs.into_par_iter())
        .map(|(basepoint, direction)| -> Result<LemmaSample> {
            let go = GeodesicOptions {
                t_max: spec.t_max,
                tolerance: spec.tolerance,
                escape_radius: Some(epsilon),
                max_step: 0.1 * epsilon,
                ..Default::default()
            };
            let r = integrate_geodesic(&geo, &basepoint, &direction, &go)?;
            let GeodesicStatus::EscapedBall { time, point, velocity, .. } = &r.status else {
                return Ok(LemmaSample { basepoint, direction, exited: false, exit_time: None, max_speed: r.max_speed, straight_deviation: f64::INFINITY });
            };
            let after = GeodesicOptions { t_max: spec.t_max, tolerance: spec.tolerance, record: false, ..Default::default() };
            let c = integrate_geodesic(&geo, point, velocity, &after)?;
            let end = c.last();
            let mut dev = 0.0f64;
            for i in 0..m {
                dev = dev.max((end.x[i] - point[i] - spec.t_max * velocity[i]).abs()).max((end.v[i] - velocity[i]).abs());
            }
            Ok(LemmaSample { basepoint, direction, exited: true, exit_time: Some(*time), max_speed: r.max_speed, straight_deviation: dev })
        })
        .collect::<Result<_>>()?;
    let all_exit = samples.iter().all(|s| s.exited);
    let max_speed = samples.iter().map(|s| s.max_speed).fold(0.0, f64::max);
    let max_straight_deviation = samples.iter().map(|s| s.straight_deviation).fold(0.0, f64::max);
    let transplant_passed = t.report.passed();
    let passed = transplant_passed && deviation < epsilon && all_exit && max_speed <= 2.0 && max_straight_deviation <= 1e-9;
    Ok(LemmaReport {
        epsilon,
        radius,
        rescaling,
        deviation,
        transplant_passed,
        all_exit,
        max_speed,
        max_straight_deviation,
        passed,
        samples,
    })
}

/// The largest of the candidate radii for which [`lemma_check`] passes.
pub fn largest_passing_epsilon(germ: &ConnectionField, candidates: &[f64], spec: &LemmaSpec) -> Result<Option<f64>> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    for eps in sorted {
        match lemma_check(germ, eps, spec) {
            Ok(r) if r.passed => return Ok(Some(eps)),
            Ok(_) | Err(GeomError::Precondition(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}
