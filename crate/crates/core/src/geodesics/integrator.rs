//! Dormand–Prince 5(4) integration of `γ̈^k + Γ_ij^k γ̇^i γ̇^j = 0`.

use serde::Serialize;

use crate::error::{GeomError, Result};

use super::Geometry;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GeodesicOptions {
    /// Integration horizon; a negative value integrates backward.
    pub t_max: f64,
    /// Relative and absolute local error tolerance.
    pub tolerance: f64,
    /// Speeds above this mark a candidate blowup.
    pub blowup_speed: f64,
    /// Step sizes below this end the integration.
    pub min_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
    /// Stop when the Euclidean ball of this radius is left.
    pub escape_radius: Option<f64>,
    /// Keep every accepted step in the trajectory (otherwise only the end points).
    pub record: bool,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        Self {
            t_max: 100.0,
            tolerance: 1e-10,
            blowup_speed: 1e6,
            min_step: 1e-12,
            max_step: 1.0,
            max_steps: 2_000_000,
            escape_radius: None,
            record: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum GeodesicStatus {
    ReachedHorizon { t_max: f64 },
    EscapedBall { radius: f64, time: f64, point: Vec<f64>, velocity: Vec<f64> },
    Blowup { time: f64, max_speed: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl TrajectorySample {
    pub fn speed(&self) -> f64 {
        norm(&self.v)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GeodesicResult {
    pub status: GeodesicStatus,
    pub steps: usize,
    pub rejected: usize,
    /// Largest local error estimate of an accepted step.
    pub max_error_estimate: f64,
    pub max_speed: f64,
    pub energy_initial: Option<f64>,
    /// `max |g(γ̇, γ̇) − initial| / (1 + |initial|)` while the speed stays below `√blowup_speed`.
    pub energy_drift: Option<f64>,
    #[serde(skip)]
    pub trajectory: Vec<TrajectorySample>,
}

impl GeodesicResult {
    pub fn last(&self) -> &TrajectorySample {
        self.trajectory.last().expect("trajectories hold at least the initial state")
    }

    /// `t,x0,..,speed` with one row per sample.
    pub fn to_csv(&self) -> String {
        let m = self.trajectory.first().map_or(0, |s| s.x.len());
        let mut out = String::from("t");
        for i in 0..m {
            out.push_str(&format!(",x{i}"));
        }
        out.push_str(",speed\n");
        for s in &self.trajectory {
            out.push_str(&format!("{:e}", s.t));
            for x in &s.x {
                out.push_str(&format!(",{x:e}"));
            }
            out.push_str(&format!(",{:e}\n", s.speed()));
        }
        out
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// State `y = (x, v)`; returns `(x', v') = (v, −Γ(v, v))`.
fn rhs(geo: &Geometry, y: &[f64]) -> Result<Vec<f64>> {
    let m = y.len() / 2;
    let (x, v) = y.split_at(m);
    let g = geo.christoffel(x)?;
    let mut out = v.to_vec();
    out.resize(2 * m, 0.0);
    for i in 0..m {
        for j in 0..m {
            let vv = v[i] * v[j];
            if vv == 0.0 {
                continue;
            }
            for k in 0..m {
                out[m + k] -= g[(i * m + j) * m + k] * vv;
            }
        }
    }
    Ok(out)
}

/// One step; returns the fifth-order state and the embedded error vector.
fn dp_step(geo: &Geometry, y: &[f64], h: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = y.len();
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
    for s in 0..7 {
        let mut ys = y.to_vec();
        for (r, kr) in k.iter().enumerate() {
            let a = A[s][r];
            if a != 0.0 {
                ys.iter_mut().zip(kr).for_each(|(u, d)| *u += h * a * d);
            }
        }
        k.push(rhs(geo, &ys)?);
    }
    let mut y5 = y.to_vec();
    let mut err = vec![0.0; n];
    for s in 0..7 {
        for i in 0..n {
            y5[i] += h * B5[s] * k[s][i];
            err[i] += h * (B5[s] - B4[s]) * k[s][i];
        }
    }
    Ok((y5, err))
}

fn error_norm(y: &[f64], y5: &[f64], err: &[f64], tol: f64) -> f64 {
    y.iter()
        .zip(y5)
        .zip(err)
        .map(|((a, b), e)| e.abs() / (tol + tol * a.abs().max(b.abs())))
        .fold(0.0, f64::max)
}

/// Bisect for the sub-step at which `|x|` reaches `radius`.
fn locate_exit(geo: &Geometry, y: &[f64], h: f64, radius: f64) -> Result<(f64, Vec<f64>)> {
    let m = y.len() / 2;
    let (mut lo, mut hi) = (0.0f64, h);
    let mut best = dp_step(geo, y, h)?.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (ym, _) = dp_step(geo, y, mid)?;
        if norm(&ym[..m]) >= radius {
            hi = mid;
            best = ym;
        } else {
            lo = mid;
        }
        if (hi - lo).abs() <= 1e-15 * h.abs().max(1.0) {
            break;
        }
    }
    Ok((hi, best))
}

/// Integrate the geodesic through `x0` with initial velocity `v0`.
pub fn integrate_geodesic(geo: &Geometry, x0: &[f64], v0: &[f64], opts: &GeodesicOptions) -> Result<GeodesicResult> {
    let m = geo.dim();
    if x0.len() != m || v0.len() != m {
        return Err(GeomError::DimensionMismatch { expected: m, found: x0.len().max(v0.len()) });
    }
    let dir = if opts.t_max < 0.0 { -1.0 } else { 1.0 };
    let horizon = opts.t_max.abs();
    let mut y: Vec<f64> = x0.iter().chain(v0).copied().collect();
    let mut t = 0.0f64;
    let energy_initial = geo.energy(x0, v0)?;
    let mut energy_drift = energy_initial.map(|_| 0.0);
    let regular = opts.blowup_speed.sqrt();
    let mut trajectory = vec![TrajectorySample { t: 0.0, x: x0.to_vec(), v: v0.to_vec() }];
    let mut h = (0.01f64).min(opts.max_step).min(horizon.max(opts.min_step));
    let mut max_speed = norm(v0);
    let (mut steps, mut rejected) = (0usize, 0usize);
    let mut max_error_estimate = 0.0f64;
    let finish = |status, trajectory: Vec<TrajectorySample>, steps, rejected, est, max_speed, drift| GeodesicResult {
        status,
        steps,
        rejected,
        max_error_estimate: est,
        max_speed,
        energy_initial,
        energy_drift: drift,
        trajectory,
    };
    if let Some(radius) = opts.escape_radius {
        if norm(x0) >= radius {
            let status = GeodesicStatus::EscapedBall { radius, time: 0.0, point: x0.to_vec(), velocity: v0.to_vec() };
            return Ok(finish(status, trajectory, 0, 0, 0.0, max_speed, energy_drift));
        }
    }
    while t < horizon {
        if steps + rejected >= opts.max_steps {
            return Err(GeomError::Integration(format!("step budget of {} exhausted at t = {}", opts.max_steps, dir * t)));
        }
        let step = h.min(horizon - t);
        let attempt = dp_step(geo, &y, dir * step);
        let (y5, en) = match attempt {
            Ok((y5, err)) if y5.iter().all(|v| v.is_finite()) => {
                let en = error_norm(&y, &y5, &err, opts.tolerance);
                (y5, en)
            }
            // overflow or evaluation failure along the way: treat like a failed step
            Ok(_) => (Vec::new(), f64::INFINITY),
            Err(e) if max_speed <= opts.blowup_speed => return Err(e),
            Err(_) => (Vec::new(), f64::INFINITY),
        };
        if en > 1.0 || !en.is_finite() {
            rejected += 1;
            let factor = if en.is_finite() { (0.9 * en.powf(-0.2)).clamp(0.1, 1.0) } else { 0.1 };
            h = step * factor;
            if h < opts.min_step {
                if max_speed > opts.blowup_speed {
                    let status = GeodesicStatus::Blowup { time: dir * t, max_speed };
                    if !opts.record {
                        trajectory.push(TrajectorySample { t: dir * t, x: y[..m].to_vec(), v: y[m..].to_vec() });
                    }
                    return Ok(finish(status, trajectory, steps, rejected, max_error_estimate, max_speed, energy_drift));
                }
                return Err(GeomError::Integration(format!(
                    "step size underflow at t = {} with speed {max_speed:e} below the blowup threshold",
                    dir * t
                )));
            }
            continue;
        }
        if let Some(radius) = opts.escape_radius {
            if norm(&y5[..m]) >= radius {
                let (sub, ye) = locate_exit(geo, &y, dir * step, radius)?;
                let time = dir * t + sub;
                trajectory.push(TrajectorySample { t: time, x: ye[..m].to_vec(), v: ye[m..].to_vec() });
                let speed = norm(&ye[m..]);
                let status = GeodesicStatus::EscapedBall { radius, time, point: ye[..m].to_vec(), velocity: ye[m..].to_vec() };
                return Ok(finish(status, trajectory, steps + 1, rejected, max_error_estimate, max_speed.max(speed), energy_drift));
            }
        }
        steps += 1;
        t += step;
        y = y5;
        let speed = norm(&y[m..]);
        max_speed = max_speed.max(speed);
        max_error_estimate = max_error_estimate.max(en * opts.tolerance);
        if let (Some(e0), Some(d)) = (energy_initial, energy_drift.as_mut()) {
            if max_speed <= regular {
                let e = geo.energy(&y[..m], &y[m..])?.expect("metric");
                *d = d.max((e - e0).abs() / (1.0 + e0.abs()));
            }
        }
        if opts.record || t >= horizon {
            trajectory.push(TrajectorySample { t: dir * t, x: y[..m].to_vec(), v: y[m..].to_vec() });
        }
        let factor = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
        h = (step * factor).min(opts.max_step);
    }
    let status = GeodesicStatus::ReachedHorizon { t_max: opts.t_max };
    Ok(finish(status, trajectory, steps, rejected, max_error_estimate, max_speed, energy_drift))
}
