use germforge::fields::{constant_field, ConnectionField};
use germforge::fixtures::{random_connection, random_metric};
use germforge::geodesics::*;
use germforge::jets::Variance::{Co, Contra};

fn constant_gamma(c: f64) -> Geometry {
    Geometry::Connection(ConnectionField::new(constant_field(1, &[Co, Co, Contra], vec![c])).unwrap())
}

#[test]
fn flat_geodesics_are_straight_lines() {
    let geo = Scenario::Flat.geometry();
    let opts = GeodesicOptions::default();
    let (x0, v0) = ([0.3, -1.2], [0.6, 0.8]);
    let r = integrate_geodesic(&geo, &x0, &v0, &opts).unwrap();
    assert_eq!(r.status, GeodesicStatus::ReachedHorizon { t_max: 100.0 });
    for s in &r.trajectory {
        for i in 0..2 {
            assert!((s.x[i] - x0[i] - s.t * v0[i]).abs() <= 1e-9);
        }
    }
    assert_eq!(r.last().t, 100.0);
    assert!(r.energy_drift.unwrap() <= 1e-12);
}

#[test]
fn circle_connection_blows_up_backward() {
    let geo = Scenario::CircleGamma.geometry();
    let back = integrate_geodesic(&geo, &[0.0], &[1.0], &GeodesicOptions { t_max: -100.0, ..Default::default() }).unwrap();
    match back.status {
        GeodesicStatus::Blowup { time, max_speed } => {
            assert!((time + 1.0).abs() <= 1e-3, "t* = {time}");
            assert!(max_speed > 1e6);
        }
        s => panic!("expected a blowup, got {s:?}"),
    }
    // γ(t) = log(1 + t) solves u'' + (u')² = 0
    let fwd = integrate_geodesic(&geo, &[0.0], &[1.0], &GeodesicOptions { t_max: 20.0, ..Default::default() }).unwrap();
    assert_eq!(fwd.status, GeodesicStatus::ReachedHorizon { t_max: 20.0 });
    for s in &fwd.trajectory {
        assert!((s.x[0] - (1.0 + s.t).ln()).abs() <= 1e-8, "t = {}", s.t);
        assert!((s.v[0] - 1.0 / (1.0 + s.t)).abs() <= 1e-8);
    }
}

#[test]
fn tighter_tolerances_reduce_the_error() {
    // u = log(1 + c t) / c for Γ = c
    let c = 0.5;
    let geo = constant_gamma(c);
    let mut last = f64::INFINITY;
    for tol in [1e-5, 1e-7, 1e-9, 1e-11] {
        let r = integrate_geodesic(&geo, &[0.0], &[1.0], &GeodesicOptions { t_max: 10.0, tolerance: tol, max_step: 10.0, ..Default::default() })
            .unwrap();
        let err = r.trajectory.iter().map(|s| (s.x[0] - (1.0 + c * s.t).ln() / c).abs()).fold(0.0, f64::max);
        assert!(err < last, "tolerance {tol:e}: {err:e} after {last:e}");
        last = err;
    }
    assert!(last < 1e-9);
}

#[test]
fn exit_is_located_on_the_sphere() {
    let geo = Scenario::Flat.geometry();
    let opts = GeodesicOptions { escape_radius: Some(2.0), ..Default::default() };
    let r = integrate_geodesic(&geo, &[0.0, 0.0], &[0.6, 0.8], &opts).unwrap();
    match r.status {
        GeodesicStatus::EscapedBall { radius, time, point, .. } => {
            assert_eq!(radius, 2.0);
            assert!((time - 2.0).abs() <= 1e-9);
            assert!((point[0] - 1.2).abs() <= 1e-9 && (point[1] - 1.6).abs() <= 1e-9);
        }
        s => panic!("{s:?}"),
    }
}

#[test]
fn metric_geodesics_conserve_energy() {
    let g = random_metric(5, (1, 2), 3, 0.05).unwrap();
    let geo = Geometry::Metric(g);
    let r = integrate_geodesic(&geo, &[0.0, 0.0, 0.0], &[0.3, 0.2, -0.1], &GeodesicOptions { t_max: 3.0, ..Default::default() })
        .unwrap();
    assert!(matches!(r.status, GeodesicStatus::ReachedHorizon { .. }));
    let e0 = r.energy_initial.unwrap();
    assert!(r.energy_drift.unwrap() <= 1e-6 * (1.0 + e0.abs()));
}

#[test]
fn misner_metric_is_incomplete() {
    let spec = ProbeSpec {
        basepoints: vec![vec![0.0, 0.0]],
        directions: 12,
        seed: 0,
        options: GeodesicOptions { record: false, ..Default::default() },
        flat_outside: None,
    };
    let s = completeness_probe(&Scenario::Misner.geometry(), &spec);
    assert_eq!(s.completeness, Completeness::IncompleteEvidence);
    assert_eq!(s.errors, 0);
    let first = s
        .samples
        .iter()
        .filter_map(|p| match p.result.as_ref()?.status {
            GeodesicStatus::Blowup { time, .. } => Some(time),
            _ => None,
        })
        .fold(f64::INFINITY, f64::min);
    assert!(first < 100.0);
    // the blowup along x: the Killing momentum is conserved, so the spiral is genuine
    for p in &s.samples {
        let r = p.result.as_ref().unwrap();
        assert!(r.energy_drift.unwrap() <= 1e-6 * (1.0 + r.energy_initial.unwrap().abs()), "{:?}", r.energy_drift);
    }
}

#[test]
fn meneghini_metric_is_incomplete() {
    let spec = ProbeSpec {
        basepoints: Scenario::Meneghini.basepoints(),
        directions: 8,
        seed: 0,
        options: GeodesicOptions { record: false, ..Default::default() },
        flat_outside: None,
    };
    let s = completeness_probe(&Scenario::Meneghini.geometry(), &spec);
    assert_eq!(s.completeness, Completeness::IncompleteEvidence);
    assert!(s.blowup > 0);
}

#[test]
fn flat_probe_is_complete() {
    let spec = ProbeSpec {
        basepoints: (0..10).map(|k| vec![k as f64 * 0.3, -(k as f64) * 0.1]).collect(),
        directions: 10,
        seed: 0,
        options: GeodesicOptions { record: false, ..Default::default() },
        flat_outside: None,
    };
    let s = completeness_probe(&Scenario::Flat.geometry(), &spec);
    assert_eq!(s.samples.len(), 100);
    assert_eq!(s.reached_horizon, 100);
    assert_eq!(s.completeness, Completeness::CompleteUpTo { t_max: 100.0 });
}

#[test]
fn lemma_holds_for_the_flat_germ() {
    let flat = ConnectionField::new(constant_field(2, &[Co, Co, Contra], vec![0.0; 8])).unwrap();
    let r = lemma_check(&flat, 0.05, &LemmaSpec { samples: 20, ..Default::default() }).unwrap();
    assert!(r.passed, "{r:?}");
    assert_eq!(r.rescaling, 1.0);
    assert_eq!(r.deviation, 0.0);
}

#[test]
fn lemma_holds_for_a_random_germ() {
    let germ = random_connection(3, 2, 0.8).unwrap();
    let r = lemma_check(&germ, 0.05, &LemmaSpec { samples: 200, seed: 1, ..Default::default() }).unwrap();
    assert!(r.passed, "{:?}", (r.deviation, r.all_exit, r.max_speed, r.max_straight_deviation, r.transplant_passed));
    assert!(r.deviation < 0.05);
    assert!(r.max_speed <= 2.0);
    assert_eq!(r.samples.len(), 200);
    assert!(r.samples.iter().all(|s| s.exit_time.unwrap() > 0.0));
}

#[test]
fn wild_germs_are_rescaled() {
    let germ = random_connection(4, 2, 50.0).unwrap();
    let r = lemma_check(&germ, 0.05, &LemmaSpec { samples: 20, ..Default::default() }).unwrap();
    assert!(r.rescaling < 1.0);
    assert!(r.passed);
    assert_eq!(largest_passing_epsilon(&germ, &[0.01, 0.05], &LemmaSpec { samples: 10, ..Default::default() }).unwrap(), Some(0.05));
}

#[test]
fn trajectories_write_csv() {
    let r = integrate_geodesic(&Scenario::Flat.geometry(), &[0.0, 0.0], &[1.0, 0.0], &GeodesicOptions { t_max: 2.0, ..Default::default() })
        .unwrap();
    let csv = r.to_csv();
    assert!(csv.starts_with("t,x0,x1,speed\n"));
    assert_eq!(csv.lines().count(), r.trajectory.len() + 1);
}
