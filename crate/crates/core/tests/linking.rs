use proptest::prelude::*;
use torsionlab_core::lift::LiftOptions;
use torsionlab_core::linking::{linking_curves, linking_estimate, linking_n, perturbation_bound_check, SampledCurve};
use torsionlab_core::maps::SurfaceModel;
use torsionlab_core::zoo::{self, MapSpec, RepresentationKind};
use torsionlab_core::{Error, PlanePoint};

fn opts() -> LiftOptions {
    LiftOptions::default()
}

#[test]
fn rotation_and_identity() {
    let rot = zoo::rotation(PlanePoint::ORIGIN, 0.7);
    for n in [1, 10, 333] {
        let l = linking_n(&rot, PlanePoint::new(0.3, 0.1), PlanePoint::new(-0.2, 0.9), n, &opts()).unwrap();
        assert!((l - 0.7).abs() < 1e-10);
    }
    let id = zoo::identity(SurfaceModel::Plane);
    assert_eq!(
        linking_n(&id, PlanePoint::ORIGIN, PlanePoint::new(1.0, 1.0), 5, &opts()).unwrap(),
        0.0
    );
}

#[test]
fn radial_cubic_linking_with_origin() {
    let iso = MapSpec {
        kind: "radial-hamiltonian".into(),
        profile: Some("cubic".into()),
        ..Default::default()
    }
    .build()
    .unwrap();
    for r in [0.1, 0.5, 0.8] {
        let l = linking_n(&iso, PlanePoint::ORIGIN, PlanePoint::new(0.0, r), 1, &opts()).unwrap();
        let h1 = -3.0 * (1.0 - r * r) * (1.0 - r * r);
        assert!((l - h1 / std::f64::consts::PI).abs() < 1e-6);
    }
}

#[test]
fn coincident_pair_is_a_collision() {
    let rot = zoo::rotation(PlanePoint::ORIGIN, 0.7);
    let p = PlanePoint::new(0.3, 0.1);
    assert!(matches!(
        linking_n(&rot, p, p, 3, &opts()),
        Err(Error::Collision { .. })
    ));
}

#[test]
fn estimate_reports_min_separation() {
    let rot = zoo::rotation(PlanePoint::ORIGIN, 0.25);
    let e = linking_estimate(&rot, PlanePoint::new(0.5, 0.0), PlanePoint::new(-0.5, 0.0), 4, &opts()).unwrap();
    assert!((e.value - 0.25).abs() < 1e-12);
    assert!((e.min_separation - 1.0).abs() < 1e-12);
    assert_eq!(e.horizon, 4.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn symmetric_and_translation_invariant(
        x in 0.0..1.0f64, y in 0.0..1.0f64, u in 0.0..1.0f64, v in 0.0..1.0f64,
        kx in -3i32..3, ky in -3i32..3, n in 1u32..12,
    ) {
        let f = zoo::double_shear(0.4, 0.6, RepresentationKind::ClosedForm);
        // Dyadic coordinates keep the shift exact at t = 0; later rounding
        // differs by ulps and is stretched by the map, so horizons stay short.
        let q = |t: f64| (t * 1024.0).round() / 1024.0;
        let (a, b) = (PlanePoint::new(q(x), q(y)), PlanePoint::new(q(u), q(v)));
        prop_assume!(a.distance(b) > 0.05);
        let l = linking_n(&f, a, b, n, &opts()).unwrap();
        let r = linking_n(&f, b, a, n, &opts()).unwrap();
        prop_assert!((l - r).abs() < 1e-9);
        let k = PlanePoint::new(kx as f64, ky as f64);
        let s = linking_n(&f, a + k, b + k, n, &opts()).unwrap();
        prop_assert!((l - s).abs() < 1e-9);
    }
}

#[test]
fn circle_winds_once_per_unit_time() {
    let t_end = 10.0;
    let alpha = SampledCurve::from_fn(0.0, t_end, 1000, |_| PlanePoint::ORIGIN).unwrap();
    let beta = SampledCurve::from_fn(0.0, t_end, 1000, PlanePoint::from_turns).unwrap();
    let e = linking_curves(&alpha, &beta, t_end).unwrap();
    assert!((e.value - 1.0).abs() < 1e-12);
}

#[test]
fn sampled_orbits_match_linking_n() {
    let f = zoo::double_shear(1.0, 1.0, RepresentationKind::ClosedForm);
    let (x, y) = (PlanePoint::new(0.21, 0.37), PlanePoint::new(0.64, 0.12));
    let n = 20;
    let l = linking_n(&f, x, y, n, &opts()).unwrap();
    // Sample both orbits at the density the lift settled on.
    let tr = torsionlab_core::lift::track_separation(&f, x, y, n as f64, &opts()).unwrap();
    let (mut cx, mut cy) = (f.cursor(x), f.cursor(y));
    let pa: Vec<PlanePoint> = tr.times.iter().map(|&t| cx.at(t).unwrap().point).collect();
    let pb: Vec<PlanePoint> = tr.times.iter().map(|&t| cy.at(t).unwrap().point).collect();
    let alpha = SampledCurve::new(tr.times.clone(), pa).unwrap();
    let beta = SampledCurve::new(tr.times.clone(), pb).unwrap();
    let e = linking_curves(&alpha, &beta, n as f64).unwrap();
    assert!((e.value - l).abs() < 1e-8);
}

#[test]
fn curve_csv_round_trip() {
    let c = SampledCurve::from_fn(0.0, 1.0, 7, |t| PlanePoint::new(t, -t)).unwrap();
    let mut buf = Vec::new();
    c.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,x,y\n"));
    let back = SampledCurve::read_csv(format!("# comment\n{text}").as_bytes()).unwrap();
    assert_eq!(back, c);
    assert!(SampledCurve::new(vec![0.0, 0.0], vec![PlanePoint::ORIGIN; 2]).is_err());
}

fn rotation_pair(t_end: f64, samples: usize, offset: f64) -> [SampledCurve; 4] {
    let omega = 0.3;
    let a = |t: f64| PlanePoint::from_turns(omega * t) * 0.2;
    let b = |t: f64| PlanePoint::from_turns(omega * t + 0.5) * 0.8;
    // Radial wobble of size `offset`.
    let a2 = move |t: f64| a(t) * (1.0 + offset / 0.2 * (7.0 * t).sin());
    let b2 = move |t: f64| b(t) * (1.0 + offset / 0.8 * (3.0 * t).cos());
    [
        SampledCurve::from_fn(0.0, t_end, samples, a).unwrap(),
        SampledCurve::from_fn(0.0, t_end, samples, b).unwrap(),
        SampledCurve::from_fn(0.0, t_end, samples, a2).unwrap(),
        SampledCurve::from_fn(0.0, t_end, samples, b2).unwrap(),
    ]
}

#[test]
fn perturbation_examples() {
    for t_end in [10.0, 100.0] {
        let [a, b, _, _] = rotation_pair(t_end, 100 * t_end as usize, 0.0);
        let r = perturbation_bound_check(&a, &b, &a, &b, t_end).unwrap();
        assert!(r.premise_ok && r.horizon_difference == 0.0);
        // d = 1: perturbation d/4.
        let [a, b, a2, b2] = rotation_pair(t_end, 100 * t_end as usize, 0.25);
        let r = perturbation_bound_check(&a, &b, &a2, &b2, t_end).unwrap();
        assert!(r.premise_ok);
        assert!(r.max_angle_difference <= 0.5);
        assert!(r.horizon_difference <= 1.0 / (2.0 * t_end));
    }
    let [a, b, a2, b2] = rotation_pair(10.0, 1000, 0.6);
    let r = perturbation_bound_check(&a, &b, &a2, &b2, 10.0).unwrap();
    assert!(!r.premise_ok);
}
