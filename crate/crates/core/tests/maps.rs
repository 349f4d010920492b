use torsionlab_core::maps::{Representation, SurfaceModel};
use torsionlab_core::zoo::{self, MapSpec, RepresentationKind};
use torsionlab_core::{Isotopy, Mat2, PlanePoint};

fn pts() -> Vec<PlanePoint> {
    vec![
        PlanePoint::new(0.13, 0.77),
        PlanePoint::new(-0.4, 0.25),
        PlanePoint::new(0.5, -0.31),
    ]
}

#[test]
fn every_zoo_map_starts_at_identity_and_preserves_area() {
    let maps: Vec<Isotopy> = vec![
        zoo::identity(SurfaceModel::Plane),
        zoo::rotation(PlanePoint::new(0.2, -0.1), 0.3),
        zoo::disc_rotation(0.7, RepresentationKind::Flow),
        zoo::translation(SurfaceModel::Torus, PlanePoint::new(0.3, -0.2)),
        zoo::annulus_rotation(0.25),
        zoo::linear_shear(),
        zoo::double_shear(1.0, 1.0, RepresentationKind::ClosedForm),
        zoo::double_shear(1.0, 1.0, RepresentationKind::Flow),
    ];
    let inside: Vec<PlanePoint> = pts().into_iter().map(|p| p * 0.9).collect();
    for iso in &maps {
        let r = iso.invariant_report(&inside, &[0.5, 1.0, 2.5]).unwrap();
        assert!(r.identity_error == 0.0, "{}", iso.label());
        assert!(
            r.determinant_error < 1e-8,
            "{} det {}",
            iso.label(),
            r.determinant_error
        );
        // Shifted RK4 stages round differently; chaotic stretching amplifies it.
        let tol = if iso.has_flow() { 1e-9 } else { 1e-12 };
        assert!(
            r.equivariance_error < tol,
            "{} eq {}",
            iso.label(),
            r.equivariance_error
        );
    }
}

#[test]
fn extension_rule_composes_time_one_maps() {
    // f_t = f_{t−⌊t⌋} ∘ f^{⌊t⌋}.
    let iso = zoo::double_shear(0.6, 0.4, RepresentationKind::ClosedForm);
    let p = PlanePoint::new(0.31, 0.62);
    let f2 = iso.eval(1.0, iso.eval(1.0, p).unwrap()).unwrap();
    let direct = iso.eval(2.3, p).unwrap();
    let composed = iso.eval(0.3, f2).unwrap();
    assert!(direct.distance(composed) < 1e-14);
}

#[test]
fn flow_and_closed_form_double_shear_agree() {
    let closed = zoo::double_shear(1.0, 1.0, RepresentationKind::ClosedForm);
    let flow = zoo::double_shear(1.0, 1.0, RepresentationKind::Flow);
    for p in pts() {
        // Each shear has a constant field, so RK4 is exact up to rounding.
        let a = closed.jet(3.0, p).unwrap();
        let b = flow.jet(3.0, p).unwrap();
        assert!(a.point.distance(b.point) < 1e-9);
        assert!((a.derivative - b.derivative).max_abs() < 1e-7);
    }
}

#[test]
fn iterate_extension_is_shifted_power() {
    let f = zoo::double_shear(1.0, 1.0, RepresentationKind::ClosedForm);
    let g = f.iterate_extension(3, [1, -2]).unwrap();
    for p in pts() {
        let expect = f.eval(3.0, p).unwrap() - PlanePoint::new(1.0, -2.0);
        assert_eq!(g.eval(1.0, p).unwrap(), expect);
    }
}

#[test]
fn cursor_sampling_does_not_perturb_the_trajectory() {
    let f = zoo::disc_rotation(0.3, RepresentationKind::Flow);
    let p = PlanePoint::new(0.4, 0.1);
    let mut coarse = f.cursor(p);
    let mut fine = f.cursor(p);
    for k in 1..=1000 {
        fine.at(k as f64 * 0.00137).unwrap();
    }
    assert_eq!(coarse.at(2.0).unwrap().point, fine.at(2.0).unwrap().point);
}

#[test]
fn map_spec_builds_every_kind() {
    for kind in zoo::MAP_KINDS {
        let spec = MapSpec {
            kind: kind.to_string(),
            ..MapSpec::default()
        };
        let iso = spec.build().unwrap();
        assert!(iso.eval(0.5, PlanePoint::new(0.1, 0.2)).is_ok(), "{kind}");
    }
    let spec: MapSpec =
        toml::from_str("kind = \"double-shear\"\nrepresentation = \"flow\"\ntime_step = 0.002\n[params]\na = 0.5\n")
            .unwrap();
    let iso = spec.build().unwrap();
    assert!(iso.has_flow());
    assert_eq!(iso.time_step(), 0.002);
    assert!(matches!(iso.representation(), Representation::Concatenation(_)));
    assert!(MapSpec::default().build().is_err());
}

#[test]
fn reflection_conjugates() {
    let f = zoo::rotation(PlanePoint::ORIGIN, 0.2);
    let g = f.reflected();
    let p = PlanePoint::new(0.3, 0.4);
    let expect = Mat2::rotation(-0.2 * std::f64::consts::TAU) * p;
    assert!(g.eval(1.0, p).unwrap().distance(expect) < 1e-15);
}
