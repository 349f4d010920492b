use torsionlab_core::action::*;
use torsionlab_core::geometry::signed_turns_between;
use torsionlab_core::zoo::RepresentationKind;
use torsionlab_core::{Error, LiftOptions, PlanePoint, SurfaceModel};

const REPRS: [RepresentationKind; 2] = [RepresentationKind::ClosedForm, RepresentationKind::Flow];

fn dual_bump() -> HamiltonianProfile {
    HamiltonianProfile::Bumps(vec![(2.0, 0.25), (-1.0, 1.0)])
}

#[test]
fn profiles_vanish_at_the_boundary() {
    for p in [
        HamiltonianProfile::Cubic,
        dual_bump(),
        HamiltonianProfile::Cubic.scaled(3.0),
    ] {
        p.validate().unwrap();
        assert!(p.h(1.0).abs() < 1e-12 && p.dh(1.0).abs() < 1e-12);
    }
    assert!(HamiltonianProfile::Bumps(vec![(1.0, 1.5)]).validate().is_err());
}

#[test]
fn zero_profile_is_identity() {
    for repr in REPRS {
        let iso = hamiltonian_isotopy(&HamiltonianProfile::Zero, repr).unwrap();
        for p in [PlanePoint::new(0.3, 0.4), PlanePoint::new(-0.7, 0.1)] {
            assert!(iso.eval(1.0, p).unwrap().distance(p) < 1e-14);
        }
    }
}

#[test]
fn cubic_angular_speed_matches_field() {
    let profile = HamiltonianProfile::Cubic;
    let expected = -3.0 * 0.75_f64.powi(2) / std::f64::consts::PI;
    assert!((profile.angular_speed(0.5) - expected).abs() < 1e-14);
    for repr in REPRS {
        let iso = hamiltonian_isotopy(&profile, repr).unwrap();
        let p = PlanePoint::new(0.5, 0.0);
        // Trajectory fit: the angle swept over a short time, divided by it.
        let dt = 0.1;
        let q = iso.eval(dt, p).unwrap();
        assert!((q.norm() - 0.5).abs() < 1e-9);
        assert!((signed_turns_between(p, q) / dt - expected).abs() < 1e-9);
    }
}

#[test]
fn scaling_scales_angular_speed() {
    let base = HamiltonianProfile::Cubic;
    for lambda in [-2.0, 0.5, 3.0] {
        let scaled = base.scaled(lambda);
        for r in [0.1, 0.5, 0.9] {
            assert!((scaled.angular_speed(r) - lambda * base.angular_speed(r)).abs() < 1e-12);
        }
    }
}

#[test]
fn flow_preserves_area() {
    for repr in REPRS {
        let iso = hamiltonian_isotopy(&dual_bump(), repr).unwrap();
        for p in [
            PlanePoint::new(0.2, 0.1),
            PlanePoint::new(-0.5, 0.6),
            PlanePoint::new(0.0, -0.9),
        ] {
            assert!((iso.jacobian(1.0, p).unwrap().det() - 1.0).abs() < 1e-8);
        }
    }
}

#[test]
fn action_examples() {
    for repr in REPRS {
        let cubic = HamiltonianIsotopy::new(HamiltonianProfile::Cubic, repr).unwrap();
        let a = symplectic_action(&cubic, PlanePoint::ORIGIN, Primitive::Standard).unwrap();
        assert!((a.value + 1.0).abs() < 1e-8);
        assert_eq!(a.loop_integral, 0.0);

        let zero = HamiltonianIsotopy::new(HamiltonianProfile::Zero, repr).unwrap();
        assert_eq!(
            symplectic_action(&zero, PlanePoint::ORIGIN, Primitive::Standard)
                .unwrap()
                .value,
            0.0
        );

        for lambda in [-1.5, 0.25, 2.0] {
            let scaled = HamiltonianIsotopy::new(HamiltonianProfile::Cubic.scaled(lambda), repr).unwrap();
            let a = symplectic_action(&scaled, PlanePoint::ORIGIN, Primitive::Standard).unwrap();
            assert!((a.value + lambda).abs() < 1e-8);
        }

        assert!(matches!(
            symplectic_action(&cubic, PlanePoint::new(0.5, 0.0), Primitive::Standard),
            Err(Error::NotFixed { .. })
        ));
    }
}

#[test]
fn action_is_gauge_invariant() {
    let hi = HamiltonianIsotopy::new(dual_bump(), RepresentationKind::ClosedForm).unwrap();
    for &p in &radial_fixed_candidates(&hi.profile) {
        let base = symplectic_action(&hi, p, Primitive::Standard).unwrap();
        for k in [0.5, -3.0] {
            let gauged = symplectic_action(&hi, p, Primitive::Gauged(k)).unwrap();
            assert!((gauged.value - base.value).abs() < 1e-12);
        }
    }
}

#[test]
fn radial_integral_is_boundary_difference() {
    for (profile, expected) in [
        (HamiltonianProfile::Cubic, -1.0),
        (dual_bump(), -1.0),
        (HamiltonianProfile::Zero, 0.0),
    ] {
        assert!((radial_linking_integral(&profile) - expected).abs() < 1e-10);
    }
}

#[test]
fn average_linking_examples() {
    let lift = LiftOptions::default();
    let cubic = hamiltonian_isotopy(&HamiltonianProfile::Cubic, RepresentationKind::ClosedForm).unwrap();
    let avg = average_linking(&cubic, PlanePoint::ORIGIN, 8, 20_000, 7, &lift).unwrap();
    assert!((avg.mean_1 + 1.0).abs() <= 3.0 * avg.stderr_1, "{avg:?}");
    assert!((avg.mean_n + 1.0).abs() <= 3.0 * avg.stderr_n, "{avg:?}");
    assert!((avg.mean_n - avg.mean_1).abs() <= 3.0 * (avg.stderr_n + avg.stderr_1));

    let id = torsionlab_core::zoo::identity(SurfaceModel::Disc);
    let avg = average_linking(&id, PlanePoint::ORIGIN, 8, 1_000, 7, &lift).unwrap();
    assert_eq!(
        (avg.mean_n, avg.stderr_n, avg.mean_1, avg.stderr_1),
        (0.0, 0.0, 0.0, 0.0)
    );

    let scaled = hamiltonian_isotopy(&HamiltonianProfile::Cubic.scaled(2.0), RepresentationKind::ClosedForm).unwrap();
    let avg = average_linking(&scaled, PlanePoint::ORIGIN, 4, 20_000, 11, &lift).unwrap();
    assert!((avg.mean_1 + 2.0).abs() <= 3.0 * avg.stderr_1, "{avg:?}");

    assert!(average_linking(&cubic, PlanePoint::ORIGIN, 8, 99, 7, &lift).is_err());
}

#[test]
fn average_linking_is_deterministic() {
    let lift = LiftOptions::default();
    let cubic = hamiltonian_isotopy(&HamiltonianProfile::Cubic, RepresentationKind::ClosedForm).unwrap();
    let a = average_linking(&cubic, PlanePoint::ORIGIN, 2, 500, 3, &lift).unwrap();
    let b = average_linking(&cubic, PlanePoint::ORIGIN, 2, 500, 3, &lift).unwrap();
    assert_eq!(a, b);
}

#[test]
fn fixed_point_search_examples() {
    let cubic = HamiltonianIsotopy::new(HamiltonianProfile::Cubic, RepresentationKind::ClosedForm).unwrap();
    let best = find_nonzero_action_fixed_point(&cubic, &[PlanePoint::ORIGIN], 1e-6).unwrap();
    assert_eq!(best.point, PlanePoint::ORIGIN);
    assert!((best.action.value.abs() - 1.0).abs() < 1e-8);

    let zero = HamiltonianIsotopy::new(HamiltonianProfile::Zero, RepresentationKind::ClosedForm).unwrap();
    assert!(matches!(
        find_nonzero_action_fixed_point(&zero, &[PlanePoint::ORIGIN], 1e-6),
        Err(Error::NoCandidateAboveTol { .. })
    ));
}

#[test]
fn dual_bump_picks_the_dominant_fixed_point() {
    let hi = HamiltonianIsotopy::new(dual_bump(), RepresentationKind::ClosedForm).unwrap();
    let candidates = radial_fixed_candidates(&hi.profile);
    // The origin and the circle where h′ changes sign.
    assert_eq!(candidates.len(), 2);
    let s = candidates[1].norm().powi(2);
    assert!(hi.profile.dh(s).abs() < 1e-9);
    // On each fixed circle the action is −h(s).
    for &p in &candidates {
        let a = symplectic_action(&hi, p, Primitive::Standard).unwrap();
        assert!((a.value + hi.profile.h(p.norm().powi(2))).abs() < 1e-8);
    }
    let best = find_nonzero_action_fixed_point(&hi, &candidates, 1e-6).unwrap();
    assert_eq!(best.point, PlanePoint::ORIGIN);
    assert!((best.action.value.abs() - hi.profile.h(0.0).abs()).abs() < 1e-8);
    assert!(hi.profile.h(s).abs() < best.action.value.abs());
}
