//! Acceptance suite: one line per criterion with its tolerance, measured
//! margin and runtime against the budget. Exits nonzero if any criterion
//! fails or overruns its budget.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torsionlab_core::action::{
    average_linking, hamiltonian_isotopy, symplectic_action, HamiltonianIsotopy, HamiltonianProfile, Primitive,
};
use torsionlab_core::chains::{
    adler_weiss_partition, assemble_loop_orbit, periodic_from_closed_chain, random_closed_chain, transition_relation,
    triangle_linking_check, TriangleTrack, DEFAULT_ELL_BOUND,
};
use torsionlab_core::demos::{thm1_demo, thm2_demo, Thm1Options, Thm2Options};
use torsionlab_core::linking::{linking_n, perturbation_bound_check, SampledCurve};
use torsionlab_core::rotset::{
    estimate_rotation_set, halton_seeds, interior_rational_triple, iterate_identity_check, measured_displacement,
    realize_rational_vector, semiconjugacy_bound_check, NewtonOptions, SinePerturbation, PERIODIC_RESIDUAL,
};
use torsionlab_core::torsion::torsion_n;
use torsionlab_core::witness::{find_witness, WitnessCertificate, WitnessOptions, BOUND_SLACK};
use torsionlab_core::zoo::{self, RepresentationKind};
use torsionlab_core::{Error, Isotopy, LiftOptions, PlanePoint};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn disc_point(r: &mut ChaCha8Rng, radius: f64) -> PlanePoint {
    PlanePoint::from_turns(r.gen::<f64>()) * (radius * r.gen::<f64>().sqrt())
}

fn random_bumps(r: &mut ChaCha8Rng) -> HamiltonianProfile {
    HamiltonianProfile::Bumps(
        (0..2)
            .map(|_| (r.gen_range(-3.0..3.0), r.gen_range(0.2..1.0)))
            .collect(),
    )
}

/// `(isotopy, base point)` drawn from the zoo.
fn random_zoo_case(r: &mut ChaCha8Rng) -> (Isotopy, PlanePoint) {
    match r.gen_range(0..7) {
        0 => (
            zoo::rotation(disc_point(r, 1.0), r.gen_range(-0.9..0.9)),
            disc_point(r, 2.0),
        ),
        1 => (zoo::linear_shear(), disc_point(r, 2.0)),
        2 => (
            zoo::double_shear(
                r.gen_range(0.0..1.0),
                r.gen_range(0.0..1.0),
                RepresentationKind::ClosedForm,
            ),
            PlanePoint::new(r.gen(), r.gen()),
        ),
        3 => (
            zoo::double_shear(1.0, 1.0, RepresentationKind::Flow),
            PlanePoint::new(r.gen(), r.gen()),
        ),
        4 => (
            hamiltonian_isotopy(&random_bumps(r), RepresentationKind::ClosedForm).unwrap(),
            disc_point(r, 0.95),
        ),
        5 => (
            zoo::disc_rotation(r.gen_range(-0.9..0.9), RepresentationKind::Flow),
            disc_point(r, 0.95),
        ),
        _ => (
            zoo::annulus_rotation(r.gen_range(-0.9..0.9)),
            PlanePoint::new(r.gen(), r.gen_range(-1.0..1.0)),
        ),
    }
}

fn c1_xi_independence() -> Outcome {
    let mut r = rng(1);
    let lift = LiftOptions::default();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..200 {
        let (iso, x) = random_zoo_case(&mut r);
        let xi = PlanePoint::from_turns(r.gen());
        let xi2 = PlanePoint::from_turns(r.gen());
        let n = r.gen_range(8..=512);
        let t1 = torsion_n(&iso, x, xi, n, &lift).map_err(|e| format!("{}: {e}", iso.label()))?;
        let t2 = torsion_n(&iso, x, xi2, n, &lift).map_err(|e| format!("{}: {e}", iso.label()))?;
        // Positive means violated.
        worst = worst.max((t1 - t2).abs() - (2.0 / n as f64 + 1e-9));
    }
    check(
        worst <= 0.0,
        format!("200 tuples, max |ΔTorsion_n| − (2/n + 1e-9) = {worst:.3e}"),
    )
}

fn c2_rotation_exactness() -> Outcome {
    let lift = LiftOptions::default();
    let mut worst = 0.0_f64;
    for omega in [0.3, -0.3, 0.7, -0.7] {
        let iso = zoo::rotation(PlanePoint::new(0.25, -0.5), omega);
        for n in [1, 10, 100, 1000] {
            let x = PlanePoint::new(0.1, 0.3);
            let y = PlanePoint::new(-0.8, 0.45);
            let t = torsion_n(&iso, x, PlanePoint::new(0.6, 0.8), n, &lift).map_err(|e| e.to_string())?;
            let l = linking_n(&iso, x, y, n, &lift).map_err(|e| e.to_string())?;
            worst = worst.max((t - omega).abs()).max((l - omega).abs());
        }
    }
    check(
        worst <= 1e-10,
        format!("max deviation from ω₀ = {worst:.3e} (tol 1e-10)"),
    )
}

/// Both sides of the bound recomputed from scratch at doubled lift density.
fn recheck(iso: &Isotopy, c: &WitnessCertificate, lift: &LiftOptions) -> Result<f64, Error> {
    let eps = linking_n(iso, c.x, c.y, c.n, lift)?;
    let tor = torsion_n(iso, c.z, c.xi, c.n, lift)?;
    Ok(tor.abs() - (eps.abs() / 3.0 - 1.0 / c.n as f64 - BOUND_SLACK))
}

fn random_witness_case(r: &mut ChaCha8Rng) -> (Isotopy, PlanePoint, PlanePoint) {
    match r.gen_range(0..5) {
        0 => {
            let omega = r.gen_range(0.05..0.9) * if r.gen() { 1.0 } else { -1.0 };
            (
                zoo::rotation(disc_point(r, 1.0), omega),
                disc_point(r, 1.5),
                disc_point(r, 1.5),
            )
        }
        1 => {
            let profile = if r.gen() {
                HamiltonianProfile::Cubic.scaled(r.gen_range(-3.0..3.0))
            } else {
                random_bumps(r)
            };
            let iso = hamiltonian_isotopy(&profile, RepresentationKind::ClosedForm).unwrap();
            (iso, disc_point(r, 0.95), disc_point(r, 0.95))
        }
        2 => {
            // h′(0) = 0: little twist near the origin, so s₀ = 0 rarely works.
            let (a1, c1, c2) = (r.gen_range(0.5..3.0), r.gen_range(0.2..0.6), r.gen_range(0.7..1.0));
            let profile = HamiltonianProfile::Bumps(vec![(a1, c1), (-a1 * c2 / c1, c2)]);
            let iso = hamiltonian_isotopy(&profile, RepresentationKind::ClosedForm).unwrap();
            let y = PlanePoint::from_turns(r.gen()) * r.gen_range(0.3..0.9);
            (iso, disc_point(r, 0.05), y)
        }
        3 => {
            let iso = zoo::double_shear(
                r.gen_range(0.05..0.35),
                r.gen_range(0.05..0.35),
                RepresentationKind::ClosedForm,
            );
            (
                iso,
                PlanePoint::new(r.gen(), r.gen()),
                PlanePoint::new(r.gen_range(-1.0..2.0), r.gen_range(-1.0..2.0)),
            )
        }
        _ => {
            let iso = zoo::double_shear(
                r.gen_range(0.35..1.0),
                r.gen_range(0.35..1.0),
                RepresentationKind::ClosedForm,
            );
            let x = PlanePoint::new(r.gen(), r.gen());
            (iso, x, x + disc_point(r, 0.5))
        }
    }
}

fn c3_witness_guarantee() -> Outcome {
    let mut r = rng(3);
    let opts = WitnessOptions::default();
    let doubled = opts.lift.doubled();
    let (mut certified, mut drawn, mut exhausted, mut searched, mut worst) = (0, 0, 0, 0, f64::INFINITY);
    let mut violations = Vec::new();
    while certified < 50 && drawn < 5000 {
        drawn += 1;
        let (iso, x, y) = random_witness_case(&mut r);
        let n = r.gen_range(5..=50);
        match linking_n(&iso, x, y, n, &opts.lift) {
            Ok(l) if l.abs() >= 0.05 => {}
            _ => continue,
        }
        let outcome = find_witness(&iso, x, y, n, &opts).and_then(|c| Ok((c.s0, recheck(&iso, &c, &doubled)?)));
        match outcome {
            Ok((s0, margin)) => {
                certified += 1;
                searched += usize::from(s0 > 0.0);
                worst = worst.min(margin);
                if margin < 0.0 {
                    violations.push(format!("{} n={n}: recheck margin {margin:.3e}", iso.label()));
                }
            }
            // No certificate; the search budget ran out.
            Err(Error::S0NotFound { .. }) => exhausted += 1,
            Err(e) => violations.push(format!("{} n={n}: {e}", iso.label())),
        }
    }
    let detail = format!(
        "{certified} certificates ({searched} with s0 > 0; {exhausted} searches exhausted; {drawn} drawn), \
         min recheck margin {worst:.3e}, violations {}{}",
        violations.len(),
        violations.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
    );
    check(certified == 50 && violations.is_empty(), detail)
}

fn c4_action_identities() -> Outcome {
    let hi = HamiltonianIsotopy::new(HamiltonianProfile::Cubic, RepresentationKind::ClosedForm)
        .map_err(|e| e.to_string())?;
    let a = symplectic_action(&hi, PlanePoint::ORIGIN, Primitive::Standard).map_err(|e| e.to_string())?;
    let avg = average_linking(&hi.isotopy, PlanePoint::ORIGIN, 8, 100_000, 7, &LiftOptions::default())
        .map_err(|e| e.to_string())?;
    let action_ok = (a.value + 1.0).abs() <= 1e-8;
    let mean1_ok = (avg.mean_1 + 1.0).abs() <= 3.0 * avg.stderr_1;
    let meann_ok = (avg.mean_n + 1.0).abs() <= 3.0 * avg.stderr_n;
    let pair_ok = (avg.mean_n - avg.mean_1).abs() <= 3.0 * (avg.stderr_n + avg.stderr_1);
    check(
        action_ok && mean1_ok && meann_ok && pair_ok,
        format!(
            "A(0) = {:.12}, mean_1 = {:.4} ± {:.4}, mean_8 = {:.4} ± {:.4}",
            a.value, avg.mean_1, avg.stderr_1, avg.mean_n, avg.stderr_n
        ),
    )
}

fn c5_iterate_identity() -> Outcome {
    let f = zoo::double_shear(1.0, 1.0, RepresentationKind::ClosedForm);
    let samples = halton_seeds(100);
    let d2 = iterate_identity_check(&f, 2, [1, 0], &samples, 50).map_err(|e| e.to_string())?;
    let d3 = iterate_identity_check(&f, 3, [1, 1], &samples, 50).map_err(|e| e.to_string())?;
    let worst = d2.max(d3);
    check(
        worst <= 1e-12,
        format!("max deviation {worst:.3e} over q ∈ {{2, 3}} (tol 1e-12)"),
    )
}

fn c6_semiconjugacy() -> Outcome {
    let f = zoo::double_shear(1.0, 1.0, RepresentationKind::ClosedForm);
    let h = SinePerturbation { amplitude: 0.1 };
    let d1 = measured_displacement(&h, 512);
    let samples = halton_seeds(100);
    let mut detail = format!("d₁ = {d1:.6}");
    let mut ok = true;
    for n in [10, 100, 1000] {
        let rep = semiconjugacy_bound_check(&f, &h, d1, &samples, n).map_err(|e| e.to_string())?;
        ok &= rep.holds();
        detail += &format!(", n={n}: {:.3e} ≤ {:.3e}", rep.max_deviation, rep.bound);
    }
    check(ok, detail)
}

fn c7_rotation_set() -> Outcome {
    let f = zoo::double_shear(1.0, 1.0, RepresentationKind::ClosedForm);
    let coarse = estimate_rotation_set(&f, 128, 1_000).map_err(|e| e.to_string())?;
    let fine = estimate_rotation_set(&f, 256, 10_000).map_err(|e| e.to_string())?;
    let hd = coarse.hausdorff(&fine);
    let interior = coarse.margin(PlanePoint::ORIGIN).min(fine.margin(PlanePoint::ORIGIN));
    let triple = interior_rational_triple(&coarse, 8, 0.05).ok_or("no interior rational triple")?;
    let seeds = halton_seeds(40);
    let mut residual = 0.0_f64;
    let mut pts = Vec::new();
    for (p, pp, q) in triple {
        let rec =
            realize_rational_vector(&f, p, pp, q, &seeds, &NewtonOptions::default()).map_err(|e| e.to_string())?;
        residual = residual.max(rec.residual);
        pts.push(rec.rotation_vector());
    }
    let independent = (pts[1] - pts[0]).cross(pts[2] - pts[0]).abs() > 1e-12;
    check(
        hd < 0.1 && interior > 0.0 && residual < PERIODIC_RESIDUAL && independent,
        format!(
            "Hausdorff {hd:.4}, origin margin {interior:.4}, vectors {:?}, max residual {residual:.3e}",
            triple
        ),
    )
}

fn c8_chain_exactness() -> Outcome {
    let part = adler_weiss_partition([[2, 1], [1, 1]]).map_err(|e| e.to_string())?;
    let rel = transition_relation(&part);
    let mut r = rng(8);
    for k in 0..100 {
        let len = r.gen_range(1..=12);
        let chain = random_closed_chain(&rel, k % 2, len, &mut r).map_err(|e| e.to_string())?;
        if chain.first_invalid_step(&rel).is_some() {
            return Err(format!("chain {k} leaves the relation"));
        }
        let p = periodic_from_closed_chain(&part, &chain).map_err(|e| format!("chain {k}: {e}"))?;
        let itinerary = p
            .orbit
            .iter()
            .enumerate()
            .all(|(s, y)| part.rectangles[chain.nodes[s].id].contains(&y[0], &y[1]));
        if !p.is_periodic_mod_lattice(part.matrix) || !itinerary {
            return Err(format!("chain {k}: periodic point check failed"));
        }
    }
    Ok("100 closed chains of length 1..=12: A^p x − x ∈ ℤ² exactly, itineraries match".into())
}

fn c9_triangle_linking() -> Outcome {
    let iso = zoo::double_shear(1.0, 1.0, RepresentationKind::ClosedForm);
    let seeds = halton_seeds(40);
    let orbits = [[1, 0], [0, 1], [-1, -1]]
        .map(|v| realize_rational_vector(&iso, v[0], v[1], 1, &seeds, &NewtonOptions::default()));
    let [a, b, c] = orbits;
    let (a, b, c) = (
        a.map_err(|e| e.to_string())?,
        b.map_err(|e| e.to_string())?,
        c.map_err(|e| e.to_string())?,
    );
    let mut worst = 0.0_f64;
    for n in [1, 2, 4] {
        let (_, track) =
            assemble_loop_orbit(&iso, [&a, &b, &c], n, DEFAULT_ELL_BOUND, 16).map_err(|e| e.to_string())?;
        let [v0, v1, v2] = track.vertices;
        let l = triangle_linking_check(&track, (v0 + v1 + v2) * (1.0 / 3.0), 256).map_err(|e| e.to_string())?;
        worst = worst.max((l.abs() - 1.0 / track.period()).abs());
        let unit = TriangleTrack::new(
            [
                PlanePoint::ORIGIN,
                PlanePoint::new(n as f64, 0.0),
                PlanePoint::new(0.0, n as f64),
            ],
            [n as f64; 3],
        )
        .map_err(|e| e.to_string())?;
        let l = triangle_linking_check(&unit, PlanePoint::new(n as f64 / 3.0, n as f64 / 3.0), 64)
            .map_err(|e| e.to_string())?;
        worst = worst.max((l.abs() - 1.0 / unit.period()).abs());
    }
    check(
        worst <= 1e-9,
        format!("max | |linking| − 1/p_n | = {worst:.3e} for n ∈ {{1, 2, 4}} (tol 1e-9)"),
    )
}

/// Ten times the default lift density.
fn oracle_lift() -> LiftOptions {
    let base = LiftOptions::default();
    LiftOptions {
        samples_per_unit: base.samples_per_unit * 10,
        max_samples_per_unit: base.max_samples_per_unit * 10,
        ..base
    }
}

fn demo_margin(iso: &Isotopy, c: &WitnessCertificate) -> Result<f64, String> {
    if c.torsion_value == 0.0 || !c.holds() {
        return Err(format!(
            "certificate fails: torsion {} bound {}",
            c.torsion_value, c.bound
        ));
    }
    recheck(iso, c, &oracle_lift()).map_err(|e| e.to_string())
}

fn c10_end_to_end_demos() -> Outcome {
    let t1 = thm1_demo(&Thm1Options::default()).map_err(|e| format!("thm1: {e}"))?;
    let hi = HamiltonianIsotopy::new(HamiltonianProfile::Cubic, RepresentationKind::ClosedForm)
        .map_err(|e| e.to_string())?;
    let m1 = demo_margin(&hi.isotopy, &t1.result.certificate)?;
    let t2 = thm2_demo(&Thm2Options::default()).map_err(|e| format!("thm2: {e}"))?;
    let f = zoo::double_shear(1.0, 1.0, RepresentationKind::ClosedForm);
    let m2 = demo_margin(&f, &t2.certificate)?;
    let (c1, c2) = (&t1.result.certificate, &t2.certificate);
    check(
        m1 >= 0.0 && m2 >= 0.0,
        format!(
            "thm1 ε={:.4} torsion={:.4} bound={:.4}, 10× margin {m1:.3e}; thm2 ε={:.4} torsion={:.4} bound={:.4}, 10× margin {m2:.3e}",
            c1.epsilon, c1.torsion_value, c1.bound, c2.epsilon, c2.torsion_value, c2.bound
        ),
    )
}

/// Two points on a rotation, radii `ra` and `rb` apart by half a turn, and a
/// wobbled copy whose sup-distance to the original is `wobble`.
fn rotation_fixture(omega: f64, ra: f64, rb: f64, wobble: f64, t_end: f64) -> Result<[SampledCurve; 4], Error> {
    let samples = (100.0 * t_end) as usize;
    let a = move |t: f64| PlanePoint::from_turns(omega * t) * ra;
    let b = move |t: f64| PlanePoint::from_turns(omega * t + 0.5) * rb;
    let a2 = move |t: f64| a(t) + PlanePoint::from_turns(1.7 * t) * (wobble * (5.0 * t).sin().abs());
    let b2 = move |t: f64| b(t) + PlanePoint::from_turns(-2.3 * t) * (wobble * (3.0 * t).cos().abs());
    Ok([
        SampledCurve::from_fn(0.0, t_end, samples, a)?,
        SampledCurve::from_fn(0.0, t_end, samples, b)?,
        SampledCurve::from_fn(0.0, t_end, samples, a2)?,
        SampledCurve::from_fn(0.0, t_end, samples, b2)?,
    ])
}

fn c11_perturbation_bound() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    for t_end in [10.0, 100.0, 1000.0] {
        for (omega, ra, rb) in [(0.3, 0.2, 0.8), (-0.45, 0.5, 0.25), (0.05, 1.0, 1.0)] {
            // d = ra + rb; the premise allows perturbations up to d/2.
            let wobble = 0.49 * (ra + rb);
            let [a, b, a2, b2] = rotation_fixture(omega, ra, rb, wobble, t_end).map_err(|e| e.to_string())?;
            let rep = perturbation_bound_check(&a, &b, &a2, &b2, t_end).map_err(|e| e.to_string())?;
            if !rep.premise_ok {
                return Err(format!("fixture ω={omega} T={t_end}: premise not verified"));
            }
            worst = worst.max(rep.horizon_difference - 1.0 / (2.0 * t_end));
            count += 1;
        }
    }
    check(
        worst <= 0.0,
        format!("{count} fixtures, max (|ΔLinking_T| − 1/(2T)) = {worst:.3e}"),
    )
}

/// Id, name, check and time budget in seconds.
type Criterion = (u32, &'static str, fn() -> Outcome, u64);

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "xi-independence", c1_xi_independence, 30),
        (2, "rotation exactness", c2_rotation_exactness, 5),
        (3, "witness guarantee", c3_witness_guarantee, 120),
        (4, "action identities", c4_action_identities, 60),
        (5, "iterate identity", c5_iterate_identity, 10),
        (6, "semiconjugacy bound", c6_semiconjugacy, 30),
        (7, "rotation-set stability", c7_rotation_set, 300),
        (8, "chain exactness", c8_chain_exactness, 60),
        (9, "triangle linking", c9_triangle_linking, 10),
        (10, "end-to-end demos", c10_end_to_end_demos, 600),
        (11, "perturbation bound", c11_perturbation_bound, 10),
    ];
    let only: Option<u32> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (id, name, run, budget) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let in_budget = elapsed <= Duration::from_secs(budget);
        let (tag, detail) = match (&outcome, in_budget) {
            (Ok(d), true) => ("PASS", d.clone()),
            (Ok(d), false) => ("FAIL", format!("{d}; over budget")),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!(
            "{tag} criterion {id:>2} {name}: {detail} [{:.1} s / {budget} s]",
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
