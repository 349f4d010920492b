//! Radial Hamiltonian isotopies of the unit disc, symplectic action of their
//! fixed points, and the Monte-Carlo average of linking numbers with a fixed
//! point.
//!
//! With `H = h(r²)` the generating field is `X = 2h′(r²)·(−y, x)`, so a point
//! at radius `r` turns at `h′(r²)/π` turns per unit time, and the action of a
//! fixed point `x` of the whole isotopy is `−h(|x|²)`. Integrating the
//! angular speed against area gives `h(1) − h(0) = −h(0)` as well.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Mat2, PlanePoint};
use crate::lift::LiftOptions;
use crate::linking::linking_n;
use crate::maps::{ClosedFormFamily, Isotopy, SurfaceModel, VectorField};
use crate::torsion::{mean_and_stderr, sample_rng, PointSampler, UniformDisc};
use crate::zoo::RepresentationKind;

/// Radial profile `h(s)`, `s = r²`, as a sum of cubic bumps
/// `a·(1 − s/c)³` supported on `s < c ≤ 1`. Each bump and its first two
/// derivatives vanish at `s = c`, so `h(1) = h′(1) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum HamiltonianProfile {
    Zero,
    /// `h(s) = (1 − s)³`.
    Cubic,
    /// `Σ aᵢ (1 − s/cᵢ)³₊` from `(aᵢ, cᵢ)` pairs.
    Bumps(Vec<(f64, f64)>),
}

impl HamiltonianProfile {
    pub fn terms(&self) -> Vec<(f64, f64)> {
        match self {
            HamiltonianProfile::Zero => Vec::new(),
            HamiltonianProfile::Cubic => vec![(1.0, 1.0)],
            HamiltonianProfile::Bumps(v) => v.clone(),
        }
    }

    /// `λ·h`.
    pub fn scaled(&self, lambda: f64) -> Self {
        if lambda == 1.0 {
            return self.clone();
        }
        HamiltonianProfile::Bumps(self.terms().into_iter().map(|(a, c)| (lambda * a, c)).collect())
    }

    fn sum(&self, s: f64, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
        match self {
            HamiltonianProfile::Zero => 0.0,
            HamiltonianProfile::Cubic => f(1.0, 1.0, s),
            HamiltonianProfile::Bumps(v) => v.iter().filter(|&&(_, c)| s < c).map(|&(a, c)| f(a, c, s)).sum(),
        }
    }

    pub fn h(&self, s: f64) -> f64 {
        self.sum(s, |a, c, s| a * (1.0 - s / c).powi(3))
    }

    pub fn dh(&self, s: f64) -> f64 {
        self.sum(s, |a, c, s| -3.0 * a / c * (1.0 - s / c).powi(2))
    }

    pub fn d2h(&self, s: f64) -> f64 {
        self.sum(s, |a, c, s| 6.0 * a / (c * c) * (1.0 - s / c))
    }

    /// `H(p) = h(|p|²)`.
    pub fn hamiltonian(&self, p: PlanePoint) -> f64 {
        self.h(p.norm_sq())
    }

    /// Angular speed at radius `r`, in turns per unit time.
    pub fn angular_speed(&self, r: f64) -> f64 {
        self.dh(r * r) / PI
    }

    pub fn validate(&self) -> Result<()> {
        for (a, c) in self.terms() {
            if !(c > 0.0 && c <= 1.0) || !a.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "bump ({a}, {c}) needs finite amplitude and support 0 < c <= 1"
                )));
            }
        }
        if self.h(1.0).abs() > 1e-12 || self.dh(1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(
                "profile must vanish to first order at s = 1".into(),
            ));
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        match self {
            HamiltonianProfile::Zero => "zero".into(),
            HamiltonianProfile::Cubic => "cubic".into(),
            HamiltonianProfile::Bumps(v) => {
                let parts: Vec<String> = v.iter().map(|(a, c)| format!("{a}*(1-s/{c})^3")).collect();
                format!("bumps[{}]", parts.join(" + "))
            }
        }
    }
}

/// `f_u(p) = R(2u·h′(r²))·p`, the exact flow of the radial field.
#[derive(Debug)]
struct RadialTwist(HamiltonianProfile);

impl ClosedFormFamily for RadialTwist {
    fn eval(&self, u: f64, p: PlanePoint) -> PlanePoint {
        Mat2::rotation(2.0 * u * self.0.dh(p.norm_sq())) * p
    }

    fn jacobian(&self, u: f64, p: PlanePoint) -> Mat2 {
        let s = p.norm_sq();
        let rot = Mat2::rotation(2.0 * u * self.0.dh(s));
        let grad_theta = p * (4.0 * u * self.0.d2h(s));
        rot * (Mat2::IDENTITY + Mat2::outer(p.perp(), grad_theta))
    }
}

#[derive(Debug)]
struct RadialField(HamiltonianProfile);

impl VectorField for RadialField {
    fn velocity(&self, _u: f64, p: PlanePoint) -> PlanePoint {
        p.perp() * (2.0 * self.0.dh(p.norm_sq()))
    }

    fn gradient(&self, _u: f64, p: PlanePoint) -> Mat2 {
        let s = p.norm_sq();
        let j = Mat2::new(0.0, -1.0, 1.0, 0.0);
        j.scaled(2.0 * self.0.dh(s)) + Mat2::outer(p.perp(), p).scaled(4.0 * self.0.d2h(s))
    }
}

/// The isotopy generated by the radial profile on the unit disc.
pub fn hamiltonian_isotopy(profile: &HamiltonianProfile, repr: RepresentationKind) -> Result<Isotopy> {
    profile.validate()?;
    let label = format!("radial-hamiltonian({})", profile.describe());
    Ok(match repr {
        RepresentationKind::ClosedForm => {
            Isotopy::closed_form(SurfaceModel::Disc, RadialTwist(profile.clone()), true, label)
        }
        RepresentationKind::Flow => Isotopy::flow(SurfaceModel::Disc, RadialField(profile.clone()), true, label),
    })
}

/// A radial profile together with its isotopy.
#[derive(Debug, Clone)]
pub struct HamiltonianIsotopy {
    pub profile: HamiltonianProfile,
    pub isotopy: Isotopy,
}

impl HamiltonianIsotopy {
    pub fn new(profile: HamiltonianProfile, repr: RepresentationKind) -> Result<Self> {
        let isotopy = hamiltonian_isotopy(&profile, repr)?;
        Ok(Self { profile, isotopy })
    }
}

/// Primitive `λ` of the area form used for the loop term of the action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Primitive {
    /// `(x dy − y dx)/2`.
    Standard,
    /// `(x dy − y dx)/2 + d(k·sin(x)·y)`.
    Gauged(f64),
}

impl Primitive {
    pub fn describe(&self) -> String {
        match self {
            Primitive::Standard => "(x dy - y dx)/2".into(),
            Primitive::Gauged(k) => format!("(x dy - y dx)/2 + d({k} sin(x) y)"),
        }
    }

    /// `∫_γ λ` along a sampled closed or open path (trapezoid rule for the
    /// standard part, exact for the exact part).
    fn integrate(&self, path: &[PlanePoint]) -> f64 {
        let standard: f64 = path
            .windows(2)
            .map(|w| {
                let mid = (w[0] + w[1]) * 0.5;
                0.5 * mid.cross(w[1] - w[0])
            })
            .sum();
        let exact = match *self {
            Primitive::Standard => 0.0,
            Primitive::Gauged(k) => match (path.first(), path.last()) {
                (Some(a), Some(b)) => k * (b.x.sin() * b.y - a.x.sin() * a.y),
                _ => 0.0,
            },
        };
        standard + exact
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionValue {
    pub value: f64,
    pub primitive: String,
    /// `∫_{γ_x} λ` (zero for a constant loop).
    pub loop_integral: f64,
    /// `∫₀¹ H_t(f_t(x)) dt`.
    pub hamiltonian_integral: f64,
}

/// Displacement allowed for a point to count as fixed by the whole isotopy.
pub const FIXED_TOL: f64 = 1e-10;

/// Symplectic action `∫_{γ_x} λ − ∫₀¹ H_t(f_t(x)) dt` of a point fixed by the
/// whole isotopy.
pub fn symplectic_action(hi: &HamiltonianIsotopy, x: PlanePoint, primitive: Primitive) -> Result<ActionValue> {
    const LOOP_SAMPLES: usize = 256;
    let mut cursor = hi.isotopy.cursor(x);
    let mut path = Vec::with_capacity(LOOP_SAMPLES + 1);
    let mut displacement = 0.0_f64;
    for k in 0..=LOOP_SAMPLES {
        let p = cursor.at(k as f64 / LOOP_SAMPLES as f64)?.point;
        displacement = displacement.max(p.distance(x));
        path.push(p);
    }
    if displacement > FIXED_TOL {
        return Err(Error::NotFixed { displacement });
    }
    let loop_integral = primitive.integrate(&path);
    let iso = &hi.isotopy;
    let profile = &hi.profile;
    let integrand = |t: f64| iso.eval(t, x).map(|p| profile.hamiltonian(p)).unwrap_or(f64::NAN);
    let hamiltonian_integral = adaptive_simpson(integrand, 0.0, 1.0, 1e-10, 40);
    if !hamiltonian_integral.is_finite() {
        return Err(Error::IntegrationFailure {
            time: 0.0,
            reason: "Hamiltonian quadrature produced a non-finite value".into(),
        });
    }
    Ok(ActionValue {
        value: loop_integral - hamiltonian_integral,
        primitive: primitive.describe(),
        loop_integral,
        hamiltonian_integral,
    })
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(&f, a, b, fa, fm, fb, whole, tol, max_depth)
}

/// `∫_D Linking(I, 0, x) dω(x) = ∫₀¹ 2r h′(r²) dr` by quadrature.
pub fn radial_linking_integral(profile: &HamiltonianProfile) -> f64 {
    adaptive_simpson(|r| 2.0 * r * profile.dh(r * r), 0.0, 1.0, 1e-12, 40)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AverageLinking {
    /// Estimate of `∫ Linking_n(I, x₀, x) dω(x)` over the unit disc (mass π).
    pub mean_n: f64,
    pub stderr_n: f64,
    /// Estimate of `∫ Linking_1(I, x₀, x) dω(x)`.
    pub mean_1: f64,
    pub stderr_1: f64,
    pub n: u32,
    pub samples: usize,
    /// Draws rejected because they coincided with `x₀`.
    pub resampled: usize,
}

/// Monte-Carlo area integrals of `Linking_n(I, x₀, ·)` and `Linking_1(I, x₀, ·)`
/// over the unit disc.
pub fn average_linking(
    iso: &Isotopy,
    x0: PlanePoint,
    n: u32,
    samples: usize,
    seed: u64,
    opts: &LiftOptions,
) -> Result<AverageLinking> {
    if samples < 100 {
        return Err(Error::InvalidArgument(
            "average_linking needs at least 100 samples".into(),
        ));
    }
    let disc = UniformDisc { radius: 1.0 };
    let rows: Vec<(f64, f64, usize)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let mut rejected = 0usize;
            loop {
                let y = disc.sample(&mut rng);
                let attempt = linking_n(iso, x0, y, n, opts).and_then(|ln| Ok((ln, linking_n(iso, x0, y, 1, opts)?)));
                match attempt {
                    Ok((ln, l1)) => return Ok((ln, l1, rejected)),
                    Err(Error::Collision { .. }) if rejected < 1000 => rejected += 1,
                    Err(e) => return Err(e),
                }
            }
        })
        .collect::<Result<_>>()?;
    let ln: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let l1: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let (mn, sn) = mean_and_stderr(&ln);
    let (m1, s1) = mean_and_stderr(&l1);
    let mass = disc.mass();
    Ok(AverageLinking {
        mean_n: mass * mn,
        stderr_n: mass * sn,
        mean_1: mass * m1,
        stderr_1: mass * s1,
        n,
        samples,
        resampled: rows.iter().map(|r| r.2).sum(),
    })
}

/// Points fixed by the whole isotopy of a radial profile: the origin and one
/// point on each circle where `h′` vanishes.
pub fn radial_fixed_candidates(profile: &HamiltonianProfile) -> Vec<PlanePoint> {
    const GRID: usize = 4096;
    let mut out = vec![PlanePoint::ORIGIN];
    let s_of = |k: usize| k as f64 / GRID as f64;
    let mut k = 1;
    while k < GRID {
        let (s0, s1) = (s_of(k), s_of(k + 1));
        let (d0, d1) = (profile.dh(s0), profile.dh(s1));
        if d0 == 0.0 {
            // A flat stretch: take its midpoint and skip to its end.
            let mut j = k;
            while j < GRID && profile.dh(s_of(j + 1)) == 0.0 {
                j += 1;
            }
            let mid = 0.5 * (s0 + s_of(j.min(GRID - 1)));
            if mid < 1.0 {
                out.push(PlanePoint::new(mid.sqrt(), 0.0));
            }
            k = j + 1;
            continue;
        }
        if d0 * d1 < 0.0 {
            let (mut lo, mut hi) = (s0, s1);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if profile.dh(lo) * profile.dh(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo < 1e-16 {
                    break;
                }
            }
            out.push(PlanePoint::new((0.5 * (lo + hi)).sqrt(), 0.0));
        }
        k += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionCandidate {
    pub point: PlanePoint,
    pub action: ActionValue,
}

/// The candidate with the largest `|A|` (first one on ties); fails when that
/// is below `tol`.
pub fn find_nonzero_action_fixed_point(
    hi: &HamiltonianIsotopy,
    candidates: &[PlanePoint],
    tol: f64,
) -> Result<ActionCandidate> {
    let mut best: Option<ActionCandidate> = None;
    for &p in candidates {
        let action = symplectic_action(hi, p, Primitive::Standard)?;
        if best.as_ref().is_none_or(|b| action.value.abs() > b.action.value.abs()) {
            best = Some(ActionCandidate { point: p, action });
        }
    }
    match best {
        Some(b) if b.action.value.abs() >= tol => Ok(b),
        _ => Err(Error::NoCandidateAboveTol { tol }),
    }
}
