//! Rotation vectors of torus maps in the universal cover, sampled rotation
//! sets, and periodic orbits realizing rational rotation vectors.
//!
//! The rotation-set polygon is a sampled proxy: the convex hull of finitely
//! many finite-time displacement averages. It is not a certified enclosure.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::export::SvgCanvas;
use crate::geometry::{
    containment_margin, convex_hull, hausdorff_distance, is_convex_ccw, polygon_area, Mat2, PlanePoint,
};
use crate::maps::Isotopy;

/// Metadata line attached to every exported rotation-set polygon.
pub const SAMPLED_PROXY_NOTE: &str =
    "sampled outer proxy: convex hull of finite-time rotation vectors on a grid, not a certified set";

/// A lift `f̃: ℝ² → ℝ²` of a torus map.
pub trait LiftedMap: Sync {
    fn apply(&self, z: PlanePoint) -> Result<PlanePoint>;

    fn apply_with_jacobian(&self, z: PlanePoint) -> Result<(PlanePoint, Mat2)>;

    /// `f̃ⁿ(z)`.
    fn iterate(&self, z: PlanePoint, n: u64) -> Result<PlanePoint> {
        let mut w = z;
        for _ in 0..n {
            w = self.apply(w)?;
        }
        Ok(w)
    }

    /// `(f̃ⁿ(z), Df̃ⁿ(z))`.
    fn iterate_with_jacobian(&self, z: PlanePoint, n: u64) -> Result<(PlanePoint, Mat2)> {
        let mut w = z;
        let mut d = Mat2::IDENTITY;
        for _ in 0..n {
            let (w2, j) = self.apply_with_jacobian(w)?;
            w = w2;
            d = j * d;
        }
        Ok((w, d))
    }
}

/// The time-1 map of an isotopy, evaluated in cover coordinates.
impl LiftedMap for Isotopy {
    fn apply(&self, z: PlanePoint) -> Result<PlanePoint> {
        self.eval(1.0, z)
    }

    fn apply_with_jacobian(&self, z: PlanePoint) -> Result<(PlanePoint, Mat2)> {
        let jet = self.jet(1.0, z)?;
        Ok((jet.point, jet.derivative))
    }

    fn iterate(&self, z: PlanePoint, n: u64) -> Result<PlanePoint> {
        self.eval(n as f64, z)
    }

    fn iterate_with_jacobian(&self, z: PlanePoint, n: u64) -> Result<(PlanePoint, Mat2)> {
        let jet = self.jet(n as f64, z)?;
        Ok((jet.point, jet.derivative))
    }
}

/// `ρ_n(f̃, z) = (f̃ⁿ(z) − z)/n`.
pub fn rho_n<F: LiftedMap + ?Sized>(f: &F, z: PlanePoint, n: u64) -> Result<PlanePoint> {
    if n == 0 {
        return Err(Error::InvalidArgument("horizon n must be >= 1".into()));
    }
    Ok((f.iterate(z, n)? - z) * (1.0 / n as f64))
}

/// Base points `(i/N, j/N)`, row by row.
pub fn grid_points(grid: usize) -> Vec<PlanePoint> {
    let g = grid as f64;
    (0..grid)
        .flat_map(|j| (0..grid).map(move |i| PlanePoint::new(i as f64 / g, j as f64 / g)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotationSetApprox {
    /// Counterclockwise hull vertices (one or two for degenerate clouds).
    pub vertices: Vec<PlanePoint>,
    pub n: u64,
    pub grid: usize,
    pub samples: usize,
    /// Largest single-step displacement `|f̃(w) − w|` seen along the orbits.
    pub max_step: f64,
    pub note: &'static str,
}

impl RotationSetApprox {
    pub fn area(&self) -> f64 {
        polygon_area(&self.vertices)
    }

    /// Signed distance of `p` to the polygon boundary (positive inside).
    pub fn margin(&self, p: PlanePoint) -> f64 {
        containment_margin(p, &self.vertices)
    }

    pub fn is_convex(&self) -> bool {
        is_convex_ccw(&self.vertices)
    }

    pub fn hausdorff(&self, other: &RotationSetApprox) -> f64 {
        hausdorff_distance(&self.vertices, &other.vertices)
    }

    /// CSV vertex list with columns `x, y`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            x: f64,
            y: f64,
        }
        let rows: Vec<Row> = self.vertices.iter().map(|v| Row { x: v.x, y: v.y }).collect();
        crate::export::write_csv(out, &rows)
    }

    /// SVG of the polygon over the sampled cloud.
    pub fn to_svg(&self, cloud: &[PlanePoint]) -> String {
        let mut all = cloud.to_vec();
        all.extend_from_slice(&self.vertices);
        let mut canvas = SvgCanvas::fitted(&all, 480.0);
        canvas.points(cloud, 1.0, "gray");
        canvas.polygon(&self.vertices, "steelblue", "navy");
        canvas.finish(&format!(
            "rotation set, grid {0}x{0}, n = {1}; {2}",
            self.grid, self.n, self.note
        ))
    }
}

/// Sampled rotation vectors at horizons `n` and `2n` along the same orbits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotationSamples {
    pub rho_n: Vec<PlanePoint>,
    pub rho_2n: Vec<PlanePoint>,
    pub max_step: f64,
}

/// `ρ_n` (and optionally `ρ_{2n}`) for each base point, stepping one iterate
/// at a time.
pub fn sample_rotation_vectors<F: LiftedMap + ?Sized>(
    f: &F,
    points: &[PlanePoint],
    n: u64,
    with_double: bool,
) -> Result<RotationSamples> {
    if n == 0 {
        return Err(Error::InvalidArgument("horizon n must be >= 1".into()));
    }
    let horizon = if with_double { 2 * n } else { n };
    let rows: Vec<(PlanePoint, PlanePoint, f64)> = points
        .par_iter()
        .map(|&z| {
            let mut w = z;
            let mut at_n = z;
            let mut max_step = 0.0_f64;
            for k in 1..=horizon {
                let next = f.apply(w)?;
                max_step = max_step.max(next.distance(w));
                w = next;
                if k == n {
                    at_n = w;
                }
            }
            Ok((
                (at_n - z) * (1.0 / n as f64),
                (w - z) * (1.0 / horizon as f64),
                max_step,
            ))
        })
        .collect::<Result<_>>()?;
    Ok(RotationSamples {
        rho_n: rows.iter().map(|r| r.0).collect(),
        rho_2n: if with_double {
            rows.iter().map(|r| r.1).collect()
        } else {
            Vec::new()
        },
        max_step: rows.iter().map(|r| r.2).fold(0.0, f64::max),
    })
}

/// Convex hull of `ρ_n` over the `N × N` grid of base points in `[0, 1)²`.
pub fn estimate_rotation_set<F: LiftedMap + ?Sized>(f: &F, grid: usize, n: u64) -> Result<RotationSetApprox> {
    Ok(estimate_with_cloud(f, grid, n)?.0)
}

/// As [`estimate_rotation_set`], also returning the sampled cloud.
pub fn estimate_with_cloud<F: LiftedMap + ?Sized>(
    f: &F,
    grid: usize,
    n: u64,
) -> Result<(RotationSetApprox, Vec<PlanePoint>)> {
    if grid < 2 {
        return Err(Error::InvalidArgument("grid must be at least 2".into()));
    }
    let points = grid_points(grid);
    let s = sample_rotation_vectors(f, &points, n, false)?;
    let approx = RotationSetApprox {
        vertices: convex_hull(&s.rho_n),
        n,
        grid,
        samples: points.len(),
        max_step: s.max_step,
        note: SAMPLED_PROXY_NOTE,
    };
    Ok((approx, s.rho_n))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NestedDiagnostic {
    pub at_n: RotationSetApprox,
    pub at_2n: RotationSetApprox,
    /// `2·max_step/n`.
    pub inflation: f64,
    /// Largest distance from a vertex of the `2n` hull to the `n` hull.
    pub excess: f64,
    pub nested: bool,
}

/// Check `hull(2n) ⊆ hull(n) ⊕ ball(2·max_step/n)` on the same orbits.
pub fn nested_diagnostic<F: LiftedMap + ?Sized>(f: &F, grid: usize, n: u64) -> Result<NestedDiagnostic> {
    let points = grid_points(grid);
    let s = sample_rotation_vectors(f, &points, n, true)?;
    let make = |cloud: &[PlanePoint], horizon: u64| RotationSetApprox {
        vertices: convex_hull(cloud),
        n: horizon,
        grid,
        samples: points.len(),
        max_step: s.max_step,
        note: SAMPLED_PROXY_NOTE,
    };
    let at_n = make(&s.rho_n, n);
    let at_2n = make(&s.rho_2n, 2 * n);
    let inflation = 2.0 * s.max_step / n as f64;
    let excess = at_2n
        .vertices
        .iter()
        .map(|&v| (-containment_margin(v, &at_n.vertices)).max(0.0))
        .fold(0.0, f64::max);
    Ok(NestedDiagnostic {
        nested: excess <= inflation + 1e-12,
        at_n,
        at_2n,
        inflation,
        excess,
    })
}

/// `f̃^q(z) = z + v` with `residual = ‖f̃^q(z) − z − v‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodicOrbitRecord {
    pub z: PlanePoint,
    pub q: u32,
    pub v: [i64; 2],
    pub residual: f64,
}

impl PeriodicOrbitRecord {
    /// `(p/q, p′/q)`.
    pub fn rotation_vector(&self) -> PlanePoint {
        PlanePoint::new(self.v[0] as f64 / self.q as f64, self.v[1] as f64 / self.q as f64)
    }
}

/// Residual threshold for accepting a periodic point.
pub const PERIODIC_RESIDUAL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub max_iterations: u32,
    pub seeds: usize,
    pub residual: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iterations: 60,
            seeds: 40,
            residual: PERIODIC_RESIDUAL,
        }
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// First `count` points of the Halton sequence in bases 2 and 3.
pub fn halton_seeds(count: usize) -> Vec<PlanePoint> {
    (1..=count as u64)
        .map(|i| PlanePoint::new(radical_inverse(i, 2), radical_inverse(i, 3)))
        .collect()
}

/// Damped Newton search for `f̃^q(z) = z + (p, p′)` from each seed in turn.
/// Failure only means the budget ran out.
pub fn realize_rational_vector<F: LiftedMap + ?Sized>(
    f: &F,
    p: i64,
    p_prime: i64,
    q: u32,
    seeds: &[PlanePoint],
    opts: &NewtonOptions,
) -> Result<PeriodicOrbitRecord> {
    if q == 0 {
        return Err(Error::InvalidArgument("period q must be >= 1".into()));
    }
    let v = PlanePoint::new(p as f64, p_prime as f64);
    let residual_at = |z: PlanePoint| -> Result<(PlanePoint, Mat2)> {
        let (w, d) = f.iterate_with_jacobian(z, q as u64)?;
        Ok((w - z - v, d - Mat2::IDENTITY))
    };
    for &seed in seeds {
        let Ok(mut state) = residual_at(seed) else {
            continue;
        };
        let mut z = seed;
        for _ in 0..opts.max_iterations {
            let norm = state.0.norm();
            if norm < opts.residual {
                break;
            }
            let Some(inv) = state.1.inverse() else {
                break;
            };
            let delta = -(inv * state.0);
            let mut lambda = 1.0;
            let mut improved = None;
            while lambda > 1e-12 {
                let cand = z + delta * lambda;
                if let Ok(s) = residual_at(cand) {
                    if s.0.norm() < norm {
                        improved = Some((cand, s));
                        break;
                    }
                }
                lambda *= 0.5;
            }
            match improved {
                Some((cand, s)) => {
                    z = cand;
                    state = s;
                }
                None => break,
            }
        }
        if state.0.norm() < opts.residual {
            // Report the representative in [0, 1)² when that keeps the residual.
            let reduced = PlanePoint::new(z.x - z.x.floor(), z.y - z.y.floor());
            let (z, residual) = match residual_at(reduced) {
                Ok(s) if s.0.norm() < opts.residual => (reduced, s.0.norm()),
                _ => (z, state.0.norm()),
            };
            return Ok(PeriodicOrbitRecord {
                z,
                q,
                v: [p, p_prime],
                residual,
            });
        }
    }
    Err(Error::RealizationNotFound { p, p_prime, q })
}

/// A homeomorphism of the cover commuting with integer translations.
pub trait CoverHomeomorphism: Sync {
    fn apply(&self, z: PlanePoint) -> PlanePoint;

    fn inverse(&self, w: PlanePoint) -> Result<PlanePoint>;
}

/// `h(x, y) = (x + a·sin 2πy, y + a·sin 2πx)`, invertible for `|a| < 1/(2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinePerturbation {
    pub amplitude: f64,
}

impl CoverHomeomorphism for SinePerturbation {
    fn apply(&self, z: PlanePoint) -> PlanePoint {
        let a = self.amplitude;
        PlanePoint::new(z.x + a * (TAU * z.y).sin(), z.y + a * (TAU * z.x).sin())
    }

    fn inverse(&self, w: PlanePoint) -> Result<PlanePoint> {
        let a = self.amplitude;
        let mut z = w;
        for _ in 0..100 {
            let g = self.apply(z) - w;
            if g.max_abs() < 1e-15 {
                return Ok(z);
            }
            let j = Mat2::new(1.0, a * TAU * (TAU * z.y).cos(), a * TAU * (TAU * z.x).cos(), 1.0);
            let inv = j.inverse().ok_or(Error::InversionFailure { x: w.x, y: w.y })?;
            z -= inv * g;
        }
        if (self.apply(z) - w).norm() < 1e-12 {
            Ok(z)
        } else {
            Err(Error::InversionFailure { x: w.x, y: w.y })
        }
    }
}

/// `h(z) = z + v` for an integer vector `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegerShift(pub [i64; 2]);

impl CoverHomeomorphism for IntegerShift {
    fn apply(&self, z: PlanePoint) -> PlanePoint {
        z + PlanePoint::new(self.0[0] as f64, self.0[1] as f64)
    }

    fn inverse(&self, w: PlanePoint) -> Result<PlanePoint> {
        Ok(w - PlanePoint::new(self.0[0] as f64, self.0[1] as f64))
    }
}

/// `sup ‖h − Id‖` measured on a `grid × grid` lattice of `[0, 1)²`.
pub fn measured_displacement<H: CoverHomeomorphism + ?Sized>(h: &H, grid: usize) -> f64 {
    grid_points(grid)
        .into_iter()
        .map(|z| h.apply(z).distance(z))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemiconjugacyReport {
    pub d1: f64,
    pub n: u64,
    /// `max ‖ρ_n(φ̃, h̃(z)) − ρ_n(f̃, z)‖` over the samples.
    pub max_deviation: f64,
    /// `2·d₁/n`.
    pub bound: f64,
    /// `max ‖h̃⁻¹(h̃(z)) − z‖`.
    pub inversion_error: f64,
}

impl SemiconjugacyReport {
    pub fn holds(&self) -> bool {
        self.max_deviation <= self.bound + 1e-9
    }
}

/// Compare rotation vectors of `f̃` and `φ̃ = h̃ ∘ f̃ ∘ h̃⁻¹`.
///
/// `φ̃ⁿ(h̃(z))` is evaluated as `h̃(f̃ⁿ(z))`: composing `φ̃` step by step would
/// amplify the inversion error exponentially on chaotic orbits.
pub fn semiconjugacy_bound_check<F: LiftedMap + ?Sized, H: CoverHomeomorphism + ?Sized>(
    f: &F,
    h: &H,
    d1: f64,
    samples: &[PlanePoint],
    n: u64,
) -> Result<SemiconjugacyReport> {
    let rows: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|&z| {
            let w = h.apply(z);
            let back = h.inverse(w)?;
            let fz = f.iterate(z, n)?;
            let rho_f = (fz - z) * (1.0 / n as f64);
            let rho_phi = (h.apply(fz) - w) * (1.0 / n as f64);
            Ok(((rho_phi - rho_f).norm(), back.distance(z)))
        })
        .collect::<Result<_>>()?;
    Ok(SemiconjugacyReport {
        d1,
        n,
        max_deviation: rows.iter().map(|r| r.0).fold(0.0, f64::max),
        bound: 2.0 * d1 / n as f64,
        inversion_error: rows.iter().map(|r| r.1).fold(0.0, f64::max),
    })
}

/// `max ‖ρ_n(g̃, z) − (q·ρ_{qn}(f̃, z) − v)‖` with `g̃ = f̃^q − v` built as an
/// iterate-extension wrapper.
pub fn iterate_identity_check(f: &Isotopy, q: u32, v: [i64; 2], samples: &[PlanePoint], n: u64) -> Result<f64> {
    let g = f.iterate_extension(q, v)?;
    let shift = PlanePoint::new(v[0] as f64, v[1] as f64);
    let devs: Vec<f64> = samples
        .par_iter()
        .map(|&z| {
            let lhs = rho_n(&g, z, n)?;
            let rhs = rho_n(f, z, q as u64 * n)? * q as f64 - shift;
            Ok((lhs - rhs).norm())
        })
        .collect::<Result<_>>()?;
    Ok(devs.into_iter().fold(0.0, f64::max))
}

/// Three affinely independent rationals with denominator ≤ `max_den`, each at
/// least `margin` inside the polygon. Smaller denominators are preferred;
/// among those, the triple spanning the largest triangle.
pub fn interior_rational_triple(approx: &RotationSetApprox, max_den: u32, margin: f64) -> Option<[(i64, i64, u32); 3]> {
    let (lo, hi) = approx.vertices.iter().fold(
        (
            PlanePoint::new(f64::INFINITY, f64::INFINITY),
            PlanePoint::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        ),
        |(lo, hi), v| {
            (
                PlanePoint::new(lo.x.min(v.x), lo.y.min(v.y)),
                PlanePoint::new(hi.x.max(v.x), hi.y.max(v.y)),
            )
        },
    );
    if approx.vertices.len() < 3 {
        return None;
    }
    let mut candidates: Vec<(i64, i64, u32)> = Vec::new();
    for d in 1..=max_den {
        let df = d as f64;
        for a in (lo.x * df).floor() as i64..=(hi.x * df).ceil() as i64 {
            for b in (lo.y * df).floor() as i64..=(hi.y * df).ceil() as i64 {
                if num_integer::gcd(num_integer::gcd(a, b), d as i64) != 1 {
                    continue;
                }
                let p = PlanePoint::new(a as f64 / df, b as f64 / df);
                if approx.margin(p) >= margin {
                    candidates.push((a, b, d));
                }
            }
        }
        let pts: Vec<PlanePoint> = candidates
            .iter()
            .map(|&(a, b, d)| PlanePoint::new(a as f64 / d as f64, b as f64 / d as f64))
            .collect();
        let hull = convex_hull(&pts);
        if hull.len() < 3 {
            continue;
        }
        let mut best: Option<(f64, [PlanePoint; 3])> = None;
        for i in 0..hull.len() {
            for j in i + 1..hull.len() {
                for k in j + 1..hull.len() {
                    let area = (hull[j] - hull[i]).cross(hull[k] - hull[i]).abs();
                    if best.is_none_or(|(b, _)| area > b + 1e-12) {
                        best = Some((area, [hull[i], hull[j], hull[k]]));
                    }
                }
            }
        }
        let (_, tri) = best?;
        let lookup = |p: PlanePoint| {
            candidates
                .iter()
                .copied()
                .find(|&(a, b, d)| PlanePoint::new(a as f64 / d as f64, b as f64 / d as f64) == p)
                .expect("hull vertices come from the candidates")
        };
        return Some([lookup(tri[0]), lookup(tri[1]), lookup(tri[2])]);
    }
    None
}
