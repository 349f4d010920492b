//! From two orbits with nonzero linking to a tangent vector with large
//! torsion: `|Torsion_n(z, ξ)| ≥ |Linking_n(x, y)|/3 − 1/n` for a point `z` on
//! the segment `[x, y]` and `ξ` its direction.
//!
//! Write `σ = sign ε`, `τ₀ = Torsion_n(x, ξ)` and `z(s) = (1−s)x + sy`. The
//! lifted direction from `f_n(x)` to `f_n(z(s))`, continued at `s = 0` by the
//! direction of `Df_n(x)·ξ`, moves by `D(s) = σ·n·(Linking_n(x, z(s)) − τ₀)`
//! relative to `s = 0`, and `D(1) > 2n|ε|/3` whenever `στ₀ < |ε|/3`. The
//! witness is the first `s₀` where `D` reaches `2n|ε|/3`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::PlanePoint;
use crate::lift::LiftOptions;
use crate::linking::linking_n;
use crate::maps::Isotopy;
use crate::torsion::torsion_n;

/// Slack allowed when checking the bound.
pub const BOUND_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessCertificate {
    pub x: PlanePoint,
    pub y: PlanePoint,
    /// `z(s₀)`.
    pub z: PlanePoint,
    pub s0: f64,
    /// Unit vector along `y − x`.
    pub xi: PlanePoint,
    /// `Linking_n(x, y)`.
    pub epsilon: f64,
    /// `Torsion_n(z, ξ)`.
    pub torsion_value: f64,
    pub n: u32,
    /// `|ε|/3 − 1/n`.
    pub bound: f64,
    /// `ε` and the torsion recomputed at twice the lift density.
    pub recheck_epsilon: f64,
    pub recheck_torsion: f64,
}

impl WitnessCertificate {
    /// `|torsion| ≥ |ε|/3 − 1/n − slack`, for the stored and the rechecked
    /// values.
    pub fn holds(&self) -> bool {
        let ok = |eps: f64, tor: f64| tor.abs() >= eps.abs() / 3.0 - 1.0 / self.n as f64 - BOUND_SLACK;
        ok(self.epsilon, self.torsion_value) && ok(self.recheck_epsilon, self.recheck_torsion)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessOptions {
    /// Refuse pairs with `|ε|` below this.
    pub eps_min: f64,
    /// Initial number of grid intervals on `(0, 1]`.
    pub grid: usize,
    /// Bisection stops once the bracket is shorter than this.
    pub bisection_tol: f64,
    /// Tenfold grid refinements tried when a located `s₀` fails the bound.
    pub max_refinements: u32,
    pub lift: LiftOptions,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        Self {
            eps_min: 1e-3,
            grid: 1000,
            bisection_tol: 1e-9,
            max_refinements: 2,
            lift: LiftOptions::default(),
        }
    }
}

/// First grid point of the `s`-scan; `s = 0` itself is handled analytically.
pub const FIRST_S: f64 = 1e-6;

struct Search<'a> {
    iso: &'a Isotopy,
    x: PlanePoint,
    y: PlanePoint,
    n: u32,
    sigma: f64,
    tau0: f64,
    lift: LiftOptions,
}

impl Search<'_> {
    fn z(&self, s: f64) -> PlanePoint {
        self.x * (1.0 - s) + self.y * s
    }

    fn d(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            return Ok(0.0);
        }
        let l = linking_n(self.iso, self.x, self.z(s), self.n, &self.lift)?;
        Ok(self.sigma * self.n as f64 * (l - self.tau0))
    }
}

/// Locate a witness for the pair `(x, y)` at horizon `n`.
pub fn find_witness(
    iso: &Isotopy,
    x: PlanePoint,
    y: PlanePoint,
    n: u32,
    opts: &WitnessOptions,
) -> Result<WitnessCertificate> {
    if x == y {
        return Err(Error::InvalidArgument("witness needs two distinct points".into()));
    }
    let epsilon = linking_n(iso, x, y, n, &opts.lift)?;
    if epsilon.abs() < opts.eps_min {
        return Err(Error::ZeroLinking {
            epsilon,
            threshold: opts.eps_min,
        });
    }
    let sigma = epsilon.signum();
    let xi = (y - x).normalized();
    let tau0 = torsion_n(iso, x, xi, n, &opts.lift)?;
    let bound = epsilon.abs() / 3.0 - 1.0 / n as f64;
    let finish = |s0: f64, z: PlanePoint, torsion_value: f64| -> Result<WitnessCertificate> {
        let fine = opts.lift.doubled();
        let cert = WitnessCertificate {
            x,
            y,
            z,
            s0,
            xi,
            epsilon,
            torsion_value,
            n,
            bound,
            recheck_epsilon: linking_n(iso, x, y, n, &fine)?,
            recheck_torsion: torsion_n(iso, z, xi, n, &fine)?,
        };
        if cert.holds() {
            Ok(cert)
        } else {
            Err(Error::VerificationFailure(format!(
                "witness at s0 = {s0} fails the bound after recomputation at doubled density"
            )))
        }
    };

    if sigma * tau0 >= epsilon.abs() / 3.0 {
        return finish(0.0, x, tau0);
    }

    let search = Search {
        iso,
        x,
        y,
        n,
        sigma,
        tau0,
        lift: opts.lift,
    };
    let target = 2.0 * n as f64 * epsilon.abs() / 3.0;
    let mut grid = opts.grid.max(1);
    let mut total_points = 0usize;
    for _ in 0..=opts.max_refinements {
        total_points += grid + 1;
        let (lo, hi) = first_crossing(&search, grid, target)?;
        let s0 = bisect(&search, lo, hi, target, opts.bisection_tol)?;
        let z = search.z(s0);
        let torsion_value = torsion_n(iso, z, xi, n, &opts.lift)?;
        if sigma * torsion_value >= bound - BOUND_SLACK {
            return finish(s0, z, torsion_value);
        }
        grid *= 10;
    }
    Err(Error::S0NotFound {
        grid_points: total_points,
    })
}

/// Bracket `(lo, hi)` with `D(lo) < target ≤ D(hi)` around the first grid
/// crossing.
fn first_crossing(search: &Search<'_>, grid: usize, target: f64) -> Result<(f64, f64)> {
    let mut prev = 0.0;
    let points = std::iter::once(FIRST_S).chain((1..=grid).map(|k| k as f64 / grid as f64));
    for s in points {
        match search.d(s) {
            Ok(v) if v >= target => return Ok((prev, s)),
            Ok(_) => prev = s,
            // Orbits this close can numerically merge; skip the probe.
            Err(Error::Collision { .. }) if s == FIRST_S => {}
            Err(e) => return Err(e),
        }
    }
    Err(Error::S0NotFound { grid_points: grid + 1 })
}

fn bisect(search: &Search<'_>, mut lo: f64, mut hi: f64, target: f64, tol: f64) -> Result<f64> {
    while hi - lo >= tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match search.d(mid) {
            Ok(v) if v >= target => hi = mid,
            Ok(_) => lo = mid,
            Err(Error::Collision { .. }) => lo = mid,
            Err(e) => return Err(e),
        }
    }
    Ok(hi)
}

/// `D(s) = σ·n·(Linking_n(x, z(s)) − τ₀)` at each `s`, for diagnostics and
/// the minimality check.
pub fn displacement_profile(
    iso: &Isotopy,
    x: PlanePoint,
    y: PlanePoint,
    n: u32,
    s_values: &[f64],
    lift: &LiftOptions,
) -> Result<Vec<f64>> {
    let epsilon = linking_n(iso, x, y, n, lift)?;
    let xi = (y - x).normalized();
    let search = Search {
        iso,
        x,
        y,
        n,
        sigma: if epsilon < 0.0 { -1.0 } else { 1.0 },
        tau0: torsion_n(iso, x, xi, n, lift)?,
        lift: *lift,
    };
    s_values.iter().map(|&s| search.d(s)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineResult {
    pub certificate: WitnessCertificate,
    /// Index of the chosen pair.
    pub chosen: usize,
    /// `Linking_n` per pair; `None` where it could not be computed.
    pub linkings: Vec<Option<f64>>,
}

/// Evaluate `Linking_n` on every pair and build a witness from the pair with
/// the largest `|Linking_n|` (first such pair on ties).
pub fn existence_pipeline(
    iso: &Isotopy,
    pairs: &[(PlanePoint, PlanePoint)],
    n: u32,
    opts: &WitnessOptions,
) -> Result<PipelineResult> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no candidate pairs".into()));
    }
    let linkings: Vec<Option<f64>> = pairs
        .par_iter()
        .map(|&(x, y)| linking_n(iso, x, y, n, &opts.lift).ok())
        .collect();
    let mut chosen: Option<(usize, f64)> = None;
    for (i, l) in linkings.iter().enumerate() {
        if let Some(l) = *l {
            if chosen.is_none_or(|(_, best)| l.abs() > best) {
                chosen = Some((i, l.abs()));
            }
        }
    }
    match chosen {
        Some((i, best)) if best >= opts.eps_min => {
            let (x, y) = pairs[i];
            let certificate = find_witness(iso, x, y, n, opts)?;
            Ok(PipelineResult {
                certificate,
                chosen: i,
                linkings,
            })
        }
        _ => Err(Error::AllPairsZeroLinking {
            threshold: opts.eps_min,
        }),
    }
}

/// CSV row: `xx, xy, yx, yy, n, epsilon, s0, zx, zy, torsion, bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessRow {
    pub xx: f64,
    pub xy: f64,
    pub yx: f64,
    pub yy: f64,
    pub n: u32,
    pub epsilon: f64,
    pub s0: f64,
    pub zx: f64,
    pub zy: f64,
    pub torsion: f64,
    pub bound: f64,
}

impl From<&WitnessCertificate> for WitnessRow {
    fn from(c: &WitnessCertificate) -> Self {
        Self {
            xx: c.x.x,
            xy: c.x.y,
            yx: c.y.x,
            yy: c.y.y,
            n: c.n,
            epsilon: c.epsilon,
            s0: c.s0,
            zx: c.z.x,
            zy: c.z.y,
            torsion: c.torsion_value,
            bound: c.bound,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    #[test]
    fn rotation_gives_trivial_witness() {
        let iso = zoo::rotation(PlanePoint::ORIGIN, 0.3);
        let c = find_witness(
            &iso,
            PlanePoint::ORIGIN,
            PlanePoint::new(1.0, 0.0),
            10,
            &WitnessOptions::default(),
        )
        .unwrap();
        assert_eq!(c.s0, 0.0);
        assert!((c.torsion_value - 0.3).abs() < 1e-12);
        assert!(c.bound.abs() < 1e-12);
        assert!(c.holds());
    }

    #[test]
    fn identity_has_zero_linking() {
        let iso = zoo::identity(crate::maps::SurfaceModel::Plane);
        let r = find_witness(
            &iso,
            PlanePoint::ORIGIN,
            PlanePoint::new(1.0, 0.0),
            10,
            &WitnessOptions::default(),
        );
        assert!(matches!(r, Err(Error::ZeroLinking { .. })));
        let r = existence_pipeline(
            &iso,
            &[(PlanePoint::ORIGIN, PlanePoint::new(0.5, 0.0))],
            10,
            &WitnessOptions::default(),
        );
        assert!(matches!(r, Err(Error::AllPairsZeroLinking { .. })));
    }
}
