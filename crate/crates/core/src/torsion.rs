//! Finite-time torsion: the averaged rotation of `Df_t(x)·ξ`, in turns per
//! unit time.
//!
//! For any two tangent vectors at the same point the finite-time values
//! differ by at most `2/n`, since `Df_t` preserves their cyclic order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::PlanePoint;
use crate::lift::{track_tangent, LiftOptions};
use crate::maps::Isotopy;

/// Default tangent direction for orbit and measure torsion.
pub const DEFAULT_XI: PlanePoint = PlanePoint { x: 1.0, y: 0.0 };

/// `{2⁵, 2⁶, …, 2¹²}`.
pub fn default_schedule() -> Vec<u32> {
    (5..=12).map(|k| 1u32 << k).collect()
}

/// `Torsion_n(I, x, ξ)`.
pub fn torsion_n(iso: &Isotopy, x: PlanePoint, xi: PlanePoint, n: u32, opts: &LiftOptions) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("horizon n must be >= 1".into()));
    }
    Ok(track_tangent(iso, x, xi, n as f64, opts)?.total() / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convergence {
    Converged,
    NotConverged,
}

impl Convergence {
    pub fn as_str(&self) -> &'static str {
        match self {
            Convergence::Converged => "converged",
            Convergence::NotConverged => "not-converged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorsionEstimate {
    /// Value at the largest horizon.
    pub value: f64,
    pub n: u32,
    pub diagnostic: Convergence,
    pub tol: f64,
    /// Spread of `Torsion_n` over four tangent directions at `x`.
    pub xi_spread: f64,
    /// `(horizon, Torsion_horizon)` along the schedule.
    pub history: Vec<(u32, f64)>,
}

/// Orbit torsion along an increasing schedule of horizons, from a single
/// track. Converged iff the last three values lie within `tol` of each
/// other; this is a diagnostic, not a proof that the limit exists.
pub fn torsion_orbit(
    iso: &Isotopy,
    x: PlanePoint,
    xi: PlanePoint,
    schedule: &[u32],
    tol: f64,
    opts: &LiftOptions,
) -> Result<TorsionEstimate> {
    if schedule.is_empty() || schedule.contains(&0) || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "schedule must be a nonempty increasing list of positive horizons".into(),
        ));
    }
    let n = *schedule.last().unwrap();
    let track = track_tangent(iso, x, xi, n as f64, opts)?;
    let a0 = track.angles[0];
    let mut history = Vec::with_capacity(schedule.len());
    for &h in schedule {
        // Integer times are always grid nodes of the track.
        let idx = track
            .times
            .partition_point(|&t| t < h as f64)
            .min(track.times.len() - 1);
        history.push((h, (track.angles[idx] - a0) / h as f64));
    }
    let value = history.last().unwrap().1;
    let tail: Vec<f64> = history.iter().rev().take(3).map(|&(_, v)| v).collect();
    let spread = |v: &[f64]| {
        v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let diagnostic = if tail.len() == 3 && spread(&tail) <= tol {
        Convergence::Converged
    } else {
        Convergence::NotConverged
    };
    let mut values = vec![value];
    for k in 1..4 {
        let other = crate::geometry::Mat2::rotation(std::f64::consts::FRAC_PI_2 * k as f64) * xi;
        values.push(torsion_n(iso, x, other, n, opts)?);
    }
    Ok(TorsionEstimate {
        value,
        n,
        diagnostic,
        tol,
        xi_spread: spread(&values),
        history,
    })
}

/// A source of points distributed according to a finite invariant measure.
pub trait PointSampler: Sync {
    fn sample(&self, rng: &mut ChaCha8Rng) -> PlanePoint;

    /// Total mass of the measure.
    fn mass(&self) -> f64;
}

/// Area measure on the disc of the given radius about the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformDisc {
    pub radius: f64,
}

impl PointSampler for UniformDisc {
    fn sample(&self, rng: &mut ChaCha8Rng) -> PlanePoint {
        let r = self.radius * rng.gen::<f64>().sqrt();
        PlanePoint::from_turns(rng.gen::<f64>()) * r
    }

    fn mass(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }
}

/// Area measure on the unit square (the torus fundamental domain).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UniformSquare;

impl PointSampler for UniformSquare {
    fn sample(&self, rng: &mut ChaCha8Rng) -> PlanePoint {
        PlanePoint::new(rng.gen(), rng.gen())
    }

    fn mass(&self) -> f64 {
        1.0
    }
}

/// Unit point mass (at a fixed point).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dirac(pub PlanePoint);

impl PointSampler for Dirac {
    fn sample(&self, _rng: &mut ChaCha8Rng) -> PlanePoint {
        self.0
    }

    fn mass(&self) -> f64 {
        1.0
    }
}

/// Generator for sample `index`: one independent stream per sample, so the
/// draw does not depend on evaluation order.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureTorsion {
    /// Mean of `Torsion_n` over the samples.
    pub mean: f64,
    pub stderr: f64,
    /// `mass × mean`: the un-normalized integral.
    pub integral: f64,
    pub integral_stderr: f64,
    pub samples: usize,
    pub n: u32,
    /// Worst-case effect of fixing `ξ` instead of averaging over directions.
    pub xi_bias_bound: f64,
}

/// Mean finite-time torsion with the fixed direction [`DEFAULT_XI`].
pub fn torsion_measure<S: PointSampler>(
    iso: &Isotopy,
    sampler: &S,
    n: u32,
    samples: usize,
    seed: u64,
    opts: &LiftOptions,
) -> Result<MeasureTorsion> {
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples".into()));
    }
    let values: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let x = sampler.sample(&mut sample_rng(seed, i));
            torsion_n(iso, x, DEFAULT_XI, n, opts)
        })
        .collect::<Result<_>>()?;
    let (mean, stderr) = mean_and_stderr(&values);
    let mass = sampler.mass();
    Ok(MeasureTorsion {
        mean,
        stderr,
        integral: mass * mean,
        integral_stderr: mass * stderr,
        samples,
        n,
        xi_bias_bound: 2.0 / n as f64,
    })
}

/// Sample mean and standard error of the mean (sequential, order-fixed sum).
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One row of the torsion CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorsionRow {
    pub x0x: f64,
    pub x0y: f64,
    pub xi_turns: f64,
    pub n: u32,
    pub torsion: f64,
    pub diagnostic: &'static str,
}

impl TorsionRow {
    pub fn new(x: PlanePoint, xi: PlanePoint, est: &TorsionEstimate) -> Self {
        Self {
            x0x: x.x,
            x0y: x.y,
            xi_turns: xi.turns(),
            n: est.n,
            torsion: est.value,
            diagnostic: est.diagnostic.as_str(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    #[test]
    fn schedule_default() {
        let s = default_schedule();
        assert_eq!(s.first(), Some(&32));
        assert_eq!(s.last(), Some(&4096));
    }

    #[test]
    fn orbit_history_uses_integer_nodes() {
        let iso = zoo::rotation(PlanePoint::ORIGIN, 0.3);
        let est = torsion_orbit(
            &iso,
            PlanePoint::new(0.5, 0.5),
            DEFAULT_XI,
            &[4, 8, 16],
            1e-12,
            &LiftOptions::default(),
        )
        .unwrap();
        assert_eq!(est.diagnostic, Convergence::Converged);
        for (_, v) in est.history {
            assert!((v - 0.3).abs() < 1e-12);
        }
        assert!(est.xi_spread < 1e-12);
    }

    #[test]
    fn stderr_of_constant_is_zero() {
        assert_eq!(mean_and_stderr(&[2.0, 2.0, 2.0]), (2.0, 0.0));
    }

    #[test]
    fn streams_are_independent_of_order() {
        let a: f64 = sample_rng(7, 3).gen();
        let _ = sample_rng(7, 2).gen::<f64>();
        let b: f64 = sample_rng(7, 3).gen();
        assert_eq!(a, b);
        assert_ne!(a, sample_rng(7, 4).gen::<f64>());
    }
}
