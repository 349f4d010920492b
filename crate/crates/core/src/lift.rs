//! Continuous real lifts of angle-valued functions of time.
//!
//! Directions are sampled on a uniform grid and bisected wherever two
//! consecutive samples are a quarter turn or more apart. A track is accepted
//! once doubling the grid density changes its total variation by at most the
//! tolerance.

use std::io;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{signed_turns_between, PlanePoint};
use crate::maps::{Cursor, Isotopy};

/// Separations below this are treated as a collision of the two orbits.
pub const COLLISION_GUARD: f64 = 1e-9;

/// Consecutive lifted samples differ by strictly less than this.
pub const MAX_GAP: f64 = 0.25;

/// Evidence that a track resolves its angle function.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct RefinementCertificate {
    /// Largest `|angles[k+1] − angles[k]|`.
    pub max_gap: f64,
    /// Base grid density of the returned track.
    pub samples_per_unit: u32,
    /// Change of the total variation against the track at half the density.
    pub halving_delta: f64,
    /// Number of bisections inserted.
    pub bisections: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftedAngleTrack {
    pub times: Vec<f64>,
    /// Lifted angles in turns; `angles[0] ∈ [0, 1)`.
    pub angles: Vec<f64>,
    pub certificate: RefinementCertificate,
}

impl LiftedAngleTrack {
    /// `angles[end] − angles[0]`.
    pub fn total(&self) -> f64 {
        self.angles.last().copied().unwrap_or(0.0) - self.angles.first().copied().unwrap_or(0.0)
    }

    pub fn duration(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0) - self.times.first().copied().unwrap_or(0.0)
    }

    /// CSV with columns `t, angle_turns`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io_err = |e: csv::Error| Error::InvalidArgument(format!("csv output: {e}"));
        w.write_record(["t", "angle_turns"]).map_err(io_err)?;
        for (t, a) in self.times.iter().zip(&self.angles) {
            w.write_record([t.to_string(), a.to_string()]).map_err(io_err)?;
        }
        w.flush()
            .map_err(|e| Error::InvalidArgument(format!("csv output: {e}")))?;
        Ok(())
    }
}

/// Lift a sequence of nonzero direction vectors.
///
/// Fails with `GapTooLarge` when two consecutive directions are a quarter
/// turn or more apart.
pub fn unwrap(directions: &[PlanePoint]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(directions.len());
    let Some(&first) = directions.first() else {
        return Ok(out);
    };
    let mut acc = first.turns();
    out.push(acc);
    for (k, w) in directions.windows(2).enumerate() {
        let gap = signed_turns_between(w[0], w[1]);
        if gap.abs() >= MAX_GAP {
            return Err(Error::GapTooLarge { index: k, gap });
        }
        acc += gap;
        out.push(acc);
    }
    Ok(out)
}

/// A time-parametrized direction that can only be queried forwards; clones
/// resume from the state they were taken at.
pub trait DirectionProbe: Clone {
    fn direction(&mut self, t: f64) -> Result<PlanePoint>;
}

/// Direction of `Df_t(x)·ξ`.
#[derive(Debug, Clone, Copy)]
pub struct TangentProbe<'a> {
    cursor: Cursor<'a>,
}

impl<'a> TangentProbe<'a> {
    pub fn new(iso: &'a Isotopy, x: PlanePoint, xi: PlanePoint) -> Self {
        Self {
            cursor: iso.tangent_cursor(x, xi.normalized()),
        }
    }
}

impl DirectionProbe for TangentProbe<'_> {
    fn direction(&mut self, t: f64) -> Result<PlanePoint> {
        Ok(self.cursor.at(t)?.derivative.col0())
    }
}

/// Direction from `f_t(x)` to `f_t(y)`.
#[derive(Debug, Clone, Copy)]
pub struct SeparationProbe<'a> {
    x: Cursor<'a>,
    y: Cursor<'a>,
}

impl<'a> SeparationProbe<'a> {
    pub fn new(iso: &'a Isotopy, x: PlanePoint, y: PlanePoint) -> Self {
        Self {
            x: iso.cursor(x),
            y: iso.cursor(y),
        }
    }
}

impl DirectionProbe for SeparationProbe<'_> {
    fn direction(&mut self, t: f64) -> Result<PlanePoint> {
        let d = self.y.at(t)?.point - self.x.at(t)?.point;
        let separation = d.norm();
        if !(separation >= COLLISION_GUARD) {
            return Err(Error::Collision { time: t, separation });
        }
        Ok(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftOptions {
    /// Initial grid density (samples per unit time).
    pub samples_per_unit: u32,
    /// Accepted change of the total variation under one density doubling.
    pub tol: f64,
    /// Maximum bisection depth inside one grid step.
    pub max_depth: u32,
    /// Density cap for the doubling loop.
    pub max_samples_per_unit: u32,
}

impl Default for LiftOptions {
    fn default() -> Self {
        Self {
            samples_per_unit: 16,
            tol: 1e-9,
            max_depth: 20,
            max_samples_per_unit: 1 << 12,
        }
    }
}

impl LiftOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    /// Same options at twice the grid density.
    pub fn doubled(&self) -> Self {
        Self {
            samples_per_unit: self.samples_per_unit * 2,
            max_samples_per_unit: self.max_samples_per_unit.max(self.samples_per_unit * 4),
            ..*self
        }
    }
}

/// Lift the probe's direction on `[0, t_end]`.
pub fn track<P: DirectionProbe>(probe: P, t_end: f64, opts: &LiftOptions) -> Result<LiftedAngleTrack> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {t_end}")));
    }
    let mut m = opts.samples_per_unit.max(1);
    let mut coarse = sample_pass(probe.clone(), t_end, m, opts.max_depth)?;
    loop {
        let mut fine = sample_pass(probe.clone(), t_end, 2 * m, opts.max_depth)?;
        let delta = (fine.total() - coarse.total()).abs();
        fine.certificate.halving_delta = delta;
        if delta <= opts.tol {
            return Ok(fine);
        }
        m *= 2;
        if m >= opts.max_samples_per_unit {
            return Err(Error::RefinementExhausted { time: t_end });
        }
        coarse = fine;
    }
}

fn sample_pass<P: DirectionProbe>(mut probe: P, t_end: f64, m: u32, max_depth: u32) -> Result<LiftedAngleTrack> {
    let steps = ((t_end * m as f64).ceil() as usize).max(1);
    let mut times = Vec::with_capacity(steps + 1);
    let mut dirs = Vec::with_capacity(steps + 1);
    let mut bisections = 0usize;

    let mut prev_t = 0.0;
    let mut prev_d = probe.direction(0.0)?;
    let mut saved = probe.clone();
    times.push(prev_t);
    dirs.push(prev_d);
    for k in 1..=steps {
        let t = if k == steps { t_end } else { k as f64 / m as f64 };
        let d = probe.direction(t)?;
        if signed_turns_between(prev_d, d).abs() >= MAX_GAP {
            refine(
                saved,
                (prev_t, prev_d),
                (t, d),
                1,
                max_depth,
                &mut times,
                &mut dirs,
                &mut bisections,
            )?;
        }
        times.push(t);
        dirs.push(d);
        saved = probe.clone();
        prev_t = t;
        prev_d = d;
    }

    let angles = unwrap(&dirs).map_err(|e| match e {
        Error::GapTooLarge { index, .. } => Error::RefinementExhausted { time: times[index] },
        other => other,
    })?;
    let max_gap = angles.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    Ok(LiftedAngleTrack {
        times,
        angles,
        certificate: RefinementCertificate {
            max_gap,
            samples_per_unit: m,
            halving_delta: 0.0,
            bisections,
        },
    })
}

/// Insert samples strictly between `a` and `b` until all gaps are small.
/// `state` must be the probe as it was right after sampling `a`.
#[allow(clippy::too_many_arguments)]
fn refine<P: DirectionProbe>(
    state: P,
    a: (f64, PlanePoint),
    b: (f64, PlanePoint),
    depth: u32,
    max_depth: u32,
    times: &mut Vec<f64>,
    dirs: &mut Vec<PlanePoint>,
    bisections: &mut usize,
) -> Result<()> {
    let tm = 0.5 * (a.0 + b.0);
    if depth > max_depth || tm <= a.0 || tm >= b.0 {
        return Err(Error::RefinementExhausted { time: a.0 });
    }
    let mut mid_state = state.clone();
    let dm = mid_state.direction(tm)?;
    *bisections += 1;
    if signed_turns_between(a.1, dm).abs() >= MAX_GAP {
        refine(state, a, (tm, dm), depth + 1, max_depth, times, dirs, bisections)?;
    }
    times.push(tm);
    dirs.push(dm);
    if signed_turns_between(dm, b.1).abs() >= MAX_GAP {
        refine(mid_state, (tm, dm), b, depth + 1, max_depth, times, dirs, bisections)?;
    }
    Ok(())
}

/// Lifted direction of `Df_t(x)·ξ` on `[0, t_end]`.
pub fn track_tangent(
    iso: &Isotopy,
    x: PlanePoint,
    xi: PlanePoint,
    t_end: f64,
    opts: &LiftOptions,
) -> Result<LiftedAngleTrack> {
    if !(xi.norm() > 0.0) {
        return Err(Error::InvalidArgument("tangent vector must be nonzero".into()));
    }
    track(TangentProbe::new(iso, x, xi), t_end, opts)
}

/// Lifted direction from `f_t(x)` to `f_t(y)` on `[0, t_end]`.
pub fn track_separation(
    iso: &Isotopy,
    x: PlanePoint,
    y: PlanePoint,
    t_end: f64,
    opts: &LiftOptions,
) -> Result<LiftedAngleTrack> {
    track(SeparationProbe::new(iso, x, y), t_end, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    #[test]
    fn unwrap_quarter_steps() {
        let dirs = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)].map(PlanePoint::from);
        assert!(matches!(unwrap(&dirs), Err(Error::GapTooLarge { index: 0, .. })));
        let dirs = [(1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (-1.0, 1.0), (-1.0, 0.0)].map(PlanePoint::from);
        let a = unwrap(&dirs).unwrap();
        assert!((a[2] - 0.25).abs() < 1e-15 && (a[4] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fast_rotation_needs_bisection() {
        // 20 turns per unit time: the 16-per-unit base grid aliases badly.
        let iso = zoo::rotation(PlanePoint::ORIGIN, 20.0);
        let tr = track_tangent(
            &iso,
            PlanePoint::new(0.2, 0.1),
            PlanePoint::new(0.0, 1.0),
            1.5,
            &LiftOptions::default(),
        )
        .unwrap();
        assert!((tr.total() - 30.0).abs() < 1e-9);
        assert!(tr.certificate.max_gap < MAX_GAP);
    }

    #[test]
    fn collision_is_reported() {
        let iso = zoo::identity(crate::maps::SurfaceModel::Plane);
        let p = PlanePoint::new(0.1, 0.1);
        let r = track_separation(&iso, p, p + PlanePoint::new(1e-12, 0.0), 1.0, &LiftOptions::default());
        assert!(matches!(r, Err(Error::Collision { .. })));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let iso = zoo::rotation(PlanePoint::ORIGIN, 0.5);
        let tr = track_tangent(
            &iso,
            PlanePoint::ORIGIN,
            PlanePoint::new(1.0, 0.0),
            1.0,
            &LiftOptions::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,angle_turns\n0,0\n"));
        assert_eq!(text.lines().count(), tr.times.len() + 1);
    }
}
