//! Linking numbers: the averaged rotation of the separation vector between
//! two orbits (or two sampled curves), in turns per unit time.

use std::io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PlanePoint;
use crate::lift::{track_separation, unwrap, LiftOptions, COLLISION_GUARD};
use crate::maps::Isotopy;

/// `Linking_n(I, x, y)`; the separation is measured from `f_t(x)` to `f_t(y)`,
/// which gives the same value as the opposite convention.
pub fn linking_n(iso: &Isotopy, x: PlanePoint, y: PlanePoint, n: u32, opts: &LiftOptions) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("horizon n must be >= 1".into()));
    }
    if x == y {
        return Err(Error::Collision {
            time: 0.0,
            separation: 0.0,
        });
    }
    Ok(track_separation(iso, x, y, n as f64, opts)?.total() / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkingEstimate {
    pub value: f64,
    pub horizon: f64,
    /// Smallest `‖β(t) − α(t)‖` over the samples used.
    pub min_separation: f64,
}

/// `linking_n` together with the smallest separation seen along the track.
pub fn linking_estimate(
    iso: &Isotopy,
    x: PlanePoint,
    y: PlanePoint,
    n: u32,
    opts: &LiftOptions,
) -> Result<LinkingEstimate> {
    let track = track_separation(iso, x, y, n as f64, opts)?;
    let (mut cx, mut cy) = (iso.cursor(x), iso.cursor(y));
    let mut min_separation = f64::INFINITY;
    for &t in &track.times {
        min_separation = min_separation.min(cx.at(t)?.point.distance(cy.at(t)?.point));
    }
    Ok(LinkingEstimate {
        value: track.total() / n as f64,
        horizon: n as f64,
        min_separation,
    })
}

/// A curve sampled at strictly increasing times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledCurve {
    pub times: Vec<f64>,
    pub points: Vec<PlanePoint>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CurveRow {
    t: f64,
    x: f64,
    y: f64,
}

impl SampledCurve {
    pub fn new(times: Vec<f64>, points: Vec<PlanePoint>) -> Result<Self> {
        if times.len() != points.len() || times.is_empty() {
            return Err(Error::InvalidArgument(
                "curve needs as many points as times, and at least one".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("curve times must be strictly increasing".into()));
        }
        Ok(Self { times, points })
    }

    /// Sample `f` at `samples + 1` equally spaced times on `[t0, t1]`.
    pub fn from_fn(t0: f64, t1: f64, samples: usize, f: impl Fn(f64) -> PlanePoint) -> Result<Self> {
        let samples = samples.max(1);
        let times: Vec<f64> = (0..=samples)
            .map(|k| {
                if k == samples {
                    t1
                } else {
                    t0 + (t1 - t0) * (k as f64 / samples as f64)
                }
            })
            .collect();
        let points = times.iter().map(|&t| f(t)).collect();
        Self::new(times, points)
    }

    /// The constant curve at `p` on the given times.
    pub fn constant(times: Vec<f64>, p: PlanePoint) -> Result<Self> {
        let points = vec![p; times.len()];
        Self::new(times, points)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV with columns `t, x, y`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let rows: Vec<CurveRow> = self
            .times
            .iter()
            .zip(&self.points)
            .map(|(&t, p)| CurveRow { t, x: p.x, y: p.y })
            .collect();
        crate::export::write_csv(out, &rows)
    }

    /// Parse CSV with columns `t, x, y`; lines starting with `#` are ignored.
    pub fn read_csv<R: io::Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
        let mut times = Vec::new();
        let mut points = Vec::new();
        for row in r.deserialize::<CurveRow>() {
            let row = row.map_err(|e| Error::Parse(format!("curve csv: {e}")))?;
            times.push(row.t);
            points.push(PlanePoint::new(row.x, row.y));
        }
        Self::new(times, points)
    }

    /// Index of the last sample with time ≤ `t_end`.
    fn last_index(&self, t_end: f64) -> usize {
        self.times.partition_point(|&t| t <= t_end).saturating_sub(1)
    }
}

fn same_grid(a: &SampledCurve, b: &SampledCurve) -> Result<()> {
    if a.times != b.times {
        return Err(Error::InvalidArgument("curves must share the same time grid".into()));
    }
    Ok(())
}

/// Lifted angle of `β(t) − α(t)` up to the sample at `t_end`.
fn separation_angles(alpha: &SampledCurve, beta: &SampledCurve, t_end: f64) -> Result<(Vec<f64>, f64)> {
    same_grid(alpha, beta)?;
    let last = alpha.last_index(t_end);
    let mut min_sep = f64::INFINITY;
    let mut dirs = Vec::with_capacity(last + 1);
    for k in 0..=last {
        let d = beta.points[k] - alpha.points[k];
        let sep = d.norm();
        if !(sep >= COLLISION_GUARD) {
            return Err(Error::Collision {
                time: alpha.times[k],
                separation: sep,
            });
        }
        min_sep = min_sep.min(sep);
        dirs.push(d);
    }
    Ok((unwrap(&dirs)?, min_sep))
}

/// Normalized lifted change of the direction of `β − α` over `[t₀, T]`,
/// where `T` is the last sample time not exceeding `t_end`.
pub fn linking_curves(alpha: &SampledCurve, beta: &SampledCurve, t_end: f64) -> Result<LinkingEstimate> {
    let (angles, min_separation) = separation_angles(alpha, beta, t_end)?;
    let last = angles.len() - 1;
    let horizon = alpha.times[last] - alpha.times[0];
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument("curves span no time before the horizon".into()));
    }
    Ok(LinkingEstimate {
        value: (angles[last] - angles[0]) / horizon,
        horizon,
        min_separation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationReport {
    /// The measured distances satisfy the hypotheses.
    pub premise_ok: bool,
    /// `d = min_t ‖β(t) − α(t)‖`.
    pub min_separation: f64,
    /// `max(‖α − α′‖∞, ‖β − β′‖∞)`.
    pub max_perturbation: f64,
    /// `sup_t |Δ(t) − Δ′(t)|` of the lifted angle changes, in turns.
    pub max_angle_difference: f64,
    /// `|Linking_T(α, β) − Linking_T(α′, β′)|`.
    pub horizon_difference: f64,
    pub horizon: f64,
}

/// Compare the linking of `(α, β)` with that of a perturbation `(α′, β′)`.
///
/// When `‖α − α′‖∞, ‖β − β′‖∞ ≤ d/2` with `d` the minimal separation, the two
/// separation vectors are never a quarter turn apart, so the lifted angle
/// changes stay within half a turn of each other.
pub fn perturbation_bound_check(
    alpha: &SampledCurve,
    beta: &SampledCurve,
    alpha2: &SampledCurve,
    beta2: &SampledCurve,
    t_end: f64,
) -> Result<PerturbationReport> {
    same_grid(alpha, alpha2)?;
    same_grid(alpha, beta2)?;
    let (a, d) = separation_angles(alpha, beta, t_end)?;
    let last = a.len() - 1;
    let sup = |u: &SampledCurve, v: &SampledCurve| {
        (0..=last)
            .map(|k| u.points[k].distance(v.points[k]))
            .fold(0.0, f64::max)
    };
    let max_perturbation = sup(alpha, alpha2).max(sup(beta, beta2));
    let premise_ok = max_perturbation <= d / 2.0;
    let horizon = alpha.times[last] - alpha.times[0];
    let (max_angle_difference, horizon_difference) = match separation_angles(alpha2, beta2, t_end) {
        Ok((b, _)) => {
            let diff = |k: usize| ((a[k] - a[0]) - (b[k] - b[0])).abs();
            let max = (0..=last).map(diff).fold(0.0, f64::max);
            (max, diff(last) / horizon)
        }
        // The perturbed pair can only collide or jump when the premise fails;
        // there is nothing to compare then.
        Err(Error::Collision { .. } | Error::GapTooLarge { .. }) if !premise_ok => (f64::NAN, f64::NAN),
        Err(e) => return Err(e),
    };
    Ok(PerturbationReport {
        premise_ok,
        min_separation: d,
        max_perturbation,
        max_angle_difference,
        horizon_difference,
        horizon,
    })
}
