//! Surface models and isotopies `(f_t)` joining the identity to a map `f`.
//!
//! An isotopy is defined on `t ∈ [0, 1]` and extended to all `t ≥ 0` by
//! `f_t = f_{t−⌊t⌋} ∘ f^{⌊t⌋}`. Every representation is compiled into a flat
//! list of segments covering one unit of time; evaluation walks the segments
//! with a [`Cursor`], which also carries the derivative cocycle.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Mat2, PlanePoint};

/// The surface on which an isotopy acts, described through its universal
/// cover `ℝ²` (or the open unit disc).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceModel {
    Plane,
    Disc,
    /// `ℝ/ℤ × ℝ`: integer translations act in `x` only.
    Annulus,
    /// `ℝ²/ℤ²`.
    Torus,
}

impl SurfaceModel {
    pub fn contains(&self, p: PlanePoint) -> bool {
        p.is_finite() && (*self != SurfaceModel::Disc || p.norm_sq() < 1.0)
    }

    /// Whether the integer translation `(vx, vy)` is a deck transformation.
    pub fn acts(&self, vx: i64, vy: i64) -> bool {
        match self {
            SurfaceModel::Plane | SurfaceModel::Disc => vx == 0 && vy == 0,
            SurfaceModel::Annulus => vy == 0,
            SurfaceModel::Torus => true,
        }
    }

    /// Canonical representative of `p` modulo the acting translations.
    pub fn reduce(&self, p: PlanePoint) -> PlanePoint {
        match self {
            SurfaceModel::Plane | SurfaceModel::Disc => p,
            SurfaceModel::Annulus => PlanePoint::new(p.x - p.x.floor(), p.y),
            SurfaceModel::Torus => PlanePoint::new(p.x - p.x.floor(), p.y - p.y.floor()),
        }
    }
}

impl fmt::Display for SurfaceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SurfaceModel::Plane => "plane",
            SurfaceModel::Disc => "disc",
            SurfaceModel::Annulus => "annulus",
            SurfaceModel::Torus => "torus",
        };
        f.write_str(name)
    }
}

/// A unit tangent vector; `direction` is in turns, kept in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitTangent {
    pub base: PlanePoint,
    pub direction: f64,
}

impl UnitTangent {
    pub fn new(base: PlanePoint, direction_turns: f64) -> Self {
        let d = direction_turns - direction_turns.floor();
        Self {
            base,
            direction: if d >= 1.0 { 0.0 } else { d },
        }
    }

    /// Tangent along a nonzero vector.
    pub fn along(base: PlanePoint, v: PlanePoint) -> Self {
        Self::new(base, v.turns())
    }

    pub fn vector(&self) -> PlanePoint {
        PlanePoint::from_turns(self.direction)
    }
}

/// An explicit family `F(s, ·)`, `s ∈ [0, 1]`, with `F(0, ·) = Id`.
pub trait ClosedFormFamily: Send + Sync + fmt::Debug {
    fn eval(&self, s: f64, p: PlanePoint) -> PlanePoint;

    /// Spatial derivative of `F(s, ·)`. Defaults to central differences.
    fn jacobian(&self, s: f64, p: PlanePoint) -> Mat2 {
        central_difference(|q| self.eval(s, q), p, 1e-6)
    }
}

/// A time-dependent vector field `X(s, ·)`, `s ∈ [0, 1]`, whose flow from
/// `s = 0` is the isotopy.
pub trait VectorField: Send + Sync + fmt::Debug {
    fn velocity(&self, s: f64, p: PlanePoint) -> PlanePoint;

    /// Spatial derivative `∂X/∂p`. Defaults to central differences.
    fn gradient(&self, s: f64, p: PlanePoint) -> Mat2 {
        central_difference(|q| self.velocity(s, q), p, 1e-6)
    }
}

/// Central finite-difference Jacobian of `g` at `p` with step `h`.
pub fn central_difference(g: impl Fn(PlanePoint) -> PlanePoint, p: PlanePoint, h: f64) -> Mat2 {
    let ex = PlanePoint::new(h, 0.0);
    let ey = PlanePoint::new(0.0, h);
    let cx = (g(p + ex) - g(p - ex)) * (0.5 / h);
    let cy = (g(p + ey) - g(p - ey)) * (0.5 / h);
    Mat2::from_columns(cx, cy)
}

#[derive(Debug, Clone)]
pub enum Representation {
    ClosedForm(Arc<dyn ClosedFormFamily>),
    Flow(Arc<dyn VectorField>),
    /// Pieces run one after the other, each taking an equal share of `[0, 1]`.
    Concatenation(Vec<Isotopy>),
    /// `g_t = f_{q t} − t·shift`: the time-1 map is `f^q` followed by the
    /// integer translation `−shift`.
    IterateExtension {
        base: Box<Isotopy>,
        power: u32,
        shift: [i64; 2],
    },
}

pub const DEFAULT_TIME_STEP: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct Isotopy {
    surface: SurfaceModel,
    repr: Representation,
    time_step: f64,
    area_preserving: bool,
    label: String,
    compiled: Arc<Compiled>,
}

#[derive(Debug, Clone)]
enum Leaf {
    Closed(Arc<dyn ClosedFormFamily>),
    Flow { field: Arc<dyn VectorField>, steps: u32 },
}

#[derive(Debug, Clone)]
struct Segment {
    start: f64,
    end: f64,
    leaf: Leaf,
}

impl Segment {
    fn nodes(&self) -> u32 {
        match self.leaf {
            Leaf::Closed(_) => 1,
            Leaf::Flow { steps, .. } => steps,
        }
    }

    /// Local time of node `k` (node `nodes()` is the segment end).
    fn node_time(&self, k: u32) -> f64 {
        let n = self.nodes();
        if k >= n {
            self.end
        } else {
            self.start + (self.end - self.start) * (k as f64 / n as f64)
        }
    }
}

/// Flat form: `g_t(p) = F_{Q t}(p) − t·V` where `F` runs `segments` once per
/// unit of its own time.
#[derive(Debug)]
struct Compiled {
    surface: SurfaceModel,
    segments: Vec<Segment>,
    time_scale: u64,
    drift: PlanePoint,
}

fn compile(surface: SurfaceModel, repr: &Representation, time_step: f64) -> Result<Compiled> {
    let flow_steps = |len: f64| ((len / time_step) - 1e-9).ceil().max(1.0) as u32;
    match repr {
        Representation::ClosedForm(f) => Ok(Compiled {
            surface,
            segments: vec![Segment {
                start: 0.0,
                end: 1.0,
                leaf: Leaf::Closed(f.clone()),
            }],
            time_scale: 1,
            drift: PlanePoint::ORIGIN,
        }),
        Representation::Flow(x) => Ok(Compiled {
            surface,
            segments: vec![Segment {
                start: 0.0,
                end: 1.0,
                leaf: Leaf::Flow {
                    field: x.clone(),
                    steps: flow_steps(1.0),
                },
            }],
            time_scale: 1,
            drift: PlanePoint::ORIGIN,
        }),
        Representation::Concatenation(parts) => {
            if parts.is_empty() {
                return Err(Error::InvalidArgument("empty concatenation".into()));
            }
            let m = parts.len() as f64;
            let mut segments = Vec::new();
            for (k, part) in parts.iter().enumerate() {
                let inner = compile(surface, &part.repr, time_step)?;
                if inner.time_scale != 1 || inner.drift != PlanePoint::ORIGIN {
                    return Err(Error::InvalidArgument(
                        "iterate-extension wrappers cannot be concatenated".into(),
                    ));
                }
                let lo = k as f64 / m;
                let hi = if k + 1 == parts.len() { 1.0 } else { (k + 1) as f64 / m };
                for seg in inner.segments {
                    let start = lo + (hi - lo) * seg.start;
                    let end = if seg.end == 1.0 { hi } else { lo + (hi - lo) * seg.end };
                    let leaf = match seg.leaf {
                        Leaf::Closed(f) => Leaf::Closed(f),
                        Leaf::Flow { field, .. } => Leaf::Flow {
                            field,
                            steps: flow_steps(end - start),
                        },
                    };
                    segments.push(Segment { start, end, leaf });
                }
            }
            Ok(Compiled {
                surface,
                segments,
                time_scale: 1,
                drift: PlanePoint::ORIGIN,
            })
        }
        Representation::IterateExtension { base, power, shift } => {
            if *power == 0 {
                return Err(Error::InvalidArgument("iterate power must be >= 1".into()));
            }
            if !surface.acts(shift[0], shift[1]) {
                return Err(Error::InvalidArgument(format!(
                    "translation ({}, {}) is not a deck transformation of the {surface}",
                    shift[0], shift[1]
                )));
            }
            let inner = compile(surface, &base.repr, time_step)?;
            let q = *power as u64;
            Ok(Compiled {
                surface,
                segments: inner.segments,
                time_scale: inner.time_scale * q,
                drift: inner.drift * q as f64 + PlanePoint::new(shift[0] as f64, shift[1] as f64),
            })
        }
    }
}

impl Isotopy {
    pub fn new(surface: SurfaceModel, repr: Representation) -> Result<Self> {
        Self::with_options(surface, repr, DEFAULT_TIME_STEP, false, "custom")
    }

    pub fn with_options(
        surface: SurfaceModel,
        repr: Representation,
        time_step: f64,
        area_preserving: bool,
        label: impl Into<String>,
    ) -> Result<Self> {
        if !(time_step > 0.0 && time_step.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "time step must be positive, got {time_step}"
            )));
        }
        let compiled = Arc::new(compile(surface, &repr, time_step)?);
        Ok(Self {
            surface,
            repr,
            time_step,
            area_preserving,
            label: label.into(),
            compiled,
        })
    }

    pub fn closed_form(
        surface: SurfaceModel,
        family: impl ClosedFormFamily + 'static,
        area_preserving: bool,
        label: impl Into<String>,
    ) -> Self {
        Self::with_options(
            surface,
            Representation::ClosedForm(Arc::new(family)),
            DEFAULT_TIME_STEP,
            area_preserving,
            label,
        )
        .expect("closed-form isotopies always compile")
    }

    pub fn flow(
        surface: SurfaceModel,
        field: impl VectorField + 'static,
        area_preserving: bool,
        label: impl Into<String>,
    ) -> Self {
        Self::with_options(
            surface,
            Representation::Flow(Arc::new(field)),
            DEFAULT_TIME_STEP,
            area_preserving,
            label,
        )
        .expect("flow isotopies always compile")
    }

    /// Run `parts` one after the other on equal shares of `[0, 1]`.
    pub fn concatenate(parts: Vec<Isotopy>, label: impl Into<String>) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty concatenation".into()))?;
        let surface = first.surface;
        if parts.iter().any(|p| p.surface != surface) {
            return Err(Error::InvalidArgument("pieces live on different surfaces".into()));
        }
        let area = parts.iter().all(|p| p.area_preserving);
        let step = first.time_step;
        Self::with_options(surface, Representation::Concatenation(parts), step, area, label)
    }

    /// `g_t = f_{q t} − t·shift`, so that `g̃ = f̃^q − shift`.
    pub fn iterate_extension(&self, power: u32, shift: [i64; 2]) -> Result<Self> {
        Self::with_options(
            self.surface,
            Representation::IterateExtension {
                base: Box::new(self.clone()),
                power,
                shift,
            },
            self.time_step,
            self.area_preserving,
            format!("{}^{}-({},{})", self.label, power, shift[0], shift[1]),
        )
    }

    /// Same isotopy with a different integration step for flow pieces.
    pub fn with_time_step(&self, time_step: f64) -> Result<Self> {
        Self::with_options(
            self.surface,
            self.repr.clone(),
            time_step,
            self.area_preserving,
            self.label.clone(),
        )
    }

    /// Conjugate by the reflection `(x, y) ↦ (x, −y)`; reverses orientation,
    /// so torsion and linking change sign.
    pub fn reflected(&self) -> Self {
        let repr = match &self.repr {
            Representation::ClosedForm(f) => Representation::ClosedForm(Arc::new(Reflected(f.clone()))),
            Representation::Flow(x) => Representation::Flow(Arc::new(Reflected(x.clone()))),
            Representation::Concatenation(parts) => {
                Representation::Concatenation(parts.iter().map(Isotopy::reflected).collect())
            }
            Representation::IterateExtension { base, power, shift } => Representation::IterateExtension {
                base: Box::new(base.reflected()),
                power: *power,
                shift: [shift[0], -shift[1]],
            },
        };
        Self::with_options(
            self.surface,
            repr,
            self.time_step,
            self.area_preserving,
            format!("reflected {}", self.label),
        )
        .expect("reflection preserves compilability")
    }

    pub fn surface(&self) -> SurfaceModel {
        self.surface
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn time_step(&self) -> f64 {
        self.time_step
    }

    pub fn is_area_preserving(&self) -> bool {
        self.area_preserving
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Whether any piece is integrated numerically.
    pub fn has_flow(&self) -> bool {
        self.compiled
            .segments
            .iter()
            .any(|s| matches!(s.leaf, Leaf::Flow { .. }))
    }

    pub fn cursor(&self, p: PlanePoint) -> Cursor<'_> {
        Cursor::start(&self.compiled, p, None)
    }

    /// Cursor that also propagates `Df_t(p)`, starting from the identity.
    pub fn jacobian_cursor(&self, p: PlanePoint) -> Cursor<'_> {
        Cursor::start(&self.compiled, p, Some(Mat2::IDENTITY))
    }

    /// Cursor propagating the tangent vector `ξ` (first column of the carried
    /// matrix). The matrix is rescaled when it grows, so only directions are
    /// meaningful.
    pub fn tangent_cursor(&self, p: PlanePoint, xi: PlanePoint) -> Cursor<'_> {
        let mut c = Cursor::start(&self.compiled, p, Some(Mat2::from_columns(xi, xi.perp())));
        c.renormalize = true;
        c
    }

    /// `f_t(p)` in cover coordinates.
    pub fn eval(&self, t: f64, p: PlanePoint) -> Result<PlanePoint> {
        Ok(self.cursor(p).at(t)?.point)
    }

    /// `Df_t(p)`.
    pub fn jacobian(&self, t: f64, p: PlanePoint) -> Result<Mat2> {
        Ok(self.jacobian_cursor(p).at(t)?.derivative)
    }

    /// `(f_t(p), Df_t(p))`.
    pub fn jet(&self, t: f64, p: PlanePoint) -> Result<Jet> {
        self.jacobian_cursor(p).at(t)
    }

    /// `(p, f̃(p), …, f̃ⁿ(p))` without reduction modulo deck translations.
    pub fn orbit_lift(&self, p: PlanePoint, n: usize) -> Result<Vec<PlanePoint>> {
        let mut cursor = self.cursor(p);
        let mut out = Vec::with_capacity(n + 1);
        out.push(p);
        for k in 1..=n {
            out.push(cursor.at(k as f64)?.point);
        }
        Ok(out)
    }

    /// Measured deviations from the structural invariants on `samples`.
    pub fn invariant_report(&self, samples: &[PlanePoint], times: &[f64]) -> Result<InvariantReport> {
        let mut report = InvariantReport::default();
        for &p in samples {
            report.identity_error = report.identity_error.max(self.eval(0.0, p)?.distance(p));
            for &t in times {
                let jet = self.jet(t, p)?;
                report.determinant_error = report.determinant_error.max((jet.derivative.det() - 1.0).abs());
                for (vx, vy) in [(1, 0), (0, 1), (-2, 3)] {
                    if self.surface.acts(vx, vy) {
                        let v = PlanePoint::new(vx as f64, vy as f64);
                        let shifted = self.eval(t, p + v)?;
                        report.equivariance_error = report.equivariance_error.max(shifted.distance(jet.point + v));
                    }
                }
            }
        }
        Ok(report)
    }
}

/// Largest deviations observed by [`Isotopy::invariant_report`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InvariantReport {
    /// `max |f_0(p) − p|`.
    pub identity_error: f64,
    /// `max |f_t(p + v) − f_t(p) − v|` over acting translations `v`.
    pub equivariance_error: f64,
    /// `max |det Df_t(p) − 1|` (meaningful only for area-preserving maps).
    pub determinant_error: f64,
}

#[derive(Debug)]
struct Reflected<T: ?Sized>(Arc<T>);

const FLIP: Mat2 = Mat2::new(1.0, 0.0, 0.0, -1.0);

fn flip(p: PlanePoint) -> PlanePoint {
    PlanePoint::new(p.x, -p.y)
}

impl ClosedFormFamily for Reflected<dyn ClosedFormFamily> {
    fn eval(&self, s: f64, p: PlanePoint) -> PlanePoint {
        flip(self.0.eval(s, flip(p)))
    }

    fn jacobian(&self, s: f64, p: PlanePoint) -> Mat2 {
        FLIP * self.0.jacobian(s, flip(p)) * FLIP
    }
}

impl VectorField for Reflected<dyn VectorField> {
    fn velocity(&self, s: f64, p: PlanePoint) -> PlanePoint {
        flip(self.0.velocity(s, flip(p)))
    }

    fn gradient(&self, s: f64, p: PlanePoint) -> Mat2 {
        FLIP * self.0.gradient(s, flip(p)) * FLIP
    }
}

/// A point together with a propagated derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub point: PlanePoint,
    pub derivative: Mat2,
}

/// Forward-only evaluator along one trajectory.
///
/// Integration nodes are fixed by the isotopy; a query between nodes takes a
/// partial step from the last node without committing it, so the sampled
/// times never influence the trajectory. Cursors are `Copy`: a saved copy
/// can later be queried at any time after the one it was saved at.
#[derive(Debug, Clone, Copy)]
pub struct Cursor<'a> {
    compiled: &'a Compiled,
    unit: u64,
    seg: usize,
    node: u32,
    p: PlanePoint,
    d: Mat2,
    with_derivative: bool,
    renormalize: bool,
    /// Last queried outer time; queries must not go backwards.
    last: f64,
}

const RESCALE_ABOVE: f64 = 1e100;
const RESCALE_BELOW: f64 = 1e-100;

impl<'a> Cursor<'a> {
    fn start(compiled: &'a Compiled, p: PlanePoint, d: Option<Mat2>) -> Self {
        Self {
            compiled,
            unit: 0,
            seg: 0,
            node: 0,
            p,
            d: d.unwrap_or(Mat2::IDENTITY),
            with_derivative: d.is_some(),
            renormalize: false,
            last: 0.0,
        }
    }

    /// Base time of the next node to commit.
    fn next_node_time(&self) -> f64 {
        let seg = &self.compiled.segments[self.seg];
        self.unit as f64 + seg.node_time(self.node + 1)
    }

    fn fail(&self, t: f64, reason: &str) -> Error {
        Error::IntegrationFailure {
            time: t,
            reason: reason.to_string(),
        }
    }

    fn check(&self, p: PlanePoint, d: &Mat2, t: f64) -> Result<()> {
        if !p.is_finite() || (self.with_derivative && !d.is_finite()) {
            return Err(self.fail(t, "non-finite state"));
        }
        if self.compiled.surface == SurfaceModel::Disc && p.norm_sq() >= 1.0 {
            return Err(self.fail(t, "trajectory left the open unit disc"));
        }
        Ok(())
    }

    fn step(&self, seg: &Segment, from: f64, to: f64) -> (PlanePoint, Mat2) {
        match &seg.leaf {
            Leaf::Closed(f) => {
                let p = f.eval(to, self.p);
                let d = if self.with_derivative {
                    f.jacobian(to, self.p) * self.d
                } else {
                    self.d
                };
                (p, d)
            }
            Leaf::Flow { field, .. } => rk4(field.as_ref(), from, to - from, self.p, self.d, self.with_derivative),
        }
    }

    fn commit_next(&mut self, outer: f64) -> Result<()> {
        let seg = &self.compiled.segments[self.seg];
        let n = seg.nodes();
        let (from, to) = match seg.leaf {
            Leaf::Closed(_) => (0.0, 1.0),
            Leaf::Flow { steps, .. } => (
                self.node as f64 / steps as f64,
                if self.node + 1 == steps {
                    1.0
                } else {
                    (self.node + 1) as f64 / steps as f64
                },
            ),
        };
        let (p, mut d) = self.step(seg, from, to);
        self.check(p, &d, outer)?;
        if self.renormalize {
            let m = d.max_abs();
            if m > RESCALE_ABOVE || (m < RESCALE_BELOW && m > 0.0) {
                d = d.scaled(1.0 / m);
            }
        }
        self.p = p;
        self.d = d;
        self.node += 1;
        if self.node == n {
            self.node = 0;
            self.seg += 1;
            if self.seg == self.compiled.segments.len() {
                self.seg = 0;
                self.unit += 1;
            }
        }
        Ok(())
    }

    /// State at outer time `t`; `t` must not precede the previous query.
    pub fn at(&mut self, t: f64) -> Result<Jet> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")));
        }
        if t < self.last {
            return Err(Error::InvalidArgument(format!(
                "cursor queried at {t} after {}",
                self.last
            )));
        }
        self.last = t;
        let c = self.compiled;
        let tau = c.time_scale as f64 * t;
        while self.next_node_time() <= tau {
            self.commit_next(t)?;
        }
        let seg = &c.segments[self.seg];
        let local = tau - self.unit as f64;
        let (p, d) = if local <= seg.node_time(self.node) {
            (self.p, self.d)
        } else {
            let sigma = ((local - seg.start) / (seg.end - seg.start)).clamp(0.0, 1.0);
            let from = match seg.leaf {
                Leaf::Closed(_) => 0.0,
                Leaf::Flow { steps, .. } => self.node as f64 / steps as f64,
            };
            let out = self.step(seg, from, sigma);
            self.check(out.0, &out.1, t)?;
            out
        };
        let point = if c.drift == PlanePoint::ORIGIN {
            p
        } else {
            p - c.drift * t
        };
        Ok(Jet { point, derivative: d })
    }
}

/// One classical Runge–Kutta step for `ṗ = X(s, p)` and, optionally, the
/// variational equation `Ḋ = ∂X/∂p · D`.
fn rk4(x: &dyn VectorField, s: f64, h: f64, p: PlanePoint, d: Mat2, with_derivative: bool) -> (PlanePoint, Mat2) {
    let half = 0.5 * h;
    let k1 = x.velocity(s, p);
    let p2 = p + k1 * half;
    let k2 = x.velocity(s + half, p2);
    let p3 = p + k2 * half;
    let k3 = x.velocity(s + half, p3);
    let p4 = p + k3 * h;
    let k4 = x.velocity(s + h, p4);
    let p_next = p + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    if !with_derivative {
        return (p_next, d);
    }
    let m1 = x.gradient(s, p) * d;
    let m2 = x.gradient(s + half, p2) * (d + m1.scaled(half));
    let m3 = x.gradient(s + half, p3) * (d + m2.scaled(half));
    let m4 = x.gradient(s + h, p4) * (d + m3.scaled(h));
    let d_next = d + (m1 + m2.scaled(2.0) + m3.scaled(2.0) + m4).scaled(h / 6.0);
    (p_next, d_next)
}
