//! Markov-partition machinery on a linear Anosov model of the torus, and the
//! triangle tracks that closed chains shadow.
//!
//! The model is an integer matrix `A = αI + βF` with `F = [[1,1],[1,0]]`;
//! every such matrix shares the eigenlines of `F`, spanned by
//! `U = (1, 1/φ)` and `S = (1, −φ)`. Points are written `p = u·U + s·S`, so
//! `A` acts diagonally on `(u, s)` and every rectangle is a box in those
//! coordinates. Coordinates live in `ℚ(√5)`, so all geometric predicates
//! (Markov property, relation, itineraries) are decided exactly.
//!
//! Chains carry integer tags: a step from `(i, w)` to `(j, w + t)` is allowed
//! when `A(R_i) ∩ int(R_j + t) ≠ ∅`. A point `y_k ∈ R_{i_k}` realizes the
//! chain when `y_{k+1} = A·y_k − t_k ∈ R_{i_{k+1}}`, and the tag sum
//! `w_p − w_0` is the chain's translation.

use std::cmp::Ordering;
use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::export::SvgCanvas;
use crate::geometry::{containment_margin, PlanePoint};
use crate::linking::{linking_curves, SampledCurve};
use crate::maps::Isotopy;
use crate::rotset::PeriodicOrbitRecord;

/// Default bound on the coefficients `ℓᵢ` of a zero-sum combination.
pub const DEFAULT_ELL_BOUND: u64 = 64;

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn frac(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `a + b√5` with rational `a`, `b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Q5 {
    pub a: BigRational,
    pub b: BigRational,
}

impl Q5 {
    pub fn new(a: BigRational, b: BigRational) -> Self {
        Self { a, b }
    }

    pub fn rational(a: BigRational) -> Self {
        Self {
            a,
            b: BigRational::zero(),
        }
    }

    pub fn int(n: i64) -> Self {
        Self::rational(rat(n))
    }

    pub fn zero() -> Self {
        Self::int(0)
    }

    /// `φ = (1 + √5)/2`.
    pub fn phi() -> Self {
        Self::new(frac(1, 2), frac(1, 2))
    }

    pub fn sqrt5() -> Self {
        Self::new(BigRational::zero(), BigRational::one())
    }

    /// Exact sign; `a + b√5 = 0` only when `a = b = 0` since `√5` is
    /// irrational.
    pub fn signum(&self) -> Ordering {
        let sa = self.a.cmp(&BigRational::zero());
        let sb = self.b.cmp(&BigRational::zero());
        match (sa, sb) {
            (s, Ordering::Equal) => s,
            (Ordering::Equal, s) => s,
            (x, y) if x == y => x,
            (x, y) => {
                let a2 = &self.a * &self.a;
                let b2 = &self.b * &self.b * rat(5);
                if a2 > b2 {
                    x
                } else {
                    y
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn abs(&self) -> Self {
        if self.signum() == Ordering::Less {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// `None` for zero.
    pub fn recip(&self) -> Option<Self> {
        let norm = &self.a * &self.a - &self.b * &self.b * rat(5);
        if norm.is_zero() {
            return None;
        }
        Some(Self::new(&self.a / &norm, -&self.b / &norm))
    }

    pub fn to_f64(&self) -> f64 {
        self.a.to_f64().unwrap_or(f64::NAN) + self.b.to_f64().unwrap_or(f64::NAN) * 5f64.sqrt()
    }
}

impl PartialOrd for Q5 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Q5 {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum()
    }
}

impl Add for &Q5 {
    type Output = Q5;
    fn add(self, o: &Q5) -> Q5 {
        Q5::new(&self.a + &o.a, &self.b + &o.b)
    }
}

impl Sub for &Q5 {
    type Output = Q5;
    fn sub(self, o: &Q5) -> Q5 {
        Q5::new(&self.a - &o.a, &self.b - &o.b)
    }
}

impl Mul for &Q5 {
    type Output = Q5;
    fn mul(self, o: &Q5) -> Q5 {
        Q5::new(
            &self.a * &o.a + &self.b * &o.b * rat(5),
            &self.a * &o.b + &self.b * &o.a,
        )
    }
}

impl Add for Q5 {
    type Output = Q5;
    fn add(self, o: Q5) -> Q5 {
        &self + &o
    }
}

impl Sub for Q5 {
    type Output = Q5;
    fn sub(self, o: Q5) -> Q5 {
        &self - &o
    }
}

impl Mul for Q5 {
    type Output = Q5;
    fn mul(self, o: Q5) -> Q5 {
        &self * &o
    }
}

impl Neg for Q5 {
    type Output = Q5;
    fn neg(self) -> Q5 {
        Q5::new(-self.a, -self.b)
    }
}

impl fmt::Display for Q5 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}·√5", self.a, self.b)
    }
}

/// Eigen-coordinates `(u, s)` of a rational point: `u = (φx + y)/√5`,
/// `s = x − u`.
pub fn eigen_coords(x: &BigRational, y: &BigRational) -> (Q5, Q5) {
    let u = Q5::new(x / rat(2), x / rat(10) + y / rat(5));
    let s = &Q5::rational(x.clone()) - &u;
    (u, s)
}

/// Plane point of eigen-coordinates: `x = u + s`, `y = u/φ − φs`.
pub fn from_eigen(u: &Q5, s: &Q5) -> (Q5, Q5) {
    let inv_phi = Q5::new(frac(-1, 2), frac(1, 2));
    let x = u + s;
    let y = &(u * &inv_phi) - &(s * &Q5::phi());
    (x, y)
}

/// Closed interval `[lo, hi]`, `lo < hi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    pub lo: Q5,
    pub hi: Q5,
}

impl Interval {
    fn new(a: Q5, b: Q5) -> Self {
        if a <= b {
            Self { lo: a, hi: b }
        } else {
            Self { lo: b, hi: a }
        }
    }

    fn scaled(&self, k: &Q5) -> Self {
        Self::new(&self.lo * k, &self.hi * k)
    }

    fn shifted(&self, d: &Q5) -> Self {
        Self {
            lo: &self.lo + d,
            hi: &self.hi + d,
        }
    }

    fn contains(&self, v: &Q5) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    fn interiors_meet(&self, o: &Self) -> bool {
        self.lo < o.hi && o.lo < self.hi
    }

    fn length(&self) -> Q5 {
        &self.hi - &self.lo
    }
}

/// Rectangle with edges along the eigenlines: a box in `(u, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rectangle {
    pub id: usize,
    pub u: Interval,
    pub s: Interval,
    /// Corners in the plane, counterclockwise.
    pub vertices: [PlanePoint; 4],
}

impl Rectangle {
    fn new(id: usize, u: Interval, s: Interval) -> Self {
        let corner = |a: &Q5, b: &Q5| {
            let (x, y) = from_eigen(a, b);
            PlanePoint::new(x.to_f64(), y.to_f64())
        };
        let mut vertices = [
            corner(&u.lo, &s.lo),
            corner(&u.hi, &s.lo),
            corner(&u.hi, &s.hi),
            corner(&u.lo, &s.hi),
        ];
        // (u, s) ↦ (x, y) reverses orientation.
        if crate::geometry::polygon_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        Self { id, u, s, vertices }
    }

    /// Closed containment of an exact point.
    pub fn contains(&self, x: &BigRational, y: &BigRational) -> bool {
        let (u, s) = eigen_coords(x, y);
        self.u.contains(&u) && self.s.contains(&s)
    }

    /// Area in the plane, `√5 · |box|`.
    pub fn area(&self) -> Q5 {
        &(&self.u.length() * &self.s.length()) * &Q5::sqrt5()
    }
}

/// Offset of the lattice vector `t` in eigen-coordinates.
fn lattice_offset(t: [i64; 2]) -> (Q5, Q5) {
    eigen_coords(&rat(t[0]), &rat(t[1]))
}

type IntMatrix = [[i64; 2]; 2];

/// Two-rectangle partition for a hyperbolic `A = αI + βF`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovPartition {
    pub matrix: IntMatrix,
    pub rectangles: Vec<Rectangle>,
    /// Eigenvalue on `U`.
    pub lambda_u: Q5,
    /// Eigenvalue on `S`.
    pub lambda_s: Q5,
}

/// `(α, β)` with `A = αI + βF`, after checking `|det A| = 1`, `|tr A| > 2`.
fn decompose(m: IntMatrix) -> Result<(i64, i64)> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.abs() != 1 {
        return Err(Error::UnsupportedMatrix(format!("{m:?} has determinant {det}, not ±1")));
    }
    let tr = m[0][0] + m[1][1];
    // λ² − tr·λ + det = 0 has a root on the unit circle iff |tr| ≤ 2
    // (det = 1) or tr = 0 (det = −1).
    let hyperbolic = if det == 1 { tr.abs() > 2 } else { tr != 0 };
    if !hyperbolic {
        return Err(Error::NotHyperbolic);
    }
    let (alpha, beta) = (m[1][1], m[0][1]);
    if m[1][0] != beta || m[0][0] != alpha + beta {
        return Err(Error::UnsupportedMatrix(format!(
            "{m:?} does not preserve the golden eigenlines (needs the form αI + β[[1,1],[1,0]])"
        )));
    }
    Ok((alpha, beta))
}

/// Slopes of the `U` and `S` edges: `(√5−1)/2` and `−(√5+1)/2`.
pub fn edge_slopes() -> (f64, f64) {
    let r5 = 5f64.sqrt();
    ((r5 - 1.0) / 2.0, -(r5 + 1.0) / 2.0)
}

/// The standard two-rectangle partition, verified exactly: interiors of all
/// lattice translates are disjoint, total area is 1, and edges along the
/// contracting eigenline of `A` (and of `A⁻¹`) map into the union of such
/// edges.
pub fn adler_weiss_partition(matrix: IntMatrix) -> Result<MarkovPartition> {
    let (alpha, beta) = decompose(matrix)?;
    let phi = Q5::phi();
    let inv_phi = Q5::new(frac(-1, 2), frac(1, 2));
    let lambda_u = &Q5::int(alpha) + &(&Q5::int(beta) * &phi);
    let lambda_s = &Q5::int(alpha) - &(&Q5::int(beta) * &inv_phi);
    // κ = 1/(φ² + 1) = (5 − √5)/10; (1,0) ↔ (φ²κ, κ), (0,1) ↔ (φκ, −φκ).
    let kappa = Q5::new(frac(1, 2), frac(-1, 10));
    let phi_k = &phi * &kappa;
    let phi2_k = &phi * &phi_k;
    let r0 = Rectangle::new(
        0,
        Interval::new(Q5::zero(), phi2_k.clone()),
        Interval::new(Q5::zero(), phi_k.clone()),
    );
    let r1 = Rectangle::new(
        1,
        Interval::new(kappa.clone(), phi2_k),
        Interval::new(phi_k.clone(), &phi_k + &kappa),
    );
    let partition = MarkovPartition {
        matrix,
        rectangles: vec![r0, r1],
        lambda_u,
        lambda_s,
    };
    partition.verify()?;
    Ok(partition)
}

/// Lattice translates that can meet a box: a window around its plane extent.
fn translate_window(u: &Interval, s: &Interval, other: &Rectangle) -> Vec<[i64; 2]> {
    let corners = [(&u.lo, &s.lo), (&u.hi, &s.lo), (&u.hi, &s.hi), (&u.lo, &s.hi)];
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for (a, b) in corners {
        let (x, y) = from_eigen(a, b);
        let p = [x.to_f64(), y.to_f64()];
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let mut olo = [f64::INFINITY; 2];
    let mut ohi = [f64::NEG_INFINITY; 2];
    for v in other.vertices {
        let p = [v.x, v.y];
        for k in 0..2 {
            olo[k] = olo[k].min(p[k]);
            ohi[k] = ohi[k].max(p[k]);
        }
    }
    let range = |k: usize| ((lo[k] - ohi[k]).floor() as i64 - 1)..=((hi[k] - olo[k]).ceil() as i64 + 1);
    let mut out = Vec::new();
    for tx in range(0) {
        for ty in range(1) {
            out.push([tx, ty]);
        }
    }
    out
}

/// Which coordinate is constant along an edge family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EdgeKind {
    /// `u` constant: edges along `S`.
    ConstU,
    /// `s` constant: edges along `U`.
    ConstS,
}

impl MarkovPartition {
    pub fn rectangle(&self, id: usize) -> Option<&Rectangle> {
        self.rectangles.get(id)
    }

    /// Exact image box of `R_i` under `A`.
    fn image(&self, r: &Rectangle) -> (Interval, Interval) {
        (r.u.scaled(&self.lambda_u), r.s.scaled(&self.lambda_s))
    }

    fn verify(&self) -> Result<()> {
        let total = self.rectangles.iter().fold(Q5::zero(), |acc, r| &acc + &r.area());
        if total != Q5::int(1) {
            return Err(Error::VerificationFailure(format!(
                "rectangle areas sum to {total}, not 1"
            )));
        }
        for a in &self.rectangles {
            for b in &self.rectangles {
                for t in translate_window(&a.u, &a.s, b) {
                    if a.id == b.id && t == [0, 0] {
                        continue;
                    }
                    let (du, ds) = lattice_offset(t);
                    if a.u.interiors_meet(&b.u.shifted(&du)) && a.s.interiors_meet(&b.s.shifted(&ds)) {
                        return Err(Error::VerificationFailure(format!(
                            "R{} overlaps R{} + {t:?}",
                            a.id, b.id
                        )));
                    }
                }
            }
        }
        let one = Q5::int(1);
        let inv_u = self.lambda_u.recip().ok_or(Error::NotHyperbolic)?;
        let inv_s = self.lambda_s.recip().ok_or(Error::NotHyperbolic)?;
        for (lu, ls) in [(&self.lambda_u, &self.lambda_s), (&inv_u, &inv_s)] {
            // Edges along the contracting eigenline are invariant.
            let kind = if ls.abs() < one {
                EdgeKind::ConstU
            } else {
                EdgeKind::ConstS
            };
            for r in &self.rectangles {
                for (c, span) in self.edges(r, kind) {
                    let (c, span) = match kind {
                        EdgeKind::ConstU => (&c * lu, span.scaled(ls)),
                        EdgeKind::ConstS => (&c * ls, span.scaled(lu)),
                    };
                    if !self.edge_covered(kind, &c, &span) {
                        return Err(Error::VerificationFailure(format!(
                            "image of an edge of R{} leaves the partition boundary",
                            r.id
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn edges(&self, r: &Rectangle, kind: EdgeKind) -> Vec<(Q5, Interval)> {
        match kind {
            EdgeKind::ConstU => vec![(r.u.lo.clone(), r.s.clone()), (r.u.hi.clone(), r.s.clone())],
            EdgeKind::ConstS => vec![(r.s.lo.clone(), r.u.clone()), (r.s.hi.clone(), r.u.clone())],
        }
    }

    /// The segment `{coord = c} × span` lies in the union of same-kind edges
    /// of all lattice translates.
    fn edge_covered(&self, kind: EdgeKind, c: &Q5, span: &Interval) -> bool {
        let (u, s) = match kind {
            EdgeKind::ConstU => (Interval::new(c.clone(), c.clone()), span.clone()),
            EdgeKind::ConstS => (span.clone(), Interval::new(c.clone(), c.clone())),
        };
        let mut pieces: Vec<Interval> = Vec::new();
        for r in &self.rectangles {
            for t in translate_window(&u, &s, r) {
                let (du, ds) = lattice_offset(t);
                let (shift_c, shift_span) = match kind {
                    EdgeKind::ConstU => (&du, &ds),
                    EdgeKind::ConstS => (&ds, &du),
                };
                for (ec, espan) in self.edges(r, kind) {
                    if &(&ec + shift_c) == c {
                        pieces.push(espan.shifted(shift_span));
                    }
                }
            }
        }
        pieces.sort_by(|a, b| a.lo.cmp(&b.lo));
        let mut reach = span.lo.clone();
        for p in &pieces {
            if p.lo > reach {
                break;
            }
            if p.hi > reach {
                reach = p.hi.clone();
            }
        }
        reach >= span.hi
    }

    /// The same rectangles under `A⁻¹`.
    pub fn inverse(&self) -> Result<Self> {
        let m = self.matrix;
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let inv = [[m[1][1] * det, -m[0][1] * det], [-m[1][0] * det, m[0][0] * det]];
        adler_weiss_partition(inv)
    }

    /// `A·v` for an integer vector.
    pub fn apply_int(&self, v: [i64; 2]) -> [i64; 2] {
        let m = self.matrix;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// Rectangles and a few neighbouring translates, over the unit square.
    pub fn to_svg(&self, size: f64) -> String {
        let mut all = Vec::new();
        for r in &self.rectangles {
            all.extend_from_slice(&r.vertices);
        }
        all.push(PlanePoint::new(0.0, 0.0));
        all.push(PlanePoint::new(1.0, 1.0));
        let mut canvas = SvgCanvas::fitted(&all, size);
        let fills = ["#9ecae1", "#fdae6b"];
        for r in &self.rectangles {
            canvas.polygon(&r.vertices, fills[r.id % fills.len()], "#333333");
        }
        let square = [
            PlanePoint::new(0.0, 0.0),
            PlanePoint::new(1.0, 0.0),
            PlanePoint::new(1.0, 1.0),
            PlanePoint::new(0.0, 1.0),
            PlanePoint::new(0.0, 0.0),
        ];
        canvas.polyline(&square, "#000000");
        let m = self.matrix;
        canvas.finish(&format!(
            "Markov partition for A = [[{}, {}], [{}, {}]] (linear model)",
            m[0][0], m[0][1], m[1][0], m[1][1]
        ))
    }
}

/// One allowed step `R_from → R_to + tag`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub tag: [i64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRelation {
    pub rectangles: usize,
    /// Sorted.
    pub entries: Vec<Transition>,
    set: HashSet<Transition>,
}

impl TransitionRelation {
    pub fn from_entries(rectangles: usize, mut entries: Vec<Transition>) -> Self {
        entries.sort();
        entries.dedup();
        let set = entries.iter().copied().collect();
        Self {
            rectangles,
            entries,
            set,
        }
    }

    pub fn contains(&self, from: usize, to: usize, tag: [i64; 2]) -> bool {
        self.set.contains(&Transition { from, to, tag })
    }

    pub fn outgoing(&self, from: usize) -> impl Iterator<Item = &Transition> {
        self.entries.iter().filter(move |t| t.from == from)
    }
}

/// All `(i, j, t)` with `A(R_i) ∩ int(R_j + t) ≠ ∅`, decided exactly.
pub fn transition_relation(p: &MarkovPartition) -> TransitionRelation {
    let mut entries = Vec::new();
    for ri in &p.rectangles {
        let (iu, is) = p.image(ri);
        for rj in &p.rectangles {
            for t in translate_window(&iu, &is, rj) {
                let (du, ds) = lattice_offset(t);
                if iu.interiors_meet(&rj.u.shifted(&du)) && is.interiors_meet(&rj.s.shifted(&ds)) {
                    entries.push(Transition {
                        from: ri.id,
                        to: rj.id,
                        tag: t,
                    });
                }
            }
        }
    }
    TransitionRelation::from_entries(p.rectangles.len(), entries)
}

/// A lifted rectangle `R_id + w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Node {
    pub id: usize,
    pub w: [i64; 2],
}

impl Node {
    pub fn new(id: usize, w: [i64; 2]) -> Self {
        Self { id, w }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{},{}", self.id, self.w[0], self.w[1])
    }
}

impl FromStr for Node {
    type Err = Error;
    fn from_str(line: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("expected \"id:vx,vy\", got {line:?}"));
        let (id, rest) = line.trim().split_once(':').ok_or_else(bad)?;
        let (vx, vy) = rest.split_once(',').ok_or_else(bad)?;
        Ok(Node {
            id: id.trim().parse().map_err(|_| bad())?,
            w: [
                vx.trim().parse().map_err(|_| bad())?,
                vy.trim().parse().map_err(|_| bad())?,
            ],
        })
    }
}

/// Sequence of lifted rectangles; its length is the number of steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Chain {
    pub nodes: Vec<Node>,
}

impl Chain {
    pub fn new(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidArgument("a chain needs at least one rectangle".into()));
        }
        Ok(Self { nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn first(&self) -> Node {
        self.nodes[0]
    }

    pub fn last(&self) -> Node {
        self.nodes[self.nodes.len() - 1]
    }

    /// `w_last − w_first`.
    pub fn translation(&self) -> [i64; 2] {
        let (a, b) = (self.first().w, self.last().w);
        [b[0] - a[0], b[1] - a[1]]
    }

    /// Ends on the rectangle it starts on.
    pub fn is_closed(&self) -> bool {
        self.first().id == self.last().id && !self.is_empty()
    }

    /// Tags `t_k = w_{k+1} − w_k`.
    pub fn tags(&self) -> Vec<[i64; 2]> {
        self.nodes
            .windows(2)
            .map(|w| [w[1].w[0] - w[0].w[0], w[1].w[1] - w[0].w[1]])
            .collect()
    }

    /// Index of the first step not in the relation.
    pub fn first_invalid_step(&self, rel: &TransitionRelation) -> Option<usize> {
        self.nodes
            .windows(2)
            .zip(self.tags())
            .position(|(w, t)| !rel.contains(w[0].id, w[1].id, t))
    }

    pub fn to_text(&self) -> String {
        self.nodes.iter().map(|n| format!("{n}\n")).collect()
    }

    /// One `id:vx,vy` per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let nodes = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::parse)
            .collect::<Result<Vec<Node>>>()?;
        Self::new(nodes)
    }
}

/// Shortest chain from `start` to exactly `target`, by breadth-first search.
pub fn connecting_chain(rel: &TransitionRelation, start: Node, target: Node, max_len: usize) -> Result<Chain> {
    bfs(rel, start, max_len, |n| n == target)
}

/// Shortest chain from `start` to any lattice translate of `R_target`.
pub fn connecting_chain_any(rel: &TransitionRelation, start: Node, target: usize, max_len: usize) -> Result<Chain> {
    bfs(rel, start, max_len, |n| n.id == target)
}

fn bfs(rel: &TransitionRelation, start: Node, max_len: usize, done: impl Fn(Node) -> bool) -> Result<Chain> {
    let mut parent: HashMap<Node, Option<Node>> = HashMap::from([(start, None)]);
    let mut queue = VecDeque::from([(start, 0usize)]);
    while let Some((node, depth)) = queue.pop_front() {
        if done(node) {
            let mut nodes = vec![node];
            let mut cur = node;
            while let Some(Some(prev)) = parent.get(&cur) {
                nodes.push(*prev);
                cur = *prev;
            }
            nodes.reverse();
            return Chain::new(nodes);
        }
        if depth == max_len {
            continue;
        }
        for t in rel.outgoing(node.id) {
            let next = Node::new(t.to, [node.w[0] + t.tag[0], node.w[1] + t.tag[1]]);
            if let Entry::Vacant(slot) = parent.entry(next) {
                slot.insert(Some(node));
                queue.push_back((next, depth + 1));
            }
        }
    }
    Err(Error::ChainNotFound {
        max_len,
        explored: parent.len(),
    })
}

fn det(a: [i64; 2], b: [i64; 2]) -> i64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Positive integers `ℓ` with `Σ ℓᵢ vᵢ = 0` and the smallest such sum.
/// Requires `0` strictly inside the hull of the three vectors; every
/// solution is then a multiple of the returned one.
pub fn zero_sum_coefficients(v: [[i64; 2]; 3], bound: u64) -> Result<[u64; 3]> {
    let k = [det(v[1], v[2]), det(v[2], v[0]), det(v[0], v[1])];
    let positive = k.iter().all(|&d| d > 0);
    let negative = k.iter().all(|&d| d < 0);
    if !(positive || negative) {
        return Err(Error::HullConditionFailed);
    }
    let g = k[0].gcd(&k[1]).gcd(&k[2]);
    let ell = k.map(|d| (d / g).unsigned_abs());
    if ell.iter().any(|&l| l > bound) {
        return Err(Error::NoIntegerSolution { bound });
    }
    Ok(ell)
}

/// `Γ_n` with its bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClosedChain {
    pub chain: Chain,
    pub ell: [u64; 3],
    pub n: u64,
    /// Step counts `kᵢ` of the three loops.
    pub k: [usize; 3],
    pub vectors: [[i64; 2]; 3],
}

impl ClosedChain {
    /// `p_n = n(ℓ₁k₁ + ℓ₂k₂ + ℓ₃k₃)`.
    pub fn period(&self) -> usize {
        self.chain.len()
    }
}

/// Concatenate `c_i` repeated `n·ℓᵢ` times, each copy translated to start
/// where the previous one ended. The loops must share their base rectangle.
pub fn build_closed_chain(loops: [&Chain; 3], n: u64, bound: u64) -> Result<ClosedChain> {
    if n == 0 {
        return Err(Error::InvalidArgument("multiplier n must be >= 1".into()));
    }
    let base = loops[0].first().id;
    for c in loops {
        if !c.is_closed() || c.first().id != base {
            return Err(Error::InvalidArgument(format!(
                "every loop must start and end on R{base}"
            )));
        }
    }
    let vectors = loops.map(Chain::translation);
    let ell = zero_sum_coefficients(vectors, bound)?;
    let mut nodes = vec![Node::new(base, [0, 0])];
    for (c, &l) in loops.iter().zip(&ell) {
        for _ in 0..n * l {
            let end = nodes[nodes.len() - 1].w;
            let start = c.first().w;
            nodes.extend(
                c.nodes[1..]
                    .iter()
                    .map(|m| Node::new(m.id, [m.w[0] - start[0] + end[0], m.w[1] - start[1] + end[1]])),
            );
        }
    }
    Ok(ClosedChain {
        chain: Chain::new(nodes)?,
        ell,
        n,
        k: loops.map(Chain::len),
        vectors,
    })
}

type RatPoint = [BigRational; 2];

/// Periodic point realizing a closed chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodicPoint {
    /// `y₀ ∈ R_{i₀}`, exact.
    pub lift: RatPoint,
    /// `y₀ mod ℤ²`.
    pub point: RatPoint,
    pub period: usize,
    /// `y₀, …, y_{p−1}` with `y_k ∈ R_{i_k}`.
    pub orbit: Vec<RatPoint>,
}

impl PeriodicPoint {
    /// `A^p x − x ∈ ℤ²`, checked by forward iteration.
    pub fn is_periodic_mod_lattice(&self, matrix: IntMatrix) -> bool {
        let mut y = self.point.clone();
        for _ in 0..self.period {
            y = apply_rat(matrix, &y);
        }
        (0..2).all(|k| (&y[k] - &self.point[k]).is_integer())
    }

    pub fn to_f64(&self) -> PlanePoint {
        PlanePoint::new(
            self.point[0].to_f64().unwrap_or(f64::NAN),
            self.point[1].to_f64().unwrap_or(f64::NAN),
        )
    }
}

fn apply_rat(m: IntMatrix, y: &RatPoint) -> RatPoint {
    [
        &y[0] * rat(m[0][0]) + &y[1] * rat(m[0][1]),
        &y[0] * rat(m[1][0]) + &y[1] * rat(m[1][1]),
    ]
}

type BigMatrix = [[BigInt; 2]; 2];

fn big_mul(a: &BigMatrix, b: &BigMatrix) -> BigMatrix {
    let e = |i: usize, j: usize| &a[i][0] * &b[0][j] + &a[i][1] * &b[1][j];
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

/// Solve `(A^p − I)y₀ = Σ_k A^{p−1−k} t_k`, then walk the orbit
/// `y_{k+1} = A·y_k − t_k` and check `y_k ∈ R_{i_k}` exactly.
pub fn periodic_from_closed_chain(p: &MarkovPartition, chain: &Chain) -> Result<PeriodicPoint> {
    if !chain.is_closed() {
        return Err(Error::InvalidArgument(
            "chain must end on the rectangle it starts on".into(),
        ));
    }
    let period = chain.len();
    let tags = chain.tags();
    let a: BigMatrix = p.matrix.map(|row| row.map(BigInt::from));
    // Horner: rhs = Σ A^{p−1−k} t_k, and power = A^p.
    let mut rhs = [BigInt::zero(), BigInt::zero()];
    let mut power: BigMatrix = [[BigInt::one(), BigInt::zero()], [BigInt::zero(), BigInt::one()]];
    for t in &tags {
        rhs = [
            &a[0][0] * &rhs[0] + &a[0][1] * &rhs[1] + t[0],
            &a[1][0] * &rhs[0] + &a[1][1] * &rhs[1] + t[1],
        ];
        power = big_mul(&a, &power);
    }
    let m = [
        [&power[0][0] - 1, power[0][1].clone()],
        [power[1][0].clone(), &power[1][1] - 1],
    ];
    let det = &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0];
    if det.is_zero() {
        return Err(Error::NotHyperbolic);
    }
    let y0: RatPoint = [
        BigRational::new(&m[1][1] * &rhs[0] - &m[0][1] * &rhs[1], det.clone()),
        BigRational::new(&m[0][0] * &rhs[1] - &m[1][0] * &rhs[0], det),
    ];
    let mut orbit = Vec::with_capacity(period);
    let mut y = y0.clone();
    for (k, t) in tags.iter().enumerate() {
        let r = &p.rectangles[chain.nodes[k].id];
        if !r.contains(&y[0], &y[1]) {
            return Err(Error::ItineraryMismatch { step: k });
        }
        let next = apply_rat(p.matrix, &y);
        orbit.push(std::mem::replace(&mut y, [&next[0] - rat(t[0]), &next[1] - rat(t[1])]));
    }
    if y != y0 {
        return Err(Error::ItineraryMismatch { step: period });
    }
    let point = [&y0[0] - y0[0].floor(), &y0[1] - y0[1].floor()];
    Ok(PeriodicPoint {
        lift: y0,
        point,
        period,
        orbit,
    })
}

/// Random closed chain with `len` steps: a random walk on the relation whose
/// last step returns to the starting rectangle.
pub fn random_closed_chain<R: Rng>(rel: &TransitionRelation, start: usize, len: usize, rng: &mut R) -> Result<Chain> {
    if len == 0 {
        return Err(Error::InvalidArgument("closed chains need at least one step".into()));
    }
    for _ in 0..1000 {
        let mut nodes = vec![Node::new(start, [0, 0])];
        let mut ok = true;
        for step in 0..len {
            let cur = nodes[nodes.len() - 1];
            let choices: Vec<&Transition> = rel
                .outgoing(cur.id)
                .filter(|t| step + 1 < len || t.to == start)
                .collect();
            if choices.is_empty() {
                ok = false;
                break;
            }
            let t = choices[rng.gen_range(0..choices.len())];
            nodes.push(Node::new(t.to, [cur.w[0] + t.tag[0], cur.w[1] + t.tag[1]]));
        }
        if ok {
            return Chain::new(nodes);
        }
    }
    Err(Error::ChainNotFound {
        max_len: len,
        explored: 1000,
    })
}

/// Piecewise-affine closed curve around the triangle
/// `y, y + nℓ₁v₁, y + nℓ₁v₁ + nℓ₂v₂`, spending time `nℓᵢkᵢ` on edge `i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriangleTrack {
    pub vertices: [PlanePoint; 3],
    pub durations: [f64; 3],
}

impl TriangleTrack {
    pub fn new(vertices: [PlanePoint; 3], durations: [f64; 3]) -> Result<Self> {
        if durations.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::InvalidArgument("edge durations must be positive".into()));
        }
        Ok(Self { vertices, durations })
    }

    pub fn from_loops(y: PlanePoint, vectors: [[i64; 2]; 3], ell: [u64; 3], k: [usize; 3], n: u64) -> Result<Self> {
        let step = |i: usize| {
            let m = (n * ell[i]) as f64;
            PlanePoint::new(m * vectors[i][0] as f64, m * vectors[i][1] as f64)
        };
        let v1 = y + step(0);
        let v2 = v1 + step(1);
        let durations = [0, 1, 2].map(|i| (n * ell[i]) as f64 * k[i] as f64);
        Self::new([y, v1, v2], durations)
    }

    /// `p_n`.
    pub fn period(&self) -> f64 {
        self.durations.iter().sum()
    }

    /// `τ(t)`, periodic with period `p_n`.
    pub fn at(&self, t: f64) -> PlanePoint {
        let period = self.period();
        let mut r = t.rem_euclid(period);
        for i in 0..3 {
            if r <= self.durations[i] || i == 2 {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % 3];
                let f = (r / self.durations[i]).min(1.0);
                return a + (b - a) * f;
            }
            r -= self.durations[i];
        }
        unreachable!("the loop returns on its last edge")
    }

    /// Vertices in counterclockwise order.
    pub fn ccw_vertices(&self) -> [PlanePoint; 3] {
        let [a, b, c] = self.vertices;
        if (b - a).cross(c - a) >= 0.0 {
            [a, b, c]
        } else {
            [a, c, b]
        }
    }

    /// `τ` on `samples_per_edge` points per edge, vertices included.
    pub fn sampled(&self, samples_per_edge: usize) -> Result<SampledCurve> {
        let m = samples_per_edge.max(1);
        let mut times = Vec::with_capacity(3 * m + 1);
        let mut start = 0.0;
        for d in self.durations {
            times.extend((0..m).map(|j| start + d * j as f64 / m as f64));
            start += d;
        }
        times.push(self.period());
        let points = times.iter().map(|&t| self.at(t)).collect();
        SampledCurve::new(times, points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShadowReport {
    /// `max_t |orbit(t) − τ(t)|`.
    pub d: f64,
    /// `min_t` signed distance from an interior orbit to `∂T` (positive
    /// inside), when one is given.
    pub interior_margin: Option<f64>,
}

/// Distance between an orbit and the track at matched times, and the margin
/// of an optional second orbit inside the triangle.
pub fn triangle_shadow_check(
    orbit: &SampledCurve,
    track: &TriangleTrack,
    interior: Option<&SampledCurve>,
) -> ShadowReport {
    let d = orbit
        .times
        .iter()
        .zip(&orbit.points)
        .map(|(&t, &p)| p.distance(track.at(t)))
        .fold(0.0, f64::max);
    let ccw = track.ccw_vertices();
    let interior_margin = interior.map(|c| {
        c.points
            .iter()
            .map(|&p| containment_margin(p, &ccw))
            .fold(f64::INFINITY, f64::min)
    });
    ShadowReport { d, interior_margin }
}

/// Linking of a constant interior point with the track over one period:
/// `±1/p_n`.
pub fn triangle_linking_check(track: &TriangleTrack, interior: PlanePoint, samples_per_edge: usize) -> Result<f64> {
    if !(containment_margin(interior, &track.ccw_vertices()) > 0.0) {
        return Err(Error::PointNotInterior);
    }
    let tau = track.sampled(samples_per_edge)?;
    let point = SampledCurve::constant(tau.times.clone(), interior)?;
    Ok(linking_curves(&point, &tau, track.period())?.value)
}

/// Cover trajectory that follows each periodic orbit `n·ℓᵢ` periods in turn,
/// each piece started from the lattice translate of its base point nearest
/// the current triangle vertex. Pieces are joined by bounded jumps.
pub fn assemble_loop_orbit(
    iso: &Isotopy,
    orbits: [&PeriodicOrbitRecord; 3],
    n: u64,
    bound: u64,
    samples_per_unit: usize,
) -> Result<(SampledCurve, TriangleTrack)> {
    let vectors = orbits.map(|o| o.v);
    let ell = zero_sum_coefficients(vectors, bound)?;
    let k = orbits.map(|o| o.q as usize);
    let track = TriangleTrack::from_loops(orbits[0].z, vectors, ell, k, n)?;
    let m = samples_per_unit.max(1);
    let mut times = Vec::new();
    let mut points = Vec::new();
    let mut t0 = 0.0;
    for (i, orbit) in orbits.iter().enumerate() {
        let vertex = track.vertices[i];
        let z = orbit.z;
        let base = z + PlanePoint::new((vertex.x - z.x).round(), (vertex.y - z.y).round());
        let dur = track.durations[i];
        let steps = (dur * m as f64).round() as usize;
        let mut cursor = iso.cursor(base);
        let last = if i == 2 { steps } else { steps - 1 };
        for j in 0..=last {
            let tau = dur * j as f64 / steps as f64;
            times.push(t0 + tau);
            points.push(cursor.at(tau)?.point);
        }
        t0 += dur;
    }
    Ok((SampledCurve::new(times, points)?, track))
}

/// Cover trajectory of one point over `[0, t_end]`.
pub fn sample_orbit(iso: &Isotopy, z: PlanePoint, t_end: f64, samples_per_unit: usize) -> Result<SampledCurve> {
    let steps = ((t_end * samples_per_unit.max(1) as f64).round() as usize).max(1);
    let mut cursor = iso.cursor(z);
    let mut times = Vec::with_capacity(steps + 1);
    let mut points = Vec::with_capacity(steps + 1);
    for j in 0..=steps {
        let t = t_end * j as f64 / steps as f64;
        times.push(t);
        points.push(cursor.at(t)?.point);
    }
    SampledCurve::new(times, points)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CAT: IntMatrix = [[2, 1], [1, 1]];

    #[test]
    fn q5_sign_and_inverse() {
        let phi = Q5::phi();
        assert_eq!(phi.signum(), Ordering::Greater);
        let x = Q5::new(rat(2), rat(-1));
        assert_eq!(x.signum(), Ordering::Less);
        assert_eq!(&x * &x.recip().unwrap(), Q5::int(1));
        // φ² = φ + 1.
        assert_eq!(&phi * &phi, &phi + &Q5::int(1));
    }

    #[test]
    fn eigen_coords_round_trip() {
        let (x, y) = (frac(3, 7), frac(-2, 5));
        let (u, s) = eigen_coords(&x, &y);
        let (bx, by) = from_eigen(&u, &s);
        assert_eq!(bx, Q5::rational(x));
        assert_eq!(by, Q5::rational(y));
    }

    #[test]
    fn cat_partition_verifies() {
        let p = adler_weiss_partition(CAT).unwrap();
        assert_eq!(p.rectangles.len(), 2);
        assert_eq!(p.lambda_u, &Q5::phi() * &Q5::phi());
    }

    #[test]
    fn origin_fixed_point() {
        let p = adler_weiss_partition(CAT).unwrap();
        let chain = Chain::parse("0:0,0\n0:0,0\n").unwrap();
        let pt = periodic_from_closed_chain(&p, &chain).unwrap();
        assert_eq!(pt.point, [rat(0), rat(0)]);
    }

    #[test]
    fn chain_text_round_trip() {
        let c = Chain::new(vec![Node::new(0, [0, 0]), Node::new(1, [-1, 2])]).unwrap();
        assert_eq!(Chain::parse(&c.to_text()).unwrap(), c);
        assert!(Chain::parse("0:1").is_err());
    }
}
