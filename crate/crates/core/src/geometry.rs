//! Plane points, 2×2 matrices and convex polygons.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// A point (or vector) of the affine plane, in cover coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub const ORIGIN: PlanePoint = PlanePoint { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector pointing `turns` full turns counterclockwise from (1, 0).
    #[inline]
    pub fn from_turns(turns: f64) -> Self {
        let (s, c) = (TAU * turns).sin_cos();
        Self { x: c, y: s }
    }

    #[inline]
    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product.
    #[inline]
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    #[inline]
    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        Self::new(self.x / n, self.y / n)
    }

    /// Argument in turns, in `[0, 1)`.
    pub fn turns(self) -> f64 {
        let a = self.y.atan2(self.x) / TAU;
        let a = a - a.floor();
        // a.floor() can leave exactly 1.0 after rounding
        if a >= 1.0 {
            0.0
        } else {
            a
        }
    }

    /// Rotate by a quarter turn counterclockwise.
    #[inline]
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs())
    }
}

/// Signed angle from `a` to `b` in turns, in `(-1/2, 1/2]`.
#[inline]
pub fn signed_turns_between(a: PlanePoint, b: PlanePoint) -> f64 {
    a.cross(b).atan2(a.dot(b)) / TAU
}

impl fmt::Display for PlanePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Add for PlanePoint {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for PlanePoint {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for PlanePoint {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for PlanePoint {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Mul<f64> for PlanePoint {
    type Output = Self;
    #[inline]
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl Mul<PlanePoint> for f64 {
    type Output = PlanePoint;
    #[inline]
    fn mul(self, p: PlanePoint) -> PlanePoint {
        p * self
    }
}

impl Neg for PlanePoint {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl From<(f64, f64)> for PlanePoint {
    fn from((x, y): (f64, f64)) -> Self {
        Self::new(x, y)
    }
}

/// Row-major 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    pub const ZERO: Mat2 = Mat2 {
        a: 0.0,
        b: 0.0,
        c: 0.0,
        d: 0.0,
    };

    #[inline]
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    /// Matrix with the given columns.
    #[inline]
    pub fn from_columns(c0: PlanePoint, c1: PlanePoint) -> Self {
        Self::new(c0.x, c1.x, c0.y, c1.y)
    }

    /// Rotation by `radians` counterclockwise.
    #[inline]
    pub fn rotation(radians: f64) -> Self {
        let (s, c) = radians.sin_cos();
        Self::new(c, -s, s, c)
    }

    /// Outer product `u vᵀ`.
    #[inline]
    pub fn outer(u: PlanePoint, v: PlanePoint) -> Self {
        Self::new(u.x * v.x, u.x * v.y, u.y * v.x, u.y * v.y)
    }

    #[inline]
    pub fn col0(&self) -> PlanePoint {
        PlanePoint::new(self.a, self.c)
    }

    #[inline]
    pub fn col1(&self) -> PlanePoint {
        PlanePoint::new(self.b, self.d)
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Self::new(self.d / det, -self.b / det, -self.c / det, self.a / det))
    }

    #[inline]
    pub fn apply(&self, v: PlanePoint) -> PlanePoint {
        PlanePoint::new(self.a * v.x + self.b * v.y, self.c * v.x + self.d * v.y)
    }

    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.a, self.c, self.b, self.d)
    }
}

impl Default for Mat2 {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    #[inline]
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    #[inline]
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }
}

impl Mul<PlanePoint> for Mat2 {
    type Output = PlanePoint;
    #[inline]
    fn mul(self, v: PlanePoint) -> PlanePoint {
        self.apply(v)
    }
}

/// Convex hull by Andrew's monotone chain; counterclockwise, no collinear
/// vertices. Degenerate inputs give one or two vertices.
pub fn convex_hull(points: &[PlanePoint]) -> Vec<PlanePoint> {
    let mut pts: Vec<PlanePoint> = points.iter().copied().filter(|p| p.is_finite()).collect();
    pts.sort_by(|p, q| p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let turn = |o: PlanePoint, a: PlanePoint, b: PlanePoint| (a - o).cross(b - o);
    let mut lower: Vec<PlanePoint> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<PlanePoint> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Signed area (positive for counterclockwise order).
pub fn polygon_area(vertices: &[PlanePoint]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    (0..n).map(|i| vertices[i].cross(vertices[(i + 1) % n])).sum::<f64>() / 2.0
}

/// Every consecutive vertex triple turns left (strictly).
pub fn is_convex_ccw(vertices: &[PlanePoint]) -> bool {
    let n = vertices.len();
    if n < 3 {
        return true;
    }
    (0..n).all(|i| {
        let o = vertices[i];
        let a = vertices[(i + 1) % n];
        let b = vertices[(i + 2) % n];
        (a - o).cross(b - o) > 0.0
    })
}

/// Distance from `p` to the segment `[a, b]`.
pub fn segment_distance(p: PlanePoint, a: PlanePoint, b: PlanePoint) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sq();
    if len2 == 0.0 {
        return p.distance(a);
    }
    let s = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * s)
}

/// Distance from `p` to the boundary of the convex polygon.
pub fn boundary_distance(p: PlanePoint, vertices: &[PlanePoint]) -> f64 {
    match vertices.len() {
        0 => f64::INFINITY,
        1 => p.distance(vertices[0]),
        n => (0..n)
            .map(|i| segment_distance(p, vertices[i], vertices[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Signed containment margin for a counterclockwise convex polygon: positive
/// inside (distance to the boundary), negative outside, zero on the boundary.
/// Degenerate polygons have empty interior so the margin is never positive.
pub fn containment_margin(p: PlanePoint, vertices: &[PlanePoint]) -> f64 {
    let d = boundary_distance(p, vertices);
    if vertices.len() < 3 {
        return -d;
    }
    let n = vertices.len();
    let inside = (0..n).all(|i| {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        (b - a).cross(p - a) >= 0.0
    });
    if inside {
        d
    } else {
        -d
    }
}

/// Distance from `p` to the convex polygon seen as a closed region.
pub fn region_distance(p: PlanePoint, vertices: &[PlanePoint]) -> f64 {
    (-containment_margin(p, vertices)).max(0.0)
}

/// Hausdorff distance between two convex polygons seen as closed regions.
/// For convex regions the supremum is attained at a vertex.
pub fn hausdorff_distance(a: &[PlanePoint], b: &[PlanePoint]) -> f64 {
    let one_way =
        |from: &[PlanePoint], to: &[PlanePoint]| from.iter().map(|&p| region_distance(p, to)).fold(0.0_f64, f64::max);
    one_way(a, b).max(one_way(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn turns_is_in_unit_interval() {
        assert_eq!(PlanePoint::new(1.0, 0.0).turns(), 0.0);
        assert!((PlanePoint::new(0.0, 1.0).turns() - 0.25).abs() < 1e-15);
        assert!((PlanePoint::new(0.0, -1.0).turns() - 0.75).abs() < 1e-15);
        let tiny_below = PlanePoint::new(1.0, -1e-300).turns();
        assert!((0.0..1.0).contains(&tiny_below));
    }

    #[test]
    fn signed_turns() {
        let e1 = PlanePoint::new(1.0, 0.0);
        assert!((signed_turns_between(e1, e1.perp()) - 0.25).abs() < 1e-15);
        assert!((signed_turns_between(e1.perp(), e1) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn hull_of_square_with_interior_points() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.5), (0.5, 0.0)].map(PlanePoint::from);
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
        assert!(is_convex_ccw(&hull));
        assert!((polygon_area(&hull) - 1.0).abs() < 1e-15);
        assert!(containment_margin(PlanePoint::new(0.5, 0.5), &hull) > 0.49);
        assert!(containment_margin(PlanePoint::new(2.0, 0.5), &hull) < -0.99);
    }

    #[test]
    fn hull_degenerate() {
        let same = [PlanePoint::new(0.3, 0.3); 5];
        assert_eq!(convex_hull(&same).len(), 1);
        let line = [(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)].map(PlanePoint::from);
        assert_eq!(convex_hull(&line).len(), 2);
    }

    #[test]
    fn hausdorff_of_nested_squares() {
        let sq = |s: f64| {
            vec![
                PlanePoint::new(-s, -s),
                PlanePoint::new(s, -s),
                PlanePoint::new(s, s),
                PlanePoint::new(-s, s),
            ]
        };
        let d = hausdorff_distance(&sq(1.0), &sq(2.0));
        assert!((d - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn matrix_algebra() {
        let m = Mat2::new(2.0, 1.0, 1.0, 1.0);
        let inv = m.inverse().unwrap();
        let id = m * inv;
        assert!((id - Mat2::IDENTITY).max_abs() < 1e-15);
        let r = Mat2::rotation(std::f64::consts::FRAC_PI_2);
        let v = r * PlanePoint::new(1.0, 0.0);
        assert!((v - PlanePoint::new(0.0, 1.0)).norm() < 1e-15);
    }
}
