//! The shipped isotopies, and their construction from a textual map spec.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::action::{hamiltonian_isotopy, HamiltonianProfile};
use crate::error::{Error, Result};
use crate::geometry::{Mat2, PlanePoint};
use crate::maps::{ClosedFormFamily, Isotopy, SurfaceModel, VectorField};

/// Which representation to build when a map has more than one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepresentationKind {
    #[default]
    ClosedForm,
    Flow,
}

#[derive(Debug)]
struct IdentityFamily;

impl ClosedFormFamily for IdentityFamily {
    fn eval(&self, _s: f64, p: PlanePoint) -> PlanePoint {
        p
    }

    fn jacobian(&self, _s: f64, _p: PlanePoint) -> Mat2 {
        Mat2::IDENTITY
    }
}

pub fn identity(surface: SurfaceModel) -> Isotopy {
    Isotopy::closed_form(surface, IdentityFamily, true, "identity")
}

/// Rigid rotation about `center` at `omega` turns per unit time.
#[derive(Debug)]
struct RotationFamily {
    center: PlanePoint,
    omega: f64,
}

impl ClosedFormFamily for RotationFamily {
    fn eval(&self, s: f64, p: PlanePoint) -> PlanePoint {
        self.center + Mat2::rotation(TAU * self.omega * s) * (p - self.center)
    }

    fn jacobian(&self, s: f64, _p: PlanePoint) -> Mat2 {
        Mat2::rotation(TAU * self.omega * s)
    }
}

#[derive(Debug)]
struct RotationField {
    center: PlanePoint,
    omega: f64,
}

impl VectorField for RotationField {
    fn velocity(&self, _s: f64, p: PlanePoint) -> PlanePoint {
        (p - self.center).perp() * (TAU * self.omega)
    }

    fn gradient(&self, _s: f64, _p: PlanePoint) -> Mat2 {
        Mat2::new(0.0, -TAU * self.omega, TAU * self.omega, 0.0)
    }
}

/// Rotation of the plane about `center`, `omega` turns per unit time.
pub fn rotation(center: PlanePoint, omega: f64) -> Isotopy {
    Isotopy::closed_form(
        SurfaceModel::Plane,
        RotationFamily { center, omega },
        true,
        format!("rotation(omega={omega})"),
    )
}

/// Rotation about the origin restricted to the unit disc.
pub fn disc_rotation(omega: f64, repr: RepresentationKind) -> Isotopy {
    let label = format!("disc-rotation(omega={omega})");
    let center = PlanePoint::ORIGIN;
    match repr {
        RepresentationKind::ClosedForm => {
            Isotopy::closed_form(SurfaceModel::Disc, RotationFamily { center, omega }, true, label)
        }
        RepresentationKind::Flow => Isotopy::flow(SurfaceModel::Disc, RotationField { center, omega }, true, label),
    }
}

#[derive(Debug)]
struct TranslationFamily {
    v: PlanePoint,
}

impl ClosedFormFamily for TranslationFamily {
    fn eval(&self, s: f64, p: PlanePoint) -> PlanePoint {
        p + self.v * s
    }

    fn jacobian(&self, _s: f64, _p: PlanePoint) -> Mat2 {
        Mat2::IDENTITY
    }
}

/// `f_t = Id + t·v`.
pub fn translation(surface: SurfaceModel, v: PlanePoint) -> Isotopy {
    Isotopy::closed_form(
        surface,
        TranslationFamily { v },
        true,
        format!("translation({}, {})", v.x, v.y),
    )
}

/// Rigid rotation of the annulus `ℝ/ℤ × ℝ` by `alpha` turns.
pub fn annulus_rotation(alpha: f64) -> Isotopy {
    Isotopy::closed_form(
        SurfaceModel::Annulus,
        TranslationFamily {
            v: PlanePoint::new(alpha, 0.0),
        },
        true,
        format!("annulus-rotation(alpha={alpha})"),
    )
}

#[derive(Debug)]
struct LinearShearFamily;

impl ClosedFormFamily for LinearShearFamily {
    fn eval(&self, s: f64, p: PlanePoint) -> PlanePoint {
        PlanePoint::new(p.x + s * p.y, p.y)
    }

    fn jacobian(&self, s: f64, _p: PlanePoint) -> Mat2 {
        Mat2::new(1.0, s, 0.0, 1.0)
    }
}

/// `f_t = [[1, t], [0, 1]]` on the plane.
pub fn linear_shear() -> Isotopy {
    Isotopy::closed_form(SurfaceModel::Plane, LinearShearFamily, true, "linear-shear")
}

/// Fractional part; reducing before `sin` keeps the shears exactly periodic
/// and avoids slow argument reduction far out in the cover.
#[inline]
fn frac(v: f64) -> f64 {
    v - v.floor()
}

/// `(x, y) ↦ (x + s·a·sin 2πy, y)`.
#[derive(Debug)]
struct HorizontalShear {
    a: f64,
}

impl ClosedFormFamily for HorizontalShear {
    fn eval(&self, s: f64, p: PlanePoint) -> PlanePoint {
        PlanePoint::new(p.x + s * self.a * (TAU * frac(p.y)).sin(), p.y)
    }

    fn jacobian(&self, s: f64, p: PlanePoint) -> Mat2 {
        Mat2::new(1.0, s * self.a * TAU * (TAU * frac(p.y)).cos(), 0.0, 1.0)
    }
}

impl VectorField for HorizontalShear {
    fn velocity(&self, _s: f64, p: PlanePoint) -> PlanePoint {
        PlanePoint::new(self.a * (TAU * frac(p.y)).sin(), 0.0)
    }

    fn gradient(&self, _s: f64, p: PlanePoint) -> Mat2 {
        Mat2::new(0.0, self.a * TAU * (TAU * frac(p.y)).cos(), 0.0, 0.0)
    }
}

/// `(x, y) ↦ (x, y + s·b·sin 2πx)`.
#[derive(Debug)]
struct VerticalShear {
    b: f64,
}

impl ClosedFormFamily for VerticalShear {
    fn eval(&self, s: f64, p: PlanePoint) -> PlanePoint {
        PlanePoint::new(p.x, p.y + s * self.b * (TAU * frac(p.x)).sin())
    }

    fn jacobian(&self, s: f64, p: PlanePoint) -> Mat2 {
        Mat2::new(1.0, 0.0, s * self.b * TAU * (TAU * frac(p.x)).cos(), 1.0)
    }
}

impl VectorField for VerticalShear {
    fn velocity(&self, _s: f64, p: PlanePoint) -> PlanePoint {
        PlanePoint::new(0.0, self.b * (TAU * frac(p.x)).sin())
    }

    fn gradient(&self, _s: f64, p: PlanePoint) -> Mat2 {
        Mat2::new(0.0, 0.0, self.b * TAU * (TAU * frac(p.x)).cos(), 0.0)
    }
}

/// Torus isotopy: horizontal shear by `a·sin 2πy` on `[0, ½]`, then vertical
/// shear by `b·sin 2πx` on `[½, 1]`. The time-1 lift is
/// `x' = x + a sin 2πy`, `y' = y + b sin 2πx'`.
pub fn double_shear(a: f64, b: f64, repr: RepresentationKind) -> Isotopy {
    let torus = SurfaceModel::Torus;
    let (h, v) = match repr {
        RepresentationKind::ClosedForm => (
            Isotopy::closed_form(torus, HorizontalShear { a }, true, "h-shear"),
            Isotopy::closed_form(torus, VerticalShear { b }, true, "v-shear"),
        ),
        RepresentationKind::Flow => (
            Isotopy::flow(torus, HorizontalShear { a }, true, "h-shear"),
            Isotopy::flow(torus, VerticalShear { b }, true, "v-shear"),
        ),
    };
    Isotopy::concatenate(vec![h, v], format!("double-shear(a={a}, b={b})")).expect("both pieces live on the torus")
}

/// Time-1 lift of the double shear, evaluated directly.
pub fn double_shear_step(a: f64, b: f64, p: PlanePoint) -> PlanePoint {
    let x = p.x + a * (TAU * frac(p.y)).sin();
    PlanePoint::new(x, p.y + b * (TAU * frac(x)).sin())
}

/// Textual description of a map, as found in the `[map]` section of an
/// experiment config.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    #[serde(default)]
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub representation: Option<RepresentationKind>,
    #[serde(default)]
    pub time_step: Option<f64>,
    /// Surface for `identity` and `translation`.
    #[serde(default)]
    pub surface: Option<SurfaceModel>,
    /// Hamiltonian profile for `radial-hamiltonian`: `zero`, `cubic`, `bumps`.
    #[serde(default)]
    pub profile: Option<String>,
}

pub const MAP_KINDS: &[&str] = &[
    "identity",
    "rotation",
    "disc-rotation",
    "translation",
    "annulus-rotation",
    "linear-shear",
    "double-shear",
    "radial-hamiltonian",
];

impl MapSpec {
    pub fn is_empty(&self) -> bool {
        self.kind.trim().is_empty()
    }

    pub fn build(&self) -> Result<Isotopy> {
        let kind = self.kind.trim();
        let allowed: &[&str] = match kind {
            "identity" | "linear-shear" => &[],
            "rotation" => &["omega", "cx", "cy"],
            "disc-rotation" => &["omega"],
            "translation" => &["vx", "vy"],
            "annulus-rotation" => &["alpha"],
            "double-shear" => &["a", "b"],
            "radial-hamiltonian" => &["lambda", "a1", "c1", "a2", "c2"],
            "" => return Err(Error::InvalidArgument("map kind is missing".into())),
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown map kind '{other}' (expected one of {})",
                    MAP_KINDS.join(", ")
                )))
            }
        };
        if let Some(bad) = self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::InvalidArgument(format!(
                "parameter '{bad}' is not accepted by map kind '{kind}'"
            )));
        }
        if self.profile.is_some() && kind != "radial-hamiltonian" {
            return Err(Error::InvalidArgument(format!(
                "'profile' is not accepted by map kind '{kind}'"
            )));
        }
        let get = |k: &str, default: f64| self.params.get(k).copied().unwrap_or(default);
        let repr = self.representation.unwrap_or_default();
        let needs_flow_support = matches!(kind, "disc-rotation" | "double-shear" | "radial-hamiltonian");
        if repr == RepresentationKind::Flow && !needs_flow_support {
            return Err(Error::InvalidArgument(format!(
                "map kind '{kind}' has no flow representation"
            )));
        }
        let iso = match kind {
            "identity" => identity(self.surface.unwrap_or(SurfaceModel::Plane)),
            "rotation" => rotation(PlanePoint::new(get("cx", 0.0), get("cy", 0.0)), get("omega", 0.0)),
            "disc-rotation" => disc_rotation(get("omega", 0.0), repr),
            "translation" => translation(
                self.surface.unwrap_or(SurfaceModel::Torus),
                PlanePoint::new(get("vx", 0.0), get("vy", 0.0)),
            ),
            "annulus-rotation" => annulus_rotation(get("alpha", 0.0)),
            "linear-shear" => linear_shear(),
            "double-shear" => double_shear(get("a", 1.0), get("b", 1.0), repr),
            "radial-hamiltonian" => {
                let lambda = get("lambda", 1.0);
                let profile = match self.profile.as_deref().unwrap_or("cubic") {
                    "zero" => HamiltonianProfile::Zero,
                    "cubic" => HamiltonianProfile::Cubic,
                    "bumps" => HamiltonianProfile::Bumps(vec![
                        (get("a1", 2.0), get("c1", 0.25)),
                        (get("a2", -1.0), get("c2", 1.0)),
                    ]),
                    other => {
                        return Err(Error::InvalidArgument(format!(
                            "unknown profile '{other}' (expected zero, cubic or bumps)"
                        )))
                    }
                };
                hamiltonian_isotopy(&profile.scaled(lambda), repr)?
            }
            _ => unreachable!("kind validated above"),
        };
        match self.time_step {
            Some(h) => iso.with_time_step(h),
            None => Ok(iso),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_shear_matches_direct_step() {
        let iso = double_shear(0.7, 0.4, RepresentationKind::ClosedForm);
        let p = PlanePoint::new(0.13, 0.77);
        let q = iso.eval(1.0, p).unwrap();
        assert!((q - double_shear_step(0.7, 0.4, p)).norm() < 1e-15);
    }

    #[test]
    fn spec_rejects_unknown_params() {
        let spec = MapSpec {
            kind: "double-shear".into(),
            params: [("c".to_string(), 1.0)].into_iter().collect(),
            ..Default::default()
        };
        assert!(matches!(spec.build(), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn spec_rejects_missing_kind() {
        assert!(MapSpec::default().build().is_err());
        assert!(MapSpec::default().is_empty());
    }

    #[test]
    fn spec_builds_flow_double_shear() {
        let spec = MapSpec {
            kind: "double-shear".into(),
            representation: Some(RepresentationKind::Flow),
            time_step: Some(0.01),
            ..Default::default()
        };
        let iso = spec.build().unwrap();
        assert!(iso.has_flow());
        assert_eq!(iso.time_step(), 0.01);
    }
}
