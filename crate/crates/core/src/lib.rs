//! Torsion, linking numbers, rotation sets and symplectic actions of surface
//! diffeomorphisms given as isotopies from the identity.
//!
//! Angles are measured in turns throughout. Points live in cover
//! coordinates: torus and annulus orbits are never reduced unless asked.

// Negated float comparisons are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod action;
pub mod chains;
pub mod demos;
pub mod error;
pub mod export;
pub mod geometry;
pub mod lift;
pub mod linking;
pub mod maps;
pub mod rotset;
pub mod torsion;
pub mod witness;
pub mod zoo;

pub use error::{Error, Result};
pub use geometry::{Mat2, PlanePoint};
pub use lift::{LiftOptions, LiftedAngleTrack};
pub use linking::{LinkingEstimate, SampledCurve};
pub use maps::{Isotopy, SurfaceModel, UnitTangent};
pub use torsion::TorsionEstimate;
