//! End-to-end pipelines: from a fixed point of nonzero action, or from
//! periodic orbits of a torus map, to a torsion witness.

use rayon::prelude::*;
use serde::Serialize;

use crate::action::{
    average_linking, find_nonzero_action_fixed_point, radial_fixed_candidates, ActionCandidate, AverageLinking,
    HamiltonianIsotopy, HamiltonianProfile,
};
use crate::error::{Error, Result};
use crate::geometry::PlanePoint;
use crate::linking::linking_n;
use crate::maps::Isotopy;
use crate::rotset::{
    estimate_rotation_set, halton_seeds, interior_rational_triple, realize_rational_vector, NewtonOptions,
    PeriodicOrbitRecord, RotationSetApprox,
};
use crate::witness::{existence_pipeline, find_witness, PipelineResult, WitnessCertificate, WitnessOptions};
use crate::zoo::{double_shear, RepresentationKind};

#[derive(Debug, Clone, PartialEq)]
pub struct Thm1Options {
    pub profile: HamiltonianProfile,
    pub lambda: f64,
    pub representation: RepresentationKind,
    /// Witness horizon.
    pub n: u32,
    /// Distance of the partner points from the fixed point.
    pub radius: f64,
    /// Number of partner points, equally spaced in angle.
    pub directions: usize,
    /// Horizon and sample count of the average-linking estimate.
    pub average_n: u32,
    pub average_samples: usize,
    pub seed: u64,
    pub action_tol: f64,
    pub witness: WitnessOptions,
}

impl Default for Thm1Options {
    fn default() -> Self {
        Self {
            profile: HamiltonianProfile::Cubic,
            lambda: 1.0,
            representation: RepresentationKind::ClosedForm,
            n: 100,
            radius: 0.05,
            directions: 8,
            average_n: 8,
            average_samples: 10_000,
            seed: 7,
            action_tol: 1e-6,
            witness: WitnessOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thm1Report {
    pub fixed_point: ActionCandidate,
    pub average: AverageLinking,
    pub pairs: Vec<(PlanePoint, PlanePoint)>,
    pub result: PipelineResult,
}

/// Fixed point of largest action, average linking around it, then a witness
/// from pairs (fixed point, nearby point).
pub fn thm1_demo(opts: &Thm1Options) -> Result<Thm1Report> {
    let profile = opts.profile.scaled(opts.lambda);
    let hi = HamiltonianIsotopy::new(profile, opts.representation)?;
    let candidates = radial_fixed_candidates(&hi.profile);
    let fixed_point = find_nonzero_action_fixed_point(&hi, &candidates, opts.action_tol)?;
    let x0 = fixed_point.point;
    let average = average_linking(
        &hi.isotopy,
        x0,
        opts.average_n,
        opts.average_samples,
        opts.seed,
        &opts.witness.lift,
    )?;
    let pairs: Vec<(PlanePoint, PlanePoint)> = (0..opts.directions.max(1))
        .map(|k| {
            let turns = k as f64 / opts.directions.max(1) as f64;
            (x0, x0 + PlanePoint::from_turns(turns) * opts.radius)
        })
        .collect();
    let result = existence_pipeline(&hi.isotopy, &pairs, opts.n, &opts.witness)?;
    Ok(Thm1Report {
        fixed_point,
        average,
        pairs,
        result,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Thm2Options {
    pub a: f64,
    pub b: f64,
    pub representation: RepresentationKind,
    /// Rotation-set grid and horizon.
    pub grid: usize,
    pub horizon: u64,
    /// Periods searched for orbits of rotation vector zero.
    pub max_period: u32,
    /// Newton seeds per period; each block of five seeds may give a new orbit.
    pub seeds: usize,
    /// Witness horizon.
    pub n: u32,
    /// Pairs tried in order of decreasing `|Linking_n|`.
    pub max_attempts: usize,
    pub witness: WitnessOptions,
}

impl Default for Thm2Options {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 1.0,
            representation: RepresentationKind::ClosedForm,
            grid: 64,
            horizon: 200,
            max_period: 3,
            seeds: 40,
            n: 50,
            max_attempts: 6,
            witness: WitnessOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairAttempt {
    pub x: PlanePoint,
    pub y: PlanePoint,
    pub linking: f64,
    /// `None` when a certificate was produced.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thm2Report {
    pub rotation_set: RotationSetApprox,
    /// Orbits realizing three affinely independent interior rotation vectors.
    pub realized: Vec<PeriodicOrbitRecord>,
    /// Orbits of rotation vector zero used to form pairs.
    pub orbits: Vec<PeriodicOrbitRecord>,
    pub attempts: Vec<PairAttempt>,
    pub certificate: WitnessCertificate,
}

/// Points of a periodic orbit in cover coordinates, starting at `z`.
fn orbit_points(f: &Isotopy, rec: &PeriodicOrbitRecord) -> Result<Vec<PlanePoint>> {
    let mut cursor = f.cursor(rec.z);
    (0..rec.q).map(|k| Ok(cursor.at(k as f64)?.point)).collect()
}

fn nearest_translate(x: PlanePoint, y: PlanePoint) -> PlanePoint {
    y + PlanePoint::new((x.x - y.x).round(), (x.y - y.y).round())
}

/// Rotation set, orbits realizing interior rational vectors, and a witness
/// from pairs of points on periodic orbits of rotation vector zero.
pub fn thm2_demo(opts: &Thm2Options) -> Result<Thm2Report> {
    let f = double_shear(opts.a, opts.b, opts.representation);
    let rotation_set = estimate_rotation_set(&f, opts.grid, opts.horizon)?;
    let newton = NewtonOptions::default();
    let seeds = halton_seeds(opts.seeds.max(1));
    let mut realized = Vec::new();
    if let Some(triple) = interior_rational_triple(&rotation_set, 8, 0.05) {
        for (p, p_prime, q) in triple {
            realized.push(realize_rational_vector(&f, p, p_prime, q, &seeds, &newton)?);
        }
    }

    let mut orbits: Vec<PeriodicOrbitRecord> = Vec::new();
    let mut points: Vec<(usize, PlanePoint)> = Vec::new();
    for q in 1..=opts.max_period.max(1) {
        for block in seeds.chunks(5) {
            let Ok(rec) = realize_rational_vector(&f, 0, 0, q, block, &newton) else {
                continue;
            };
            let pts = orbit_points(&f, &rec)?;
            let seen = points.iter().any(|&(_, p)| {
                let d = nearest_translate(p, pts[0]).distance(p);
                d < 1e-6
            });
            if !seen {
                points.extend(pts.into_iter().map(|p| (orbits.len(), p)));
                orbits.push(rec);
            }
        }
    }
    let mut pairs = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let x = points[i].1;
            let y = nearest_translate(x, points[j].1);
            if x.distance(y) > 1e-6 {
                pairs.push((x, y));
            }
        }
    }
    let lift = opts.witness.lift;
    let mut ranked: Vec<(f64, usize)> = pairs
        .par_iter()
        .enumerate()
        .map(|(k, &(x, y))| (linking_n(&f, x, y, opts.n, &lift).unwrap_or(0.0), k))
        .collect();
    ranked.sort_by(|a, b| b.0.abs().total_cmp(&a.0.abs()).then(a.1.cmp(&b.1)));

    let mut attempts = Vec::new();
    let mut last_error = None;
    for &(linking, k) in ranked.iter().take(opts.max_attempts) {
        if linking.abs() < opts.witness.eps_min {
            break;
        }
        let (x, y) = pairs[k];
        match find_witness(&f, x, y, opts.n, &opts.witness) {
            Ok(certificate) => {
                attempts.push(PairAttempt {
                    x,
                    y,
                    linking,
                    failure: None,
                });
                return Ok(Thm2Report {
                    rotation_set,
                    realized,
                    orbits,
                    attempts,
                    certificate,
                });
            }
            Err(e) => {
                attempts.push(PairAttempt {
                    x,
                    y,
                    linking,
                    failure: Some(e.to_string()),
                });
                last_error = Some(e);
            }
        }
    }
    Err(last_error.unwrap_or(Error::AllPairsZeroLinking {
        threshold: opts.witness.eps_min,
    }))
}
