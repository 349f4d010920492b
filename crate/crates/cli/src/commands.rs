use std::fmt::Write as _;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use torsionlab_core::action::{average_linking, symplectic_action, HamiltonianIsotopy, HamiltonianProfile, Primitive};
use torsionlab_core::chains::{
    adler_weiss_partition, connecting_chain_any, periodic_from_closed_chain, random_closed_chain, transition_relation,
    Node,
};
use torsionlab_core::demos::{thm1_demo, thm2_demo, Thm1Options, Thm2Options};
use torsionlab_core::export::write_csv;
use torsionlab_core::linking::linking_n;
use torsionlab_core::rotset::estimate_with_cloud;
use torsionlab_core::torsion::{default_schedule, torsion_orbit, TorsionRow};
use torsionlab_core::witness::{find_witness, WitnessOptions, WitnessRow};
use torsionlab_core::zoo::{MapSpec, RepresentationKind};
use torsionlab_core::{Error, Isotopy, LiftOptions, PlanePoint, Result};

use crate::config::{parse_point, Format};

/// Flag defaults double as config defaults: an omitted key means the same
/// as an omitted flag.
macro_rules! defaults_from_flags {
    ($($t:ty),*) => {$(
        impl Default for $t {
            fn default() -> Self {
                <$t as Parser>::parse_from(["torsionlab"])
            }
        }
    )*};
}

defaults_from_flags!(
    TorsionArgs,
    LinkingArgs,
    WitnessArgs,
    RotsetArgs,
    ActionArgs,
    ChainArgs,
    Thm1Args,
    Thm2Args
);

fn parse_repr(s: &str) -> std::result::Result<RepresentationKind, String> {
    match s {
        "closed-form" => Ok(RepresentationKind::ClosedForm),
        "flow" => Ok(RepresentationKind::Flow),
        _ => Err(format!("expected closed-form or flow, got {s:?}")),
    }
}

fn parse_matrix(s: &str) -> std::result::Result<[i64; 4], String> {
    let v: Vec<i64> = s
        .split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    v.try_into()
        .map_err(|_| format!("expected four integers a,b,c,d, got {s:?}"))
}

fn pt(p: [f64; 2]) -> PlanePoint {
    PlanePoint::new(p[0], p[1])
}

/// Orbit torsion at each point along a doubling schedule ending at `n`.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct TorsionArgs {
    /// Base point x,y (repeatable)
    #[arg(long = "point", value_parser = parse_point, default_values = ["0.5,0.5"])]
    #[serde(rename = "point")]
    pub points: Vec<[f64; 2]>,
    /// Initial tangent direction, in turns
    #[arg(long, default_value_t = 0.0)]
    pub xi_turns: f64,
    /// Largest horizon
    #[arg(long, default_value_t = 1024)]
    pub n: u32,
    /// Convergence tolerance of the last three horizons
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
}

/// Linking number of a pair at each horizon.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct LinkingArgs {
    #[arg(long, value_parser = parse_point, default_value = "0,0")]
    pub x: [f64; 2],
    #[arg(long, value_parser = parse_point, default_value = "0.5,0")]
    pub y: [f64; 2],
    /// Horizon (repeatable)
    #[arg(long = "n", default_values_t = [1u32, 10, 100])]
    #[serde(rename = "n")]
    pub ns: Vec<u32>,
}

/// Torsion witness from a linked pair.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct WitnessArgs {
    #[arg(long, value_parser = parse_point, default_value = "0,0")]
    pub x: [f64; 2],
    #[arg(long, value_parser = parse_point, default_value = "0.5,0")]
    pub y: [f64; 2],
    #[arg(long, default_value_t = 50)]
    pub n: u32,
}

/// Sampled outer proxy of the rotation set of a torus map.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RotsetArgs {
    /// Base points per side of the sampling grid
    #[arg(long, default_value_t = 32)]
    pub grid: usize,
    /// Orbit length
    #[arg(long, default_value_t = 1000)]
    pub n: u64,
}

/// Action of a radial Hamiltonian at a fixed point and the area average of
/// the linking number around it.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ActionArgs {
    /// zero, cubic or bumps
    #[arg(long, default_value = "cubic")]
    pub profile: String,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Bump term amplitude,radius for the bumps profile (repeatable)
    #[arg(long = "bump", value_parser = parse_point)]
    #[serde(rename = "bump")]
    pub bumps: Vec<[f64; 2]>,
    #[arg(long, value_parser = parse_repr, default_value = "closed-form")]
    pub representation: RepresentationKind,
    /// Fixed point x,y
    #[arg(long, value_parser = parse_point, default_value = "0,0")]
    pub x0: [f64; 2],
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 8)]
    pub n: u32,
}

/// Markov-partition chains of a linear toral automorphism.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ChainArgs {
    /// Matrix entries a,b,c,d of [[a,b],[c,d]]
    #[arg(long, value_parser = parse_matrix, default_value = "2,1,1,1")]
    pub matrix: [i64; 4],
    /// Rectangle the chain starts in, at translation (0,0)
    #[arg(long, default_value_t = 0)]
    pub start: usize,
    /// Shortest chain to any translate of this rectangle
    #[arg(long)]
    pub target: Option<usize>,
    #[arg(long, default_value_t = 32)]
    pub max_len: usize,
    /// Random closed chain of this many steps, with its periodic point
    #[arg(long)]
    pub closed_len: Option<usize>,
}

/// Fixed point of nonzero action, then a torsion witness next to it.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Thm1Args {
    /// zero, cubic or bumps
    #[arg(long, default_value = "cubic")]
    pub profile: String,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Bump term amplitude,radius for the bumps profile (repeatable)
    #[arg(long = "bump", value_parser = parse_point)]
    #[serde(rename = "bump")]
    pub bumps: Vec<[f64; 2]>,
    #[arg(long, value_parser = parse_repr, default_value = "closed-form")]
    pub representation: RepresentationKind,
    /// Witness horizon
    #[arg(long, default_value_t = 100)]
    pub n: u32,
    /// Distance of the partner points from the fixed point
    #[arg(long, default_value_t = 0.05)]
    pub radius: f64,
    #[arg(long, default_value_t = 8)]
    pub directions: usize,
    #[arg(long, default_value_t = 8)]
    pub average_n: u32,
    #[arg(long, default_value_t = 10_000)]
    pub average_samples: usize,
}

/// Rotation set and periodic orbits of the double shear, then a torsion
/// witness from a pair of periodic points.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Thm2Args {
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long, value_parser = parse_repr, default_value = "closed-form")]
    pub representation: RepresentationKind,
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    #[arg(long, default_value_t = 200)]
    pub horizon: u64,
    #[arg(long, default_value_t = 3)]
    pub max_period: u32,
    #[arg(long, default_value_t = 40)]
    pub seeds: usize,
    /// Witness horizon
    #[arg(long, default_value_t = 50)]
    pub n: u32,
    #[arg(long, default_value_t = 6)]
    pub max_attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Orbit torsion at given points
    Torsion(TorsionArgs),
    /// Linking numbers of a pair of points
    Linking(LinkingArgs),
    /// Torsion witness from a linked pair
    Witness(WitnessArgs),
    /// Rotation set of a torus map
    Rotset(RotsetArgs),
    /// Symplectic action and average linking of a radial Hamiltonian
    Action(ActionArgs),
    /// Markov-partition chains of a linear toral automorphism
    Chain(ChainArgs),
    /// Action pipeline ending in a torsion witness
    Thm1Demo(Thm1Args),
    /// Rotation-set pipeline ending in a torsion witness
    Thm2Demo(Thm2Args),
}

/// One output file before the provenance header is added.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    /// Appended to the file stem.
    pub suffix: &'static str,
    pub format: Format,
    pub body: String,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Torsion(_) => "torsion",
            Command::Linking(_) => "linking",
            Command::Witness(_) => "witness",
            Command::Rotset(_) => "rotset",
            Command::Action(_) => "action",
            Command::Chain(_) => "chain",
            Command::Thm1Demo(_) => "thm1-demo",
            Command::Thm2Demo(_) => "thm2-demo",
        }
    }

    /// Commands that act on the map of the `[map]` section.
    pub fn uses_map(&self) -> bool {
        matches!(
            self,
            Command::Torsion(_) | Command::Linking(_) | Command::Witness(_) | Command::Rotset(_)
        )
    }

    /// The artifacts this command writes, in order.
    pub fn planned(&self) -> Vec<(&'static str, Format)> {
        match self {
            Command::Rotset(_) | Command::Thm2Demo(_) => vec![("", Format::Csv), ("", Format::Svg)],
            Command::Chain(_) => vec![("", Format::Text), ("-partition", Format::Svg)],
            _ => vec![("", Format::Csv)],
        }
    }

    pub fn run(&self, map: &MapSpec, seed: u64) -> Result<Vec<Artifact>> {
        if self.uses_map() {
            let iso = map.build()?;
            match self {
                Command::Torsion(a) => torsion(&iso, a),
                Command::Linking(a) => linking(&iso, a),
                Command::Witness(a) => witness(&iso, a),
                Command::Rotset(a) => rotset(&iso, a),
                _ => unreachable!("uses_map covers these"),
            }
        } else {
            if !map.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "{} takes no [map] section; its map is set by its own options",
                    self.name()
                )));
            }
            match self {
                Command::Action(a) => action(a, seed),
                Command::Chain(a) => chain(a, seed),
                Command::Thm1Demo(a) => thm1(a, seed),
                Command::Thm2Demo(a) => thm2(a),
                _ => unreachable!("uses_map covers the rest"),
            }
        }
    }
}

fn csv_body<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

fn csv(body: String) -> Artifact {
    Artifact {
        suffix: "",
        format: Format::Csv,
        body,
    }
}

fn torsion(iso: &Isotopy, a: &TorsionArgs) -> Result<Vec<Artifact>> {
    if a.n == 0 {
        return Err(Error::InvalidArgument("--n must be positive".into()));
    }
    let mut schedule: Vec<u32> = default_schedule().into_iter().filter(|&k| k < a.n).collect();
    schedule.push(a.n);
    let xi = PlanePoint::from_turns(a.xi_turns);
    let lift = LiftOptions::default();
    let rows = a
        .points
        .iter()
        .map(|&p| {
            let x = pt(p);
            Ok(TorsionRow::new(
                x,
                xi,
                &torsion_orbit(iso, x, xi, &schedule, a.tol, &lift)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![csv(csv_body(&rows)?)])
}

#[derive(Serialize)]
struct LinkingRow {
    xx: f64,
    xy: f64,
    yx: f64,
    yy: f64,
    n: u32,
    linking: f64,
}

fn linking(iso: &Isotopy, a: &LinkingArgs) -> Result<Vec<Artifact>> {
    let lift = LiftOptions::default();
    let rows =
        a.ns.iter()
            .map(|&n| {
                Ok(LinkingRow {
                    xx: a.x[0],
                    xy: a.x[1],
                    yx: a.y[0],
                    yy: a.y[1],
                    n,
                    linking: linking_n(iso, pt(a.x), pt(a.y), n, &lift)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
    Ok(vec![csv(csv_body(&rows)?)])
}

fn witness(iso: &Isotopy, a: &WitnessArgs) -> Result<Vec<Artifact>> {
    let c = find_witness(iso, pt(a.x), pt(a.y), a.n, &WitnessOptions::default())?;
    Ok(vec![csv(csv_body(&[WitnessRow::from(&c)])?)])
}

fn rotset(iso: &Isotopy, a: &RotsetArgs) -> Result<Vec<Artifact>> {
    let (r, cloud) = estimate_with_cloud(iso, a.grid, a.n)?;
    let mut buf = Vec::new();
    r.write_csv(&mut buf)?;
    let mut body = format!("# {}\n", r.note);
    body.push_str(&String::from_utf8(buf).expect("csv output is UTF-8"));
    Ok(vec![
        csv(body),
        Artifact {
            suffix: "",
            format: Format::Svg,
            body: r.to_svg(&cloud),
        },
    ])
}

fn profile(name: &str, bumps: &[[f64; 2]]) -> Result<HamiltonianProfile> {
    let p = match name {
        "zero" => HamiltonianProfile::Zero,
        "cubic" => HamiltonianProfile::Cubic,
        "bumps" if bumps.is_empty() => {
            return Err(Error::InvalidArgument(
                "the bumps profile needs at least one --bump".into(),
            ))
        }
        "bumps" => HamiltonianProfile::Bumps(bumps.iter().map(|b| (b[0], b[1])).collect()),
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown profile '{other}' (expected zero, cubic or bumps)"
            )))
        }
    };
    if name != "bumps" && !bumps.is_empty() {
        return Err(Error::InvalidArgument(
            "--bump only applies to the bumps profile".into(),
        ));
    }
    p.validate()?;
    Ok(p)
}

#[derive(Serialize)]
struct ActionRow<'a> {
    profile: &'a str,
    lambda: f64,
    x0x: f64,
    x0y: f64,
    action: f64,
    mean_n: f64,
    stderr_n: f64,
    mean_1: f64,
    stderr_1: f64,
    n: u32,
    samples: usize,
}

fn action(a: &ActionArgs, seed: u64) -> Result<Vec<Artifact>> {
    let hi = HamiltonianIsotopy::new(profile(&a.profile, &a.bumps)?.scaled(a.lambda), a.representation)?;
    let x0 = pt(a.x0);
    let value = symplectic_action(&hi, x0, Primitive::Standard)?;
    let avg = average_linking(&hi.isotopy, x0, a.n, a.samples, seed, &LiftOptions::default())?;
    let row = ActionRow {
        profile: &a.profile,
        lambda: a.lambda,
        x0x: x0.x,
        x0y: x0.y,
        action: value.value,
        mean_n: avg.mean_n,
        stderr_n: avg.stderr_n,
        mean_1: avg.mean_1,
        stderr_1: avg.stderr_1,
        n: avg.n,
        samples: avg.samples,
    };
    Ok(vec![csv(csv_body(&[row])?)])
}

fn chain(a: &ChainArgs, seed: u64) -> Result<Vec<Artifact>> {
    let [m00, m01, m10, m11] = a.matrix;
    let partition = adler_weiss_partition([[m00, m01], [m10, m11]])?;
    let rel = transition_relation(&partition);
    let mut body = String::new();
    match (a.target, a.closed_len) {
        (Some(target), None) => {
            let c = connecting_chain_any(&rel, Node::new(a.start, [0, 0]), target, a.max_len)?;
            body.push_str(&c.to_text());
        }
        (None, Some(len)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = random_closed_chain(&rel, a.start, len, &mut rng)?;
            let p = periodic_from_closed_chain(&partition, &c)?;
            writeln!(
                body,
                "# periodic point {},{} of period {}",
                p.point[0], p.point[1], p.period
            )
            .expect("writing to a String");
            body.push_str(&c.to_text());
        }
        _ => {
            return Err(Error::InvalidArgument(
                "chain needs exactly one of --target and --closed-len".into(),
            ))
        }
    }
    Ok(vec![
        Artifact {
            suffix: "",
            format: Format::Text,
            body,
        },
        Artifact {
            suffix: "-partition",
            format: Format::Svg,
            body: partition.to_svg(480.0),
        },
    ])
}

fn thm1(a: &Thm1Args, seed: u64) -> Result<Vec<Artifact>> {
    let opts = Thm1Options {
        profile: profile(&a.profile, &a.bumps)?,
        lambda: a.lambda,
        representation: a.representation,
        n: a.n,
        radius: a.radius,
        directions: a.directions,
        average_n: a.average_n,
        average_samples: a.average_samples,
        seed,
        ..Thm1Options::default()
    };
    let r = thm1_demo(&opts)?;
    let fp = &r.fixed_point;
    let mut body = String::new();
    let w = &mut body;
    let _ = writeln!(
        w,
        "# fixed point {},{} action {}",
        fp.point.x, fp.point.y, fp.action.value
    );
    let _ = writeln!(
        w,
        "# average linking n={} {} +- {}; n=1 {} +- {}",
        r.average.n, r.average.mean_n, r.average.stderr_n, r.average.mean_1, r.average.stderr_1
    );
    let _ = writeln!(w, "# chosen pair {} of {}", r.result.chosen, r.pairs.len());
    body.push_str(&csv_body(&[WitnessRow::from(&r.result.certificate)])?);
    Ok(vec![csv(body)])
}

fn thm2(a: &Thm2Args) -> Result<Vec<Artifact>> {
    let opts = Thm2Options {
        a: a.a,
        b: a.b,
        representation: a.representation,
        grid: a.grid,
        horizon: a.horizon,
        max_period: a.max_period,
        seeds: a.seeds,
        n: a.n,
        max_attempts: a.max_attempts,
        ..Thm2Options::default()
    };
    let r = thm2_demo(&opts)?;
    let mut body = String::new();
    let w = &mut body;
    let vertices: Vec<String> = r
        .rotation_set
        .vertices
        .iter()
        .map(|v| format!("({},{})", v.x, v.y))
        .collect();
    let _ = writeln!(w, "# rotation set vertices {}", vertices.join(" "));
    let _ = writeln!(w, "# {}", r.rotation_set.note);
    for rec in &r.realized {
        let _ = writeln!(
            w,
            "# realized ({},{})/{} at {},{} residual {:e}",
            rec.v[0], rec.v[1], rec.q, rec.z.x, rec.z.y, rec.residual
        );
    }
    for t in &r.attempts {
        let _ = writeln!(
            w,
            "# pair {},{} {},{} linking {} {}",
            t.x.x,
            t.x.y,
            t.y.x,
            t.y.y,
            t.linking,
            t.failure.as_deref().unwrap_or("certified")
        );
    }
    body.push_str(&csv_body(&[WitnessRow::from(&r.certificate)])?);
    let realized: Vec<PlanePoint> = r.realized.iter().map(|rec| rec.rotation_vector()).collect();
    Ok(vec![
        csv(body),
        Artifact {
            suffix: "",
            format: Format::Svg,
            body: r.rotation_set.to_svg(&realized),
        },
    ])
}
