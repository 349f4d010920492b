use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use torsionlab_core::zoo::{MapSpec, RepresentationKind};
use torsionlab_core::{Error, Result, SurfaceModel};

use crate::commands::Command;

pub const DEFAULT_SEED: u64 = 7;

fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// A complete experiment: what map, which command, where the artifacts go.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub map: MapSpec,
    pub command: Command,
    #[serde(default)]
    pub output: OutputSection,
}

/// The part of a config that determines the artifact contents.
#[derive(Serialize)]
struct Hashed<'a> {
    seed: u64,
    map: &'a MapSpec,
    command: &'a Command,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("config: {}", e.message())))
    }

    /// SHA-256 of the canonical TOML form of seed, map and command. Output
    /// paths are left out so that moving the artifacts keeps the hash.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(&Hashed {
            seed: self.seed,
            map: &self.map,
            command: &self.command,
        })
        .expect("config sections serialize to TOML");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn header(&self) -> String {
        format!("torsionlab {} config-hash={}", env!("CARGO_PKG_VERSION"), self.hash())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Svg,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Artifact directory; without one the primary artifact goes to stdout.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// File name stem; defaults to the command name.
    #[serde(default)]
    pub prefix: Option<String>,
    #[serde(default = "all_formats")]
    pub formats: Vec<Format>,
}

fn all_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Svg, Format::Text]
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: None,
            prefix: None,
            formats: all_formats(),
        }
    }
}

impl OutputSection {
    pub fn path(&self, stem: &str, suffix: &str, format: Format) -> Option<PathBuf> {
        let dir = self.dir.as_ref()?;
        let ext = match format {
            Format::Csv => "csv",
            Format::Svg => "svg",
            Format::Text => "txt",
        };
        let prefix = self.prefix.as_deref().unwrap_or(stem);
        Some(dir.join(format!("{prefix}{suffix}.{ext}")))
    }

    /// Create the directory and open every target for writing, so that an
    /// unwritable path fails before any computation.
    pub fn check_writable(&self, paths: &[PathBuf]) -> Result<()> {
        if let Some(dir) = &self.dir {
            fs::create_dir_all(dir).map_err(|e| unwritable(dir, e))?;
        }
        for p in paths {
            OpenOptions::new()
                .write(true)
                .create(true)
                .truncate(false)
                .open(p)
                .map_err(|e| unwritable(p, e))?;
        }
        Ok(())
    }
}

fn unwritable(p: &Path, e: std::io::Error) -> Error {
    Error::InvalidArgument(format!("cannot write {}: {e}", p.display()))
}

/// `[output]` as command-line flags.
#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Directory for the artifacts (default: primary artifact to stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// File name stem (default: the command name)
    #[arg(long)]
    pub prefix: Option<String>,
    /// Artifact formats to write
    #[arg(long = "format", value_enum)]
    pub formats: Vec<Format>,
    /// Seed for every random draw
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

impl OutputArgs {
    pub fn section(&self) -> OutputSection {
        OutputSection {
            dir: self.out.clone(),
            prefix: self.prefix.clone(),
            formats: if self.formats.is_empty() {
                all_formats()
            } else {
                self.formats.clone()
            },
        }
    }
}

/// `[map]` as command-line flags.
#[derive(Debug, Clone, Args)]
pub struct MapArgs {
    /// Map kind: identity, rotation, disc-rotation, translation,
    /// annulus-rotation, linear-shear, double-shear, radial-hamiltonian
    #[arg(long = "map")]
    pub kind: Option<String>,
    /// Map parameter as key=value (repeatable), e.g. a=1.0
    #[arg(long = "param", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
    #[arg(long, value_enum)]
    pub representation: Option<RepresentationArg>,
    /// Integration step of flow representations
    #[arg(long)]
    pub time_step: Option<f64>,
    #[arg(long, value_enum)]
    pub surface: Option<SurfaceArg>,
    /// Radial profile: zero, cubic, bumps
    #[arg(long)]
    pub profile: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RepresentationArg {
    ClosedForm,
    Flow,
}

impl From<RepresentationArg> for RepresentationKind {
    fn from(r: RepresentationArg) -> Self {
        match r {
            RepresentationArg::ClosedForm => RepresentationKind::ClosedForm,
            RepresentationArg::Flow => RepresentationKind::Flow,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SurfaceArg {
    Plane,
    Disc,
    Annulus,
    Torus,
}

impl From<SurfaceArg> for SurfaceModel {
    fn from(s: SurfaceArg) -> Self {
        match s {
            SurfaceArg::Plane => SurfaceModel::Plane,
            SurfaceArg::Disc => SurfaceModel::Disc,
            SurfaceArg::Annulus => SurfaceModel::Annulus,
            SurfaceArg::Torus => SurfaceModel::Torus,
        }
    }
}

impl MapArgs {
    pub fn spec(&self) -> MapSpec {
        MapSpec {
            kind: self.kind.clone().unwrap_or_default(),
            params: self.params.iter().cloned().collect(),
            representation: self.representation.map(Into::into),
            time_step: self.time_step,
            surface: self.surface.map(Into::into),
            profile: self.profile.clone(),
        }
    }
}

fn parse_param(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("{k}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

/// `"x,y"` as a pair of reals.
pub fn parse_point(s: &str) -> std::result::Result<[f64; 2], String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected x,y, got {s:?}"))?;
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok([p(x)?, p(y)?])
}
