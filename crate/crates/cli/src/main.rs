//! `torsionlab`: command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 numeric failure, 3 search gave up.

mod commands;
mod config;

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use torsionlab_core::Error;

use commands::{Artifact, Command};
use config::{ExperimentConfig, Format, MapArgs, OutputArgs};

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const EXIT_SEARCH: u8 = 3;

#[derive(Parser)]
#[command(
    name = "torsionlab",
    version,
    about = "Torsion, linking, rotation sets and action of surface maps"
)]
struct Cli {
    #[command(subcommand)]
    top: Top,
}

#[derive(Args)]
struct WithMap<T: Args> {
    #[command(flatten)]
    map: MapArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    args: T,
}

#[derive(Args)]
struct WithoutMap<T: Args> {
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    args: T,
}

#[derive(Subcommand)]
enum Top {
    /// Orbit torsion at given points
    Torsion(WithMap<commands::TorsionArgs>),
    /// Linking numbers of a pair of points
    Linking(WithMap<commands::LinkingArgs>),
    /// Torsion witness from a linked pair
    Witness(WithMap<commands::WitnessArgs>),
    /// Rotation set of a torus map
    Rotset(WithMap<commands::RotsetArgs>),
    /// Symplectic action and average linking of a radial Hamiltonian
    Action(WithoutMap<commands::ActionArgs>),
    /// Markov-partition chains of a linear toral automorphism
    Chain(WithoutMap<commands::ChainArgs>),
    /// Action pipeline ending in a torsion witness
    Thm1Demo(WithoutMap<commands::Thm1Args>),
    /// Rotation-set pipeline ending in a torsion witness
    Thm2Demo(WithoutMap<commands::Thm2Args>),
    /// Run an experiment config file
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn with_map<T: Args>(j: WithMap<T>, wrap: fn(T) -> Command) -> ExperimentConfig {
    ExperimentConfig {
        seed: j.output.seed,
        map: j.map.spec(),
        command: wrap(j.args),
        output: j.output.section(),
    }
}

fn without_map<T: Args>(j: WithoutMap<T>, wrap: fn(T) -> Command) -> ExperimentConfig {
    ExperimentConfig {
        seed: j.output.seed,
        map: Default::default(),
        command: wrap(j.args),
        output: j.output.section(),
    }
}

/// A failure together with how to report it.
struct Failure {
    code: u8,
    message: String,
    /// Subcommand whose help follows the message.
    usage_of: Option<&'static str>,
}

impl Failure {
    fn usage(message: String) -> Self {
        Self {
            code: EXIT_USAGE,
            message,
            usage_of: None,
        }
    }

    fn from_core(op: &str, e: Error) -> Self {
        let code = if e.is_usage_error() {
            EXIT_USAGE
        } else if e.is_search_failure() {
            EXIT_SEARCH
        } else {
            EXIT_NUMERIC
        };
        Self {
            code,
            message: format!("{op}: {e}"),
            usage_of: None,
        }
    }
}

fn load(top: Top) -> Result<ExperimentConfig, Failure> {
    Ok(match top {
        Top::Torsion(j) => with_map(j, Command::Torsion),
        Top::Linking(j) => with_map(j, Command::Linking),
        Top::Witness(j) => with_map(j, Command::Witness),
        Top::Rotset(j) => with_map(j, Command::Rotset),
        Top::Action(j) => without_map(j, Command::Action),
        Top::Chain(j) => without_map(j, Command::Chain),
        Top::Thm1Demo(j) => without_map(j, Command::Thm1Demo),
        Top::Thm2Demo(j) => without_map(j, Command::Thm2Demo),
        Top::Run { config } => {
            let text = fs::read_to_string(&config)
                .map_err(|e| Failure::usage(format!("cannot read {}: {e}", config.display())))?;
            ExperimentConfig::parse(&text).map_err(|e| Failure::from_core("run", e))?
        }
    })
}

/// The artifact with its provenance line.
fn render(header: &str, a: &Artifact) -> String {
    match a.format {
        Format::Svg => format!("<!-- {header} -->\n{}", a.body),
        Format::Csv | Format::Text => format!("# {header}\n{}", a.body),
    }
}

fn execute(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let name = cfg.command.name();
    if cfg.command.uses_map() && cfg.map.is_empty() {
        return Err(Failure {
            code: EXIT_USAGE,
            message: format!("{name}: the map is not set (give --map KIND or a [map] section with a kind)"),
            usage_of: Some(name),
        });
    }
    let planned: Vec<_> = cfg
        .command
        .planned()
        .into_iter()
        .filter(|(_, f)| cfg.output.formats.contains(f))
        .collect();
    let paths: Vec<PathBuf> = planned
        .iter()
        .filter_map(|(suffix, f)| cfg.output.path(name, suffix, *f))
        .collect();
    cfg.output
        .check_writable(&paths)
        .map_err(|e| Failure::from_core(name, e))?;

    let artifacts = cfg
        .command
        .run(&cfg.map, cfg.seed)
        .map_err(|e| Failure::from_core(name, e))?;
    let header = cfg.header();
    let selected = artifacts.iter().filter(|a| cfg.output.formats.contains(&a.format));
    if cfg.output.dir.is_none() {
        // Without a directory only the primary artifact is shown.
        if let Some(a) = selected.into_iter().find(|a| a.format != Format::Svg) {
            let mut out = std::io::stdout().lock();
            out.write_all(render(&header, a).as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::usage(format!("stdout: {e}")))?;
        }
        return Ok(());
    }
    for a in selected {
        let path = cfg.output.path(name, a.suffix, a.format).expect("dir is set");
        fs::write(&path, render(&header, a))
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

/// Cap rayon's pool at `TORSIONLAB_THREADS` when set.
fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("TORSIONLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::usage(format!("TORSIONLAB_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::usage(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let outcome = configure_threads()
        .and_then(|_| load(cli.top))
        .and_then(|cfg| execute(&cfg));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("torsionlab: {}", f.message);
            if let Some(sub) = f.usage_of {
                let mut top = Cli::command();
                top.build();
                if let Some(cmd) = top.find_subcommand_mut(sub) {
                    eprintln!("\n{}", cmd.render_help());
                }
            }
            ExitCode::from(f.code)
        }
    }
}
