mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Overrides, RunConfig};

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    /// bad flags, config or input files: exit 2
    Usage(String),
    /// numerical or I/O failure, or a verification threshold missed: exit 1
    Runtime(String),
}

impl From<afw2d::Error> for CliError {
    fn from(e: afw2d::Error) -> Self {
        use afw2d::Error as E;
        match e {
            E::InvalidOrder(_) | E::UnknownDomain(_) | E::InvalidArgument(_) | E::Config(_) | E::Parse { .. } | E::InvalidMesh(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "afw2d", version, about = "Mixed finite elements for plane elasticity with weakly symmetric stresses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve once and dump the solution, the system matrix and the numbering
    Solve(SolveArgs),
    /// Uniform refinement study
    Converge(ConvergeArgs),
    /// Adaptive refinement study driven by the true element errors
    Adapt(AdaptArgs),
    /// Commuting-diagram, inf-sup and regularity diagnostics
    Verify(VerifyArgs),
    /// Build, refine and inspect meshes
    Mesh(MeshArgs),
    /// Leading corner singularity exponent
    Corner(CornerArgs),
    /// Overlay convergence tables written by `converge` or `adapt`
    Plot(PlotArgs),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML run configuration; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// unit_square, lshape_affine or lshape_circular
    #[arg(long)]
    domain: Option<String>,
    /// output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// tolerance override, repeatable (commuting, weak_symmetry, inf_sup)
    #[arg(long, value_name = "NAME=VAL")]
    tol: Vec<String>,
}

#[derive(Args, Clone, Default)]
struct Problem {
    /// displacement order, or comma separated orders of the initial triangles
    #[arg(long)]
    order: Option<String>,
    /// smooth_trig, smooth_poly or lshape_singular
    #[arg(long)]
    solution: Option<String>,
    #[arg(long, value_name = "MU,LAMBDA")]
    material: Option<String>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    problem: Problem,
    /// number of uniform refinements of the initial mesh
    #[arg(long, default_value_t = 0)]
    level: usize,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    problem: Problem,
    /// number of meshes (initial mesh included)
    #[arg(long)]
    levels: Option<usize>,
}

#[derive(Args)]
struct AdaptArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    problem: Problem,
    /// number of solves
    #[arg(long)]
    steps: Option<usize>,
    /// fraction of elements marked per step
    #[arg(long)]
    fraction: Option<f64>,
    /// also run this many uniform levels and plot both curves
    #[arg(long, default_value_t = 0)]
    compare_levels: usize,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// orders to check: `0..3`, `2` or `0,2,4`
    #[arg(long)]
    orders: Option<String>,
    /// number of uniform refinements of the initial mesh
    #[arg(long, default_value_t = 0)]
    level: usize,
    /// random fields per order
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// also write quadrature and basis tables
    #[arg(long)]
    tables: bool,
}

#[derive(Args)]
struct MeshArgs {
    #[command(flatten)]
    common: Common,
    /// start from a mesh file instead of a named domain
    #[arg(long)]
    input: Option<PathBuf>,
    /// number of uniform refinements
    #[arg(long, default_value_t = 0)]
    level: usize,
    /// triangles to bisect afterwards, comma separated
    #[arg(long)]
    mark: Option<String>,
}

#[derive(Args)]
struct CornerArgs {
    /// corner configuration file (defaults to the built-in L-shape corner)
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// series as LABEL=FILE.csv (split at the last '=')
    #[arg(required = true, value_name = "LABEL=FILE")]
    series: Vec<String>,
    #[arg(long, default_value = "convergence history")]
    title: String,
    /// output SVG file
    #[arg(long, default_value = "out/compare.svg")]
    output: PathBuf,
}

fn overrides(common: &Common, problem: Option<&Problem>) -> Overrides {
    let p = problem.cloned().unwrap_or_default();
    Overrides {
        config: common.config.clone(),
        domain: common.domain.clone(),
        order: p.order,
        solution: p.solution,
        material: p.material,
        out: common.out.clone(),
        seed: common.seed,
        tol: common.tol.clone(),
        ..Default::default()
    }
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("AFW2D_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| CliError::Usage(format!("AFW2D_THREADS='{v}' is not a positive integer")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Solve(a) => commands::solve(&RunConfig::resolve(overrides(&a.common, Some(&a.problem)))?, a.level),
        Command::Converge(a) => {
            let mut o = overrides(&a.common, Some(&a.problem));
            o.levels = a.levels;
            commands::converge(&RunConfig::resolve(o)?)
        }
        Command::Adapt(a) => {
            let mut o = overrides(&a.common, Some(&a.problem));
            o.steps = a.steps;
            o.fraction = a.fraction;
            commands::adapt(&RunConfig::resolve(o)?, a.compare_levels)
        }
        Command::Verify(a) => {
            let mut o = overrides(&a.common, None);
            o.orders = a.orders;
            commands::verify(&RunConfig::resolve(o)?, a.level, a.samples, a.tables)
        }
        Command::Mesh(a) => commands::mesh(&RunConfig::resolve(overrides(&a.common, None))?, a.input.as_deref(), a.level, a.mark.as_deref()),
        Command::Corner(a) => commands::corner(a.file.as_deref()),
        Command::Plot(a) => commands::plot(&a.series, &a.title, &a.output),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
