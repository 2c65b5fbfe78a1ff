use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lognodal::io::{graph_to_json, load_graph, load_state, to_json_pretty, FieldFile};
use lognodal::lab::{generate_graph, sweep, SweepThresholds, Topology};
use lognodal::{
    project_pair, project_ray, solve_ground, solve_nodal, verify, Error, ProblemInstance, SolveOptions,
    VerificationReport, WeightedGraph,
};

#[derive(Parser)]
#[command(name = "lognodal", version, about = "Ground and nodal states of -Δu + λa(x)u = u log u² on weighted graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a path/cycle/grid/star fixture with a potential well.
    Generate(GenerateArgs),
    /// Compute the ground or least sign-changing level.
    Solve(SolveArgs),
    /// Project a state onto the Nehari sets.
    Project(ProjectArgs),
    /// Check whether a state solves the equation.
    Check(CheckArgs),
    /// Compare full-problem minimizers with the Dirichlet limit over a λ grid.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyArg {
    Path,
    Cycle,
    Grid,
    Star,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ModeArg {
    Full,
    Dirichlet,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    topology: TopologyArg,
    #[arg(long)]
    n: usize,
    /// Comma-separated vertices or ranges, e.g. `v3..v4` or `v6,v7,v10,v11`.
    #[arg(long)]
    well: String,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    w: f64,
    #[arg(long = "a-out", default_value_t = 1.0)]
    a_out: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum, default_value = "full")]
    mode: ModeArg,
    /// Required in full mode.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, conflicts_with = "ground")]
    nodal: bool,
    #[arg(long)]
    ground: bool,
    #[arg(long, default_value_t = 64)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProjectArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    state: PathBuf,
    /// Ground level to test `J(u) > 2c` against.
    #[arg(long = "ground-level")]
    ground_level: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,10,100,1000,10000")]
    lambdas: Vec<f64>,
    /// CSV output; the summary goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    starts: usize,
}

enum Failure {
    Usage(String),
    Lib(Error),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Lib(Error::NonConvergence(_)) => 2,
            Failure::Lib(Error::InvalidOption(_) | Error::Io(_)) => 1,
            Failure::Lib(_) | Failure::Check(_) => 3,
        }
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Lib(e.into())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn instance<'g>(g: &'g WeightedGraph, args: &ProblemArgs) -> Result<ProblemInstance<'g>, Failure> {
    match args.mode {
        ModeArg::Full => {
            let lambda = args
                .lambda
                .ok_or_else(|| Failure::Usage("--lambda is required in full mode".into()))?;
            Ok(ProblemInstance::full(g, lambda)?)
        }
        ModeArg::Dirichlet => Ok(ProblemInstance::dirichlet_on_well(g)?),
    }
}

#[derive(Serialize)]
struct ProjectionOut {
    ray_scale: f64,
    ray_level: f64,
    ray_projected: FieldFile,
    pair: Option<PairOut>,
}

#[derive(Serialize)]
struct PairOut {
    s: f64,
    t: f64,
    g1_residual: f64,
    g2_residual: f64,
    degenerate_coupling: bool,
    level: f64,
    projected: FieldFile,
}

#[derive(Serialize)]
struct CheckOut<'a> {
    #[serde(flatten)]
    report: &'a VerificationReport,
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate(a) => {
            let topology = match a.topology {
                TopologyArg::Path => Topology::Path,
                TopologyArg::Cycle => Topology::Cycle,
                TopologyArg::Grid => Topology::Grid,
                TopologyArg::Star => Topology::Star,
            };
            let g = generate_graph(topology, a.n, &a.well, a.mu, a.w, a.a_out)?;
            emit(a.out.as_ref(), &graph_to_json(&g))
        }
        Command::Solve(a) => {
            if a.nodal == a.ground {
                return Err(Failure::Usage("pass exactly one of --nodal or --ground".into()));
            }
            let g = load_graph(&a.problem.graph)?;
            let inst = instance(&g, &a.problem)?;
            let opts = SolveOptions {
                starts: a.starts,
                seed: a.seed,
                tol_residual: a.tol,
                ..SolveOptions::default()
            };
            let report = if a.nodal {
                solve_nodal(&inst, &opts)?
            } else {
                solve_ground(&inst, &opts)?
            };
            emit(a.out.as_ref(), &to_json_pretty(&report))
        }
        Command::Project(a) => {
            let g = load_graph(&a.problem.graph)?;
            let inst = instance(&g, &a.problem)?;
            let u = load_state(&g, &a.state)?;
            inst.check_admissible(&u)?;
            let s = project_ray(&inst, &u)?;
            let ray = u.scaled(s);
            let pair = if u.changes_sign() {
                let p = project_pair(&inst, &u)?;
                Some(PairOut {
                    s: p.s,
                    t: p.t,
                    g1_residual: p.g1_residual,
                    g2_residual: p.g2_residual,
                    degenerate_coupling: p.degenerate_coupling,
                    level: inst.energy(&p.projected)?,
                    projected: FieldFile::from_field(&g, &p.projected),
                })
            } else {
                None
            };
            let out = ProjectionOut {
                ray_scale: s,
                ray_level: inst.energy(&ray)?,
                ray_projected: FieldFile::from_field(&g, &ray),
                pair,
            };
            emit(a.out.as_ref(), &to_json_pretty(&out))
        }
        Command::Check(a) => {
            let g = load_graph(&a.problem.graph)?;
            let inst = instance(&g, &a.problem)?;
            let u = load_state(&g, &a.state)?;
            let report = verify(&inst, &u, a.ground_level)?;
            emit(a.out.as_ref(), &to_json_pretty(&CheckOut { report: &report }))?;
            if !report.is_solution {
                return Err(Failure::Check(format!(
                    "state is not a solution: residual {:e} (scale {:e})",
                    report.residual_inf, report.residual_scale
                )));
            }
            if report.strict_ordering == Some(false) {
                return Err(Failure::Check("level does not exceed twice the ground level".into()));
            }
            Ok(())
        }
        Command::Sweep(a) => {
            let g = load_graph(&a.graph)?;
            let opts = SolveOptions {
                starts: a.starts,
                seed: a.seed,
                ..SolveOptions::default()
            };
            let outcome = sweep(&g, &a.lambdas, &opts, &SweepThresholds::default())?;
            let csv = outcome.to_csv();
            match &a.out {
                Some(path) => {
                    fs::write(path, &csv).map_err(|e| Failure::Lib(e.into()))?;
                    print!("{}", to_json_pretty(&outcome.summary));
                }
                None => print!("{csv}"),
            }
            if let Some(f) = &outcome.summary.failure {
                return Err(Failure::Lib(Error::NonConvergence(f.clone())));
            }
            if !outcome.summary.passed() {
                return Err(Failure::Check("sweep verdict failed".into()));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Usage(m) | Failure::Check(m) => m.clone(),
                Failure::Lib(e) => e.to_string(),
            };
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
