mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use netkam::par::Execution;

/// Hamilton–Jacobi equations on networks from a scenario file.
#[derive(Debug, Parser)]
#[command(name = "netkam", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory receiving the output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Keep every k-th layer of a trajectory.
    #[arg(long, global = true)]
    snapshot_every: Option<usize>,
    /// Seed for randomized sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Critical value, Aubry set, static classes and the critical semidistance.
    Analyze { scenario: PathBuf },
    /// Semidistance between vertices at a level.
    Distances { scenario: PathBuf },
    /// Maximal subsolution below boundary data.
    SolveEikonal { scenario: PathBuf },
    /// Time-marching of the initial datum.
    Evolve { scenario: PathBuf },
    /// Long-time convergence against the predicted limit.
    Asymptotics { scenario: PathBuf },
    /// Costs and retiming of a curve.
    ReparamCost { scenario: PathBuf },
}

pub struct Context {
    pub out_dir: PathBuf,
    pub snapshot_every: Option<usize>,
    pub seed: u64,
    pub execution: Execution,
}

fn execution(threads: Option<usize>) -> Result<Execution, commands::CliError> {
    match threads {
        None => Ok(Execution::default()),
        Some(0) => Err(commands::CliError::Validation("--threads must be positive".into(), None)),
        Some(1) => Ok(Execution::Sequential),
        Some(n) => {
            #[cfg(feature = "parallel")]
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| commands::CliError::Io(e.to_string()))?;
            let _ = n;
            Ok(Execution::Parallel)
        }
    }
}

fn run(cli: Cli) -> Result<(), commands::CliError> {
    let ctx = Context {
        out_dir: cli.out_dir,
        snapshot_every: cli.snapshot_every,
        seed: cli.seed,
        execution: execution(cli.threads)?,
    };
    let (path, cmd): (&PathBuf, fn(&Context, &netkam::scenario::Scenario) -> _) = match &cli.command {
        Command::Analyze { scenario } => (scenario, commands::analyze),
        Command::Distances { scenario } => (scenario, commands::distances),
        Command::SolveEikonal { scenario } => (scenario, commands::solve_eikonal),
        Command::Evolve { scenario } => (scenario, commands::evolve),
        Command::Asymptotics { scenario } => (scenario, commands::asymptotics),
        Command::ReparamCost { scenario } => (scenario, commands::reparam_cost),
    };
    let scenario = commands::read_scenario(path)?;
    let out = cmd(&ctx, &scenario)?;
    commands::emit(&ctx, out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
