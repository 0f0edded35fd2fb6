use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mmtail_cli::{load_config, run, write_outcome, CliError, Format, Task};

#[derive(Parser)]
#[command(name = "mmtail", version, about = "Tail indices and tail constants of Markov-modulated perpetuities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve ρ(κ) = 1 for the tail index.
    SolveKappa(Common),
    /// Sample the stationary law and run the empirical tail estimators.
    SimulateTail(Common),
    /// Estimate the tail constants next to the empirical estimators.
    Constants(Common),
    /// Check the hypotheses of the tail theorems.
    CheckConditions(Common),
    /// Run the invariant suite; exits nonzero if any check fails.
    Validate(Common),
    /// Simulate MMGOU paths and the Euler consistency check.
    MmgouDemo(Common),
    /// Compare the first-switch transform with Monte Carlo and quadrature.
    UpsilonCompare(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `run.samples`.
    #[arg(long)]
    samples: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides `output.format`.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl Command {
    fn split(self) -> (Task, Common) {
        match self {
            Command::SolveKappa(c) => (Task::SolveKappa, c),
            Command::SimulateTail(c) => (Task::SimulateTail, c),
            Command::Constants(c) => (Task::Constants, c),
            Command::CheckConditions(c) => (Task::CheckConditions, c),
            Command::Validate(c) => (Task::Validate, c),
            Command::MmgouDemo(c) => (Task::MmgouDemo, c),
            Command::UpsilonCompare(c) => (Task::UpsilonCompare, c),
        }
    }
}

fn execute(task: Task, args: Common) -> Result<(), CliError> {
    let mut config = load_config(&args.config)?;
    let doc = &mut config.document;
    if let Some(seed) = args.seed {
        doc.run.seed = seed;
    }
    if let Some(n) = args.samples {
        doc.run.samples = n;
    }
    if let Some(out) = args.out {
        doc.output.dir = out;
    }
    if let Some(f) = args.format {
        doc.output.format = f;
    }
    config.revalidate()?;
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Output(e.to_string()))?;
    let outcome = pool.install(|| run(&config, task))?;
    print!("{}", outcome.table.render());
    let written = write_outcome(&outcome, &config.document.output.dir, config.document.output.format)?;
    for path in written {
        println!("wrote {}", path.display());
    }
    if outcome.failures > 0 {
        return Err(CliError::ChecksFailed(outcome.failures));
    }
    Ok(())
}

fn main() -> ExitCode {
    let (task, args) = Cli::parse().command.split();
    match execute(task, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
