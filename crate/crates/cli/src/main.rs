use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dynmatch::compat::{load_pool_matrix, CompatModel};
use dynmatch::theory::HardArrivalFactor;
use dynmatch_cli::commands::{self, BoundingChain};
use dynmatch_cli::scenario::{PolicyKind, ScenarioFile};
use dynmatch_cli::{run_scenario, CliError, CliResult, Overrides, RunOptions, Scenario};

#[derive(Parser)]
#[command(name = "dynmatch", version, about = "Dynamic matching market simulations and analytic bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run replications of a single configuration.
    Simulate(RunArgs),
    /// Run a scenario file with a [sweep] section.
    Sweep(RunArgs),
    /// Batching bound curves against greedy and patient references.
    Bounds(BoundsArgs),
    /// Maximum matching and isolated fractions of static pools.
    Static(StaticArgs),
    /// Stationary distributions of the greedy pool chains.
    Chain {
        #[command(subcommand)]
        chain: ChainCommand,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Greedy,
    Patient,
    Batching,
}

impl From<PolicyArg> for PolicyKind {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Greedy => PolicyKind::Greedy,
            PolicyArg::Patient => PolicyKind::Patient,
            PolicyArg::Batching => PolicyKind::Batching,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file; without it the market must be given by flags.
    scenario: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    /// Batching period in days.
    #[arg(long)]
    period: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Output path prefix.
    #[arg(long)]
    out: Option<String>,
    /// Worker threads (default: logical cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Also write one trace CSV per replication.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Number of arrivals measured.
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    /// Capacity multiplier: C = kappa x total arrival rate.
    #[arg(long)]
    kappa: Option<f64>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            replications: self.reps,
            output: self.out.clone(),
            policy: self.policy.map(Into::into),
            period: self.period,
            m: self.m,
            lambda: self.lambda,
            d: self.d,
            p: self.p,
            q: self.q,
            horizon_arrivals: self.horizon,
            warmup_agents: self.warmup,
            capacity_kappa: self.kappa,
        }
    }

    fn scenario(&self) -> CliResult<Scenario> {
        let o = self.overrides();
        match &self.scenario {
            Some(path) => Scenario::load(path, &o),
            None => ScenarioFile::from_flags(&o)?.resolve(&o, None, std::path::Path::new(".")),
        }
    }
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    d: f64,
    /// Explicit periods; overrides the range.
    #[arg(long = "t", num_args = 1..)]
    periods: Vec<f64>,
    #[arg(long, default_value_t = 0.01)]
    t_min: f64,
    #[arg(long, default_value_t = 1.0)]
    t_max: f64,
    #[arg(long, default_value_t = 100)]
    points: usize,
    /// CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    TwoType,
    Homogeneous,
    Matrix,
}

#[derive(Args)]
struct StaticArgs {
    /// Number of E agents.
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, value_enum, default_value_t = ModelArg::TwoType)]
    model: ModelArg,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Pool file for the matrix model.
    #[arg(long)]
    pool: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of pools, seeded seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ChainCommand {
    /// One-dimensional bounding chain.
    Bd {
        #[arg(long, value_enum)]
        kind: ChainKind,
        #[arg(long)]
        m: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        p: Option<f64>,
        /// CSV of the distribution.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-dimensional chain with capacity.
    Ctmc {
        #[arg(long)]
        m: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        capacity: usize,
        /// Use (1-q)^y for arriving H agents instead of (1-p)^y.
        #[arg(long)]
        printed_factor: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ChainKind {
    Upper,
    Lower,
}

fn output(path: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn optional_file(path: &Option<PathBuf>) -> CliResult<Option<File>> {
    path.as_ref().map(File::create).transpose().map_err(Into::into)
}

fn print_json(v: &serde_json::Value) -> CliResult<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(args) => {
            let scenario = args.scenario()?;
            if scenario.sweep.is_some() {
                return Err(CliError::Config("scenario has a [sweep] section; use `dynmatch sweep`".into()));
            }
            let paths = run_scenario(&scenario, RunOptions { jobs: args.jobs, write_traces: args.trace })?;
            eprintln!("wrote {}", paths.replications.display());
        }
        Command::Sweep(args) => {
            let scenario = args.scenario()?;
            if scenario.sweep.is_none() {
                return Err(CliError::Config("scenario has no [sweep] section".into()));
            }
            let paths = run_scenario(&scenario, RunOptions { jobs: args.jobs, write_traces: args.trace })?;
            eprintln!("wrote {}", paths.replications.display());
        }
        Command::Bounds(a) => {
            let periods = if a.periods.is_empty() {
                commands::period_grid(a.t_min, a.t_max, a.points)?
            } else {
                a.periods.clone()
            };
            commands::bounds(a.lambda, a.d, &periods, output(&a.out)?)?;
        }
        Command::Static(a) => {
            let need = |name: &str| CliError::Config(format!("--{name} is required for this model"));
            let model = match a.model {
                ModelArg::TwoType => {
                    CompatModel::TwoType { p: a.p.ok_or_else(|| need("p"))?, q: a.q.ok_or_else(|| need("q"))? }
                }
                ModelArg::Homogeneous => CompatModel::Homogeneous { p: a.p.ok_or_else(|| need("p"))? },
                ModelArg::Matrix => load_pool_matrix(a.pool.as_ref().ok_or_else(|| need("pool"))?)?,
            };
            let seeds: Vec<u64> = (0..a.seeds).map(|i| a.seed.wrapping_add(i)).collect();
            commands::static_pools(a.m, a.lambda, &model, &seeds, output(&a.out)?)?;
        }
        Command::Chain { chain } => match chain {
            ChainCommand::Bd { kind, m, lambda, p, out } => {
                let kind = match kind {
                    ChainKind::Upper => BoundingChain::Upper,
                    ChainKind::Lower => BoundingChain::Lower,
                };
                print_json(&commands::birth_death(kind, m, lambda, p, optional_file(&out)?)?)?;
            }
            ChainCommand::Ctmc { m, lambda, p, q, capacity, printed_factor, out } => {
                let factor = if printed_factor { HardArrivalFactor::AsPrinted } else { HardArrivalFactor::EasyHard };
                print_json(&commands::ctmc(m, lambda, p, q, capacity, factor, optional_file(&out)?)?)?;
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dynmatch: {e}");
            e.exit_code()
        }
    }
}
