//! `lll`: criterion checks, solver runs and oracle verification.
//!
//! Exit codes: 0 success, 1 validation failure, 2 budget exhausted, 3 input error.

mod commands;
mod instance;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lll_core::apps::{build_latin_instance, build_rainbow_matching_instance, build_rainbow_tree_instance, ColorMatrix, ColoredCompleteGraph};
use lll_core::verify::StreakSchedule;
use lll_core::DEFAULT_BUDGET;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use commands::{Family, Output, RunOptions, VerifyOptions};
use instance::InstanceFile;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Schedule {
    MaximalSet,
    Sequential,
}

impl From<Schedule> for StreakSchedule {
    fn from(s: Schedule) -> Self {
        match s {
            Schedule::MaximalSet => StreakSchedule::MaximalSet,
            Schedule::Sequential => StreakSchedule::Sequential,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lll", version, about = "Algorithmic local lemma with resampling oracles")]
struct Cli {
    /// Run seed; overrides an instance's own seed [default: instance seed, else 0].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Maximum resampling-oracle calls per run.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    /// Samples for distribution tests.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Exact rational polynomial tables.
    #[arg(long, global = true)]
    exact: bool,
    /// Worker threads for repeated runs and sampling [default: all cores].
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Repeat {
    /// Independent runs with seeds seed, seed+1, ….
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    /// Tail parameter t of the reported bound [default: ln(max(repeat, 2))].
    #[arg(long)]
    tail: Option<f64>,
    /// Seed of the random coloring [default: the run seed].
    #[arg(long)]
    instance_seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// GLL / CLL / Shearer verdicts, slack and predicted bounds for an instance file.
    Criteria { file: PathBuf },
    /// Run the solver on an instance file.
    Run {
        file: PathBuf,
        #[command(flatten)]
        repeat: Repeat,
    },
    /// t disjoint Latin transversals of a random n×n matrix.
    Latin {
        #[arg(long)]
        n: usize,
        /// Number of transversals [default: ⌊7⁷n/8⁸⌋].
        #[arg(long)]
        t: Option<usize>,
        /// Color multiplicity cap [default: ⌊7⁷n/8⁸⌋].
        #[arg(long)]
        cap: Option<usize>,
        #[command(flatten)]
        repeat: Repeat,
    },
    /// A rainbow perfect matching of a random coloring of K_{2n}.
    RainbowMatching {
        #[arg(long)]
        n: usize,
        /// Color multiplicity cap [default: ⌊27n/128⌋].
        #[arg(long)]
        cap: Option<usize>,
        /// Use the round-robin proper coloring instead of a random one.
        #[arg(long)]
        proper: bool,
        #[command(flatten)]
        repeat: Repeat,
    },
    /// t edge-disjoint rainbow spanning trees of a random coloring of K_n.
    RainbowTree {
        #[arg(long)]
        n: usize,
        /// Number of trees [default: ⌊(7/8)⁷n/32⌋].
        #[arg(long)]
        t: Option<usize>,
        /// Color multiplicity cap [default: ⌊(7/8)⁷n/32⌋].
        #[arg(long)]
        cap: Option<usize>,
        #[command(flatten)]
        repeat: Repeat,
    },
    /// Chi-square (R1) and non-neighbor (R2) tests of a built-in oracle, or the
    /// consecutive-resampling streak experiment.
    VerifyOracle {
        #[arg(long, value_enum)]
        family: Family,
        /// Family size [default: permutation 4, matching 6, tree 5, variable 2].
        #[arg(long)]
        size: Option<usize>,
        #[arg(long, default_value_t = 0)]
        event: usize,
        /// R2 trials [default: --samples].
        #[arg(long)]
        r2_trials: Option<u64>,
        #[arg(long, default_value_t = 64)]
        k: usize,
        #[arg(long, default_value_t = 6)]
        l: usize,
        /// Streak experiment runs.
        #[arg(long, default_value_t = 10_000)]
        runs: u64,
        /// Streak experiment resampling schedule.
        #[arg(long, value_enum, default_value_t = Schedule::MaximalSet)]
        schedule: Schedule,
    },
    /// Synthesize resampling oracles for an explicit space, or certify infeasibility.
    Synth { file: PathBuf },
}

fn positive(v: Option<usize>, name: &str) -> Result<Option<usize>, CliError> {
    match v {
        Some(0) => Err(CliError::Input(format!("--{name} must be positive"))),
        v => Ok(v),
    }
}

fn run_options(seed: u64, budget: u64, r: &Repeat) -> RunOptions {
    RunOptions { seed, budget, repeat: r.repeat, tail: r.tail }
}

fn execute(cli: &Cli) -> Result<Output, CliError> {
    if cli.budget == 0 {
        return Err(CliError::Input("--budget must be positive".into()));
    }
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Criteria { file } => commands::criteria(&InstanceFile::load(file)?, cli.exact),
        Command::Run { file, repeat } => {
            let inst = InstanceFile::load(file)?;
            let seed = cli.seed.or(inst.seed()).unwrap_or(0);
            commands::run(&inst, run_options(seed, cli.budget, repeat))
        }
        Command::Latin { n, t, cap, repeat } => {
            if *n == 0 {
                return Err(CliError::Input("--n must be positive".into()));
            }
            let cap = positive(*cap, "cap")?.unwrap_or_else(|| instance::latin_default(*n));
            let t = positive(*t, "t")?.unwrap_or_else(|| instance::latin_default(*n));
            let mut rng = ChaCha8Rng::seed_from_u64(repeat.instance_seed.unwrap_or(seed));
            let app = build_latin_instance(ColorMatrix::random_capped(*n, cap, &mut rng), t);
            commands::solve_app(&app, run_options(seed, cli.budget, repeat))
        }
        Command::RainbowMatching { n, cap, proper, repeat } => {
            if *n < 2 {
                return Err(CliError::Input("--n must be at least 2".into()));
            }
            let graph = if *proper {
                ColoredCompleteGraph::round_robin(2 * n).map_err(|e| CliError::Input(e.to_string()))?
            } else {
                let cap = positive(*cap, "cap")?.unwrap_or_else(|| instance::matching_default_cap(*n));
                let mut rng = ChaCha8Rng::seed_from_u64(repeat.instance_seed.unwrap_or(seed));
                ColoredCompleteGraph::random_capped(2 * n, cap, &mut rng)
            };
            let app = build_rainbow_matching_instance(graph).map_err(|e| CliError::Input(e.to_string()))?;
            commands::solve_app(&app, run_options(seed, cli.budget, repeat))
        }
        Command::RainbowTree { n, t, cap, repeat } => {
            if *n < 2 {
                return Err(CliError::Input("--n must be at least 2".into()));
            }
            let cap = positive(*cap, "cap")?.unwrap_or_else(|| instance::tree_default(*n));
            let t = positive(*t, "t")?.unwrap_or_else(|| instance::tree_default(*n));
            let mut rng = ChaCha8Rng::seed_from_u64(repeat.instance_seed.unwrap_or(seed));
            let graph = ColoredCompleteGraph::random_capped(*n, cap, &mut rng);
            let app = build_rainbow_tree_instance(graph, t).map_err(|e| CliError::Input(e.to_string()))?;
            commands::solve_app(&app, run_options(seed, cli.budget, repeat))
        }
        Command::VerifyOracle { family, size, event, r2_trials, k, l, runs, schedule } => commands::verify(VerifyOptions {
            family: *family,
            size: *size,
            event: *event,
            samples: cli.samples,
            r2_trials: *r2_trials,
            seed,
            k: *k,
            l: *l,
            runs: *runs,
            schedule: (*schedule).into(),
            budget: cli.budget,
        }),
        Command::Synth { file } => {
            let text = std::fs::read_to_string(file).map_err(|e| CliError::Input(format!("{}: {e}", file.display())))?;
            commands::synth(&commands::load_space(&text)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("cannot start worker pool: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(out) => {
            match cli.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&out.json).expect("JSON value prints")),
                Format::Text => println!("{}", out.text),
            }
            ExitCode::from(out.status as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(match e {
                CliError::Input(_) => 3,
                CliError::Internal(_) => 1,
            })
        }
    }
}
