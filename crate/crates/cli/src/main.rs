//! `mctsi`: shared information of Markov chains on trees from the command line.
//!
//! Exit codes: 0 ok, 1 a check failed, 2 parse error, 3 invariant violation,
//! 4 precondition violated, 5 I/O error.

mod bounds;
mod commands;
mod estimate;
mod failure;
mod input;
mod manifest;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use failure::Failure;

#[derive(Parser)]
#[command(name = "mctsi", version, about = "Shared information of Markov chains on trees")]
struct Cli {
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Master seed; overrides the seed of an experiment spec.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "MCTSI_THREADS")]
    threads: Option<usize>,
    /// Tolerance in bits for checks and cross-method agreement.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SiMethod {
    Exact,
    Brute,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Edge,
    Local,
    Global,
    Lemma1,
    Sandwich,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GlobalModeArg {
    /// Exhaustive up to 10 vertices, sampled beyond.
    Auto,
    Exhaustive,
    Sampled,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Bias,
    Concentration,
    Ordering,
    Proposition,
    Complexity,
}

#[derive(Subcommand)]
enum Command {
    /// Load a model file and check every invariant.
    Validate {
        /// Model file, or a built-in name.
        model: String,
    },
    /// Shared information by min edge MI and/or partition brute force.
    Si {
        model: String,
        #[arg(long, value_enum, default_value_t = SiMethod::Both)]
        method: SiMethod,
        /// Largest m for brute-force enumeration.
        #[arg(long, default_value_t = mctsi_core::partition::DEFAULT_ENUMERATION_GUARD)]
        guard: usize,
    },
    /// Markov-property and information-inequality checks.
    Verify {
        /// Model file, tree-pmf file, or a built-in name (including `lemma4`).
        model: String,
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, value_enum, default_value_t = GlobalModeArg::Auto)]
        mode: GlobalModeArg,
        /// Separated triples to test in sampled mode.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Largest independent set in the local checks.
        #[arg(long, default_value_t = mctsi_core::mct::DEFAULT_LOCAL_SET_CAP)]
        local_cap: usize,
    },
    /// Draw i.i.d. joint samples from a model.
    Sample {
        model: String,
        #[arg(long)]
        n: usize,
        /// Directory for samples.csv and the manifest; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a bandit experiment spec and write per-trial and summary CSVs.
    Estimate {
        experiment: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the closed-form bounds over a parameter sweep.
    Bounds {
        #[arg(long, value_enum)]
        family: Family,
        #[command(flatten)]
        params: bounds::BoundParams,
        /// CSV instead of an aligned table.
        #[arg(long)]
        csv: bool,
    },
}

pub struct Ctx {
    pub json: bool,
    pub seed: Option<u64>,
    pub tol: f64,
}

impl Ctx {
    pub fn print_json(&self, value: &serde_json::Value) {
        println!("{}", serde_json::to_string_pretty(value).expect("json serializes"));
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::precondition(format!("cannot start {t} threads: {e}")))?;
    }
    if !(cli.tol >= 0.0) {
        return Err(Failure::precondition(format!("--tol {} must be nonnegative", cli.tol)));
    }
    let ctx = Ctx { json: cli.json, seed: cli.seed, tol: cli.tol };
    match cli.command {
        Command::Validate { model } => commands::validate(&ctx, &model),
        Command::Si { model, method, guard } => commands::si(&ctx, &model, method, guard),
        Command::Verify { model, suite, mode, samples, local_cap } => {
            commands::verify(&ctx, &model, suite, mode, samples, local_cap)
        }
        Command::Sample { model, n, out } => commands::sample(&ctx, &model, n, out.as_deref()),
        Command::Estimate { experiment, out } => estimate::estimate(&ctx, &experiment, &out),
        Command::Bounds { family, params, csv } => bounds::bounds(&ctx, family, &params, csv),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            if json {
                let mut v = serde_json::json!({ "error": f.kind(), "message": f.message });
                if let Some(p) = &f.path {
                    v["path"] = p.clone().into();
                }
                println!("{}", serde_json::to_string_pretty(&v).expect("json serializes"));
            }
            match &f.path {
                Some(p) => eprintln!("error [{}] at {p}: {}", f.kind(), f.message),
                None => eprintln!("error [{}]: {}", f.kind(), f.message),
            }
            ExitCode::from(f.code)
        }
    }
}
