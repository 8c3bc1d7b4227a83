use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod cmd;

#[derive(Parser)]
#[command(
    name = "chargesched",
    version,
    about = "EV charging scheduler: offline optimum, online policies and scenario experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance file offline and write the schedule as JSON.
    Solve {
        instance: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run replications of a scenario and write per-replication and summary CSVs.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// oa, orchard, orchard:<q>, avg or eg; repeatable. Defaults to all four.
        #[arg(long = "algo")]
        algos: Vec<String>,
        /// Speed-up for plain `orchard`.
        #[arg(long, default_value_t = chargesched::online::DEFAULT_Q)]
        q: f64,
        #[arg(long, default_value_t = 1000)]
        runs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean ORCHARD ratio over a grid of speed-up factors.
    SweepQ {
        #[arg(long)]
        config: PathBuf,
        /// q_min:q_max:step
        #[arg(long, default_value = "1:3:0.1")]
        sweep: String,
        #[arg(long, default_value_t = 500)]
        runs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write one generated scenario instance as an instance file.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a randomised self-check suite.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Largest number of requests per instance.
        #[arg(long)]
        max_n: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Suite {
    Kkt,
    Oracle,
    OnlineInvariants,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve { instance, out } => cmd::solve(&instance, out.as_deref()),
        Command::Simulate {
            config,
            algos,
            q,
            runs,
            seed,
            out,
        } => cmd::simulate(&config, &algos, q, runs, seed, &out),
        Command::SweepQ {
            config,
            sweep,
            runs,
            seed,
            out,
        } => cmd::sweep_q(&config, &sweep, runs, seed, &out),
        Command::Generate { config, seed, out } => cmd::generate(&config, seed, &out),
        Command::Verify {
            suite,
            count,
            seed,
            max_n,
        } => cmd::verify(suite, count, seed, max_n),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.error);
            ExitCode::from(e.code)
        }
    }
}
