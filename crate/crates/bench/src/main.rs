use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gbcal::{
    read_records, run_experiment, summarize_records, toy_curve, BenchError, ExperimentConfig,
    RunOptions,
};
use gbcal_core::RandomStream;
use rand::RngCore;

#[derive(Parser)]
#[command(
    name = "gbcal",
    version,
    about = "Learning-rate selection studies for generalized-Bayes posteriors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Md,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run a study and append records to the configured CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        resume: bool,
    },
    /// Summarize a records CSV.
    Summarize {
        records: PathBuf,
        #[arg(long, value_enum, default_value = "md")]
        format: Format,
    },
    /// Run a toy-curve study and print its tidy summary.
    ToyCurve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the first draws of a few fixed streams.
    SeedCheck,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("gbcal: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, BenchError> {
    match cli.command {
        Command::Run {
            config,
            workers,
            resume,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let s = run_experiment(&cfg, RunOptions { resume })?;
            eprintln!(
                "wrote {} rows ({} kept from a previous run) to {}; {} degenerate",
                s.written,
                s.skipped,
                cfg.out_path.display(),
                s.degenerate
            );
            Ok(if s.degenerate > 0 { 3 } else { 0 })
        }
        Command::Summarize { records, format } => {
            let table = summarize_records(&read_records(&records)?);
            print!(
                "{}",
                match format {
                    Format::Md => table.to_markdown(),
                    Format::Csv => table.to_csv(),
                }
            );
            Ok(0)
        }
        Command::ToyCurve { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let table = toy_curve(&cfg)?;
            print!("{}", table.to_csv());
            let excluded: usize = table.rows.iter().map(|r| r.excluded).sum();
            Ok(if excluded > 0 { 3 } else { 0 })
        }
        Command::SeedCheck => {
            let base = std::env::var(gbcal::config::SEED_ENV)
                .ok()
                .and_then(|s| s.trim().parse().ok())
                .unwrap_or(0);
            for path in [
                vec![],
                vec![0],
                vec![1, 1000, 100, 0],
                vec![4, 1000, 400, 199],
            ] {
                let s = RandomStream::with_path(base, &path);
                let mut rng = s.rng();
                let draws: Vec<String> =
                    (0..3).map(|_| format!("{:016x}", rng.next_u64())).collect();
                println!("{}:{} {}", base, s.path_string(), draws.join(" "));
            }
            Ok(0)
        }
    }
}
