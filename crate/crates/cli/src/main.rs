use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use smbo_cli::{
    aggregate_ranks, read_csv, run_benchmark, run_mo_benchmark, write_csv, write_json, write_mo_csv, write_ranks,
    BenchConfig, Budget, EngineSettings, MoBenchConfig,
};
use smbo_core::FocusConfig;

#[derive(Parser)]
#[command(name = "bench", version, about = "Seeded benchmarks for model-based optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(clap::Args)]
struct EngineArgs {
    /// Random points per focus-search iteration.
    #[arg(long, default_value_t = 1000)]
    focus_points: usize,
    /// Re-estimate Kriging hyperparameters every N iterations.
    #[arg(long, default_value_t = 1)]
    refit_interval: usize,
}

impl EngineArgs {
    fn settings(&self) -> EngineSettings {
        EngineSettings {
            focus: FocusConfig {
                n_points: self.focus_points,
                ..FocusConfig::default()
            },
            refit_interval: self.refit_interval,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run optimizers on test problems and write best-so-far traces.
    Run {
        /// Comma-separated problem names, e.g. ackley5,rosenbrock5.
        #[arg(long, value_delimiter = ',', required = true)]
        problems: Vec<String>,
        /// Comma-separated optimizers: random, mbo, mbo:<crit>, mbo-gp:<crit>, mbo-rf:<crit>.
        #[arg(long, value_delimiter = ',', required = true)]
        optimizers: Vec<String>,
        #[arg(long, default_value_t = 25)]
        init: usize,
        #[arg(long, default_value_t = 50)]
        iters: usize,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// Base seed all run seeds are derived from.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output file; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Add a wall_seconds column (output is then no longer reproducible).
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Average ranks of the optimizers in a result file.
    Rank {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Bi-objective runs on a pair of test problems.
    MoRun {
        /// Two problems sharing a dimension, e.g. sphere5,rosenbrock5.
        #[arg(long)]
        pair: String,
        /// Comma-separated algorithms: parego, smsego, random.
        #[arg(long, value_delimiter = ',', default_value = "parego,smsego,random")]
        algo: Vec<String>,
        /// Total evaluations, absolute or per dimension (44d).
        #[arg(long, default_value = "44d")]
        budget: String,
        /// Initial design size, absolute or per dimension.
        #[arg(long, default_value = "4d")]
        init: String,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Hypervolume reference point `r1,r2`.
        #[arg(long, value_delimiter = ',')]
        reference: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[command(flatten)]
        engine: EngineArgs,
    },
}

fn output(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

/// Runs the command; `Ok(false)` means some run failed.
fn execute(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run {
            problems,
            optimizers,
            init,
            iters,
            seeds,
            seed,
            out,
            workers,
            format,
            timing,
            engine,
        } => {
            let config = BenchConfig {
                problems,
                optimizers,
                init,
                iters,
                seeds,
                base_seed: seed,
                workers,
                timing,
                engine: engine.settings(),
            };
            let outcomes = run_benchmark(&config)?;
            for row in outcomes.iter().filter(|o| o.failed).flat_map(|o| &o.rows) {
                eprintln!(
                    "run failed: {} / {} / seed {}: {}",
                    row.problem,
                    row.optimizer,
                    row.seed,
                    row.failure.as_deref().unwrap_or("")
                );
            }
            let rows: Vec<_> = outcomes.iter().flat_map(|o| o.rows.iter().cloned()).collect();
            let mut w = output(&out)?;
            match format {
                Format::Csv => write_csv(&rows, &mut w, timing)?,
                Format::Json => write_json(&rows, &mut w)?,
            }
            w.flush()?;
            Ok(outcomes.iter().all(|o| !o.failed))
        }
        Command::Rank { input } => {
            let file = File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let ranks = aggregate_ranks(&read_csv(file)?)?;
            write_ranks(&ranks, io::stdout().lock())?;
            Ok(true)
        }
        Command::MoRun {
            pair,
            algo,
            budget,
            init,
            seeds,
            seed,
            reference,
            out,
            workers,
            engine,
        } => {
            let reference = match reference.as_deref() {
                None => None,
                Some(&[r1, r2]) => Some([r1, r2]),
                Some(r) => anyhow::bail!("--reference takes two values, got {}", r.len()),
            };
            let config = MoBenchConfig {
                pair,
                algorithms: algo,
                budget: budget.parse::<Budget>()?,
                init: init.parse::<Budget>()?,
                seeds,
                base_seed: seed,
                reference,
                workers,
                engine: engine.settings(),
            };
            let rows = run_mo_benchmark(&config)?;
            for r in rows.iter().filter(|r| r.failure.is_some()) {
                eprintln!(
                    "run failed: {} / seed {}: {}",
                    r.algorithm,
                    r.seed,
                    r.failure.as_deref().unwrap_or("")
                );
            }
            let mut w = output(&out)?;
            write_mo_csv(&rows, &mut w)?;
            w.flush()?;
            Ok(rows.iter().all(|r| r.failure.is_none()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
