use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mwp_cli::commands::PredictionSource;
use mwp_cli::{
    cmd_datagen, cmd_eval, cmd_grid, cmd_solve_equation, cmd_solve_problem, cmd_split, cmd_train, CliError, RunConfig,
};
use mwp_core::equation::format_rational;
use mwp_core::metrics::{render_table, summary_line, TableRow};
use mwp_core::model::Adapter;

#[derive(Parser)]
#[command(name = "mwp", version, about = "Word problems to equations: data, training, evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Input file or directory (meaning depends on the command).
    #[arg(long = "in", global = true)]
    input: Option<PathBuf>,
    /// Output file or directory (meaning depends on the command).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    beam: Option<usize>,
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic records as JSONL (`--out` file).
    Datagen {
        #[arg(short, long)]
        n: Option<usize>,
        /// `standard` or weights like `add:1,sub:2`.
        #[arg(long)]
        profile: Option<String>,
    },
    /// Split a dataset (`--in` file) into train/validation/test (`--out` dir).
    Split,
    /// Train on the split (`--in` train file or split dir, `--out` run dir).
    Train,
    /// Score predictions on the test split (`--in` test file, `--out` report).
    Eval {
        #[arg(long, conflicts_with_all = ["predictions", "adapter"])]
        checkpoint: Option<PathBuf>,
        /// JSONL `{"id","equation"}` predictions.
        #[arg(long, conflicts_with = "adapter")]
        predictions: Option<PathBuf>,
        /// External predictor command line.
        #[arg(long)]
        adapter: Option<String>,
    },
    /// Solve an equation, or predict and solve one for a problem.
    Solve {
        #[arg(long, conflicts_with = "problem", required_unless_present = "problem")]
        equation: Option<String>,
        #[arg(long)]
        problem: Option<String>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Batch size x epoch grid (`--in` split dir, `--out` run dir).
    Grid {
        /// Train the batch-size rows concurrently.
        #[arg(long)]
        parallel: bool,
    },
}

fn set_input(input: &Path, dir: &mut PathBuf, file: &mut Option<PathBuf>) {
    if input.is_dir() {
        *dir = input.to_path_buf();
    } else {
        *file = Some(input.to_path_buf());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let c = &cli.common;
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(beam) = c.beam {
        cfg.eval.beam = beam;
    }
    if let Some(tol) = c.tolerance {
        cfg.eval.tolerance = tol;
    }
    match cli.command {
        Command::Datagen { n, profile } => {
            if let Some(n) = n {
                cfg.datagen.n = n;
            }
            if let Some(p) = profile {
                cfg.datagen.profile = p;
            }
            if let Some(out) = &c.out {
                cfg.paths.dataset = out.clone();
            }
            cfg.validate()?;
            let counts = cmd_datagen(cfg.datagen.n, cfg.seed, &cfg.class_profile()?, &cfg.paths.dataset)?;
            print!("{counts}");
            println!("wrote {}", cfg.paths.dataset.display());
        }
        Command::Split => {
            if let Some(input) = &c.input {
                cfg.paths.dataset = input.clone();
            }
            if let Some(out) = &c.out {
                cfg.paths.split_dir = out.clone();
            }
            let split = cmd_split(&cfg.paths.dataset, cfg.seed, &cfg.split_ratios()?, &cfg.paths.split_dir)?;
            println!(
                "train {}  validation {}  test {}  -> {}",
                split.train.len(),
                split.validation.len(),
                split.test.len(),
                cfg.paths.split_dir.display()
            );
        }
        Command::Train => {
            if let Some(input) = &c.input {
                set_input(input, &mut cfg.paths.split_dir, &mut cfg.paths.train);
            }
            if let Some(out) = &c.out {
                cfg.paths.run_dir = out.clone();
            }
            cfg.validate()?;
            let outcome = cmd_train(&cfg)?;
            for s in &outcome.history {
                println!("{}", s.to_line());
            }
            println!("wrote {}", outcome.checkpoint.display());
        }
        Command::Eval {
            checkpoint,
            predictions,
            adapter,
        } => {
            if let Some(input) = &c.input {
                set_input(input, &mut cfg.paths.split_dir, &mut cfg.paths.test);
            }
            if let Some(out) = &c.out {
                cfg.paths.report = Some(out.clone());
            }
            cfg.validate()?;
            let source = match (checkpoint, predictions, adapter) {
                (Some(ck), _, _) => PredictionSource::Checkpoint(ck),
                (_, Some(p), _) => PredictionSource::External(Adapter::PredictionFile(p)),
                (_, _, Some(cmd)) => PredictionSource::command(&cmd)?,
                _ => PredictionSource::from_config(&cfg)?,
            };
            let report = cmd_eval(&cfg, &source)?;
            println!("{}", summary_line(&report));
            println!("wrote {}", cfg.report_path().display());
        }
        Command::Solve {
            equation,
            problem,
            checkpoint,
        } => {
            if let Some(eq) = equation {
                println!("{}", format_rational(&cmd_solve_equation(&eq)?));
            } else if let Some(problem) = problem {
                let ck = checkpoint.unwrap_or_else(|| cfg.checkpoint_path());
                let (eq, value) = cmd_solve_problem(&problem, &ck, cfg.eval.beam)?;
                println!("{eq}");
                println!("{}", format_rational(&value));
            }
        }
        Command::Grid { parallel } => {
            if let Some(input) = &c.input {
                cfg.paths.split_dir = input.clone();
            }
            if let Some(out) = &c.out {
                cfg.paths.run_dir = out.clone();
            }
            cfg.grid.parallel |= parallel;
            cfg.validate()?;
            let cells = cmd_grid(&cfg)?;
            let rows: Vec<TableRow> = cells
                .into_iter()
                .map(|cell| TableRow {
                    model: cfg.grid.model_name.clone(),
                    batch: Some(cell.batch_size),
                    epoch: Some(cell.epochs),
                    result: cell.result,
                })
                .collect();
            print!("{}", render_table(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
