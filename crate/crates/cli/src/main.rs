//! Command-line frontend for the screening pipeline.
//!
//! Six subcommands cover the pipeline end to end: synth, cohort, featurize,
//! train, eval, explain. Global flags select the config file, seed, and
//! data/output directories; each stage additionally accepts overrides for
//! its input artifacts. Verbosity is controlled through `RUST_LOG`. Errors
//! print as one line, `error[category]: message`, and exit non-zero.

mod config;
mod error;
mod manifest;
mod stages;

use clap::{Parser, Subcommand};
use config::PipelineConfig;
use error::{one_line, CliError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "palscreen", version, about = "Mortality screening pipeline")]
struct Cli {
    /// Config file of `key = value` lines; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; stage seeds are derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for pipeline outputs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Directory holding the patients and events files.
    #[arg(long, global = true)]
    data: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic patients/events pair.
    Synth,
    /// Select prediction points and write the cohort artifacts.
    Cohort {
        #[arg(long)]
        patients: Option<PathBuf>,
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Build the vocabulary and per-split feature matrices.
    Featurize {
        #[arg(long)]
        patients: Option<PathBuf>,
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long)]
        cohort: Option<PathBuf>,
    },
    /// Fit the classifier and write the best snapshot as a checkpoint.
    Train {
        #[arg(long)]
        train_matrix: Option<PathBuf>,
        #[arg(long)]
        val_matrix: Option<PathBuf>,
        #[arg(long)]
        train_labels: Option<PathBuf>,
        #[arg(long)]
        val_labels: Option<PathBuf>,
        #[arg(long)]
        vocab: Option<PathBuf>,
    },
    /// Score the test split and write the metric report and curves.
    Eval {
        #[arg(long)]
        test_matrix: Option<PathBuf>,
        #[arg(long)]
        cohort: Option<PathBuf>,
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Write per-patient influence reports.
    Explain {
        /// Explain this cohort patient; default is the top test scorers.
        #[arg(long)]
        patient: Option<String>,
        /// How many top-scoring test patients to explain.
        #[arg(long, default_value_t = 1)]
        top: usize,
        #[arg(long)]
        patients: Option<PathBuf>,
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long)]
        cohort: Option<PathBuf>,
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Optional code-description table (code<TAB>description).
        #[arg(long)]
        descriptions: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = PipelineConfig::load(
        cli.config.as_deref(),
        cli.seed,
        cli.out.as_deref(),
        cli.data.as_deref(),
    )?;
    match cli.command {
        Command::Synth => stages::cmd_synth(&config),
        Command::Cohort { patients, events } => stages::cmd_cohort(&config, patients, events),
        Command::Featurize {
            patients,
            events,
            cohort,
        } => stages::cmd_featurize(&config, patients, events, cohort),
        Command::Train {
            train_matrix,
            val_matrix,
            train_labels,
            val_labels,
            vocab,
        } => stages::cmd_train(
            &config,
            stages::TrainInputs {
                train_matrix,
                val_matrix,
                train_labels,
                val_labels,
                vocab,
            },
        ),
        Command::Eval {
            test_matrix,
            cohort,
            vocab,
            checkpoint,
        } => stages::cmd_eval(
            &config,
            stages::EvalInputs {
                test_matrix,
                cohort,
                vocab,
                checkpoint,
            },
        ),
        Command::Explain {
            patient,
            top,
            patients,
            events,
            cohort,
            vocab,
            checkpoint,
            descriptions,
        } => stages::cmd_explain(
            &config,
            stages::ExplainInputs {
                patient,
                top,
                patients,
                events,
                cohort,
                vocab,
                checkpoint,
                descriptions,
            },
        ),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", one_line(&e));
            ExitCode::FAILURE
        }
    }
}
