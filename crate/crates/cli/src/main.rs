use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use comgen_core::neural::CellKind;

use comgen_cli::ablate::run_ablate;
use comgen_cli::config::{ApiCount, RunConfig};
use comgen_cli::report::run_report;
use comgen_cli::stages::{
    run_summarize, stage_evaluate, stage_extract, stage_prepare, stage_rank, stage_train,
    validate_catalog,
};
use comgen_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "comgen",
    about = "Generate comments for Java methods from code, syntax trees, and API documentation context",
    version
)]
struct Cli {
    /// TOML configuration file; flags below override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
    #[arg(long, global = true)]
    work_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Top-ranked APIs to keep: a number or "all".
    #[arg(long, global = true)]
    n_apis: Option<ApiCount>,
    /// Recurrent cell: gru or lstm.
    #[arg(long, global = true)]
    cell: Option<CellKind>,
    #[arg(long, global = true)]
    use_api_context: Option<bool>,
    #[arg(long, global = true)]
    embed_dim: Option<usize>,
    #[arg(long, global = true)]
    hidden_dim: Option<usize>,
    #[arg(long, global = true)]
    dropout: Option<f64>,
    #[arg(long, global = true)]
    lr: Option<f64>,
    #[arg(long, global = true)]
    batch_size: Option<usize>,
    #[arg(long, global = true)]
    max_epochs: Option<usize>,
    #[arg(long, global = true)]
    patience: Option<usize>,
    #[arg(long, global = true)]
    src_vocab_size: Option<usize>,
    #[arg(long, global = true)]
    tgt_vocab_size: Option<usize>,
    #[arg(long, global = true)]
    clip_norm: Option<f64>,
    #[arg(long, global = true)]
    max_decode_len: Option<usize>,
    #[arg(long, global = true)]
    max_code_tokens: Option<usize>,
    #[arg(long, global = true)]
    max_comment_tokens: Option<usize>,
    /// Ablation sweep, comma separated, e.g. "2,3,4,all".
    #[arg(long, global = true, value_delimiter = ',')]
    sweep: Option<Vec<ApiCount>>,
}

#[derive(Subcommand)]
enum Command {
    /// Load, filter, and split the corpus; extract signatures, call
    /// sites, and flattened trees.
    Extract,
    /// Catalog maintenance.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Score extracted call sites against the catalog and keep top n.
    Rank,
    /// Build vocabularies and encode all splits.
    Prepare,
    /// Train the model on the prepared splits.
    Train,
    /// Decode the test split and score it.
    Evaluate,
    /// Generate comments for arbitrary methods with a trained model.
    Summarize {
        /// JSON-lines input with keys id and code.
        #[arg(long)]
        input: PathBuf,
        /// Output path; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Include per-step attention weights in the output.
        #[arg(long)]
        emit_attention: bool,
    },
    /// Run the top-n sweep and the cell/API-context variant grid.
    Ablate,
    /// Score histogram, length-bin means, and run comparison.
    Report {
        /// Decoded outputs of another run for win/tie/loss comparison.
        #[arg(long)]
        compare: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    /// Check catalog schema and index health.
    Validate,
}

fn effective_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let o = &cli.overrides;
    macro_rules! apply {
        ($($field:ident),* $(,)?) => {
            $(if let Some(value) = o.$field.clone() { config.$field = value; })*
        };
    }
    apply!(
        corpus, catalog, work_dir, seed, n_apis, cell, use_api_context, embed_dim, hidden_dim,
        dropout, lr, batch_size, max_epochs, patience, src_vocab_size, tgt_vocab_size, clip_norm,
        max_decode_len, max_code_tokens, max_comment_tokens, sweep,
    );
    Ok(config)
}

fn run(cli: Cli) -> CliResult<()> {
    let config = effective_config(&cli)?;
    match &cli.command {
        Command::Extract => stage_extract(&config),
        Command::Catalog {
            action: CatalogAction::Validate,
        } => {
            if validate_catalog(&config.catalog)? {
                Ok(())
            } else {
                Err(CliError::Validation("catalog has malformed lines".into()))
            }
        }
        Command::Rank => stage_rank(&config),
        Command::Prepare => stage_prepare(&config),
        Command::Train => stage_train(&config).map(|_| ()),
        Command::Evaluate => stage_evaluate(&config).map(|_| ()),
        Command::Summarize {
            input,
            output,
            emit_attention,
        } => run_summarize(&config, input, output.as_deref(), *emit_attention),
        Command::Ablate => run_ablate(&config).map(|_| ()),
        Command::Report { compare } => run_report(&config, compare.as_deref()).map(|_| ()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
