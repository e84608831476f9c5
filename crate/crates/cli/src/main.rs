mod bank_cmd;
mod config;
mod infer;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CliConfig, FileConfig, OutputFormat, Overrides};

/// Infers the third-party libraries (and their versions) a notebook needs.
#[derive(Debug, Parser)]
#[command(name = "envsniff", version, about)]
struct Cli {
    /// TOML config file; command-line flags take precedence over it.
    #[arg(long, global = true, env = "ENVSNIFF_CONFIG")]
    config: Option<PathBuf>,
    /// API bank directory [default: $ENVSNIFF_BANK]
    #[arg(long, global = true)]
    bank: Option<PathBuf>,
    /// Download and unpack cache for `bank add`.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Package index base URL (serves `<base>/pypi/<name>/json`).
    #[arg(long, global = true)]
    index_url: Option<String>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// Pin every library to its newest feasible version.
    #[arg(long, global = true)]
    pin_latest: bool,
    /// Let guesses from `from x import *` take part in resolution.
    #[arg(long, global = true)]
    include_star_imports: bool,
    /// Write the per-usage resolution trace as JSON.
    #[arg(long, global = true)]
    explain: bool,
    /// Output directory (default: next to the notebook).
    #[arg(short = 'o', long = "output", global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true)]
    parallel: Option<usize>,
    /// Keep the validation environment and its work directory.
    #[arg(long, global = true)]
    keep_env: bool,
    /// More logging (-v, -vv).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Manage the API bank.
    #[command(subcommand)]
    Bank(BankCommand),
    /// List the releases providing an API name.
    Query {
        fqn: String,
        /// Keywords the call passes; releases that cannot accept them are left out.
        #[arg(long, value_delimiter = ',')]
        keywords: Vec<String>,
    },
    /// Infer requirements for a notebook, or for every notebook under a directory.
    Infer {
        path: PathBuf,
        /// Restrict the standard-library table to one interpreter line (e.g. 2.7, 3.8).
        #[arg(long)]
        python: Option<String>,
    },
    /// Install a requirements file into a fresh environment and run the notebook.
    Validate {
        notebook: PathBuf,
        requirements: PathBuf,
        /// Interpreter version for the environment.
        #[arg(long)]
        python: Option<String>,
        /// Execution time budget in seconds.
        #[arg(long)]
        time_budget: Option<u64>,
        /// Accept a requirements file without any specifier.
        #[arg(long)]
        allow_empty: bool,
    },
    /// Compare the API sets of two releases of a library.
    Diff {
        library: String,
        v1: String,
        v2: String,
    },
}

#[derive(Debug, Subcommand)]
enum BankCommand {
    /// Ingest releases from the package index.
    Add {
        /// Library names; `name==version` selects one release.
        #[arg(required = true)]
        libraries: Vec<String>,
        /// `all`, `latest`, `last:N`, or a comma-separated version list.
        #[arg(long, default_value = "all")]
        versions: String,
    },
    /// Show the releases in the bank.
    List,
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_env("ENVSNIFF_LOG")
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(level));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let (python, time_budget, allow_empty) = match &cli.command {
        Command::Infer { python, .. } => (python.clone(), None, false),
        Command::Validate {
            python,
            time_budget,
            allow_empty,
            ..
        } => (python.clone(), *time_budget, *allow_empty),
        _ => (None, None, false),
    };
    let config = CliConfig::resolve(
        file,
        Overrides {
            bank: cli.bank,
            cache: cli.cache,
            index_url: cli.index_url,
            format: cli.format,
            pin_latest: cli.pin_latest,
            include_star_imports: cli.include_star_imports,
            allow_empty,
            parallel: cli.parallel,
            keep_env: cli.keep_env,
            python,
            time_budget,
        },
    )?;
    match cli.command {
        Command::Bank(BankCommand::Add { libraries, versions }) => {
            bank_cmd::add(&config, &libraries, &versions)
        }
        Command::Bank(BankCommand::List) => bank_cmd::list(&config),
        Command::Query { fqn, keywords } => bank_cmd::query(&config, &fqn, &keywords),
        Command::Infer { path, .. } => infer::run(&config, &path, cli.output.as_deref(), cli.explain),
        Command::Validate {
            notebook,
            requirements,
            ..
        } => validate::run(&config, &notebook, &requirements),
        Command::Diff { library, v1, v2 } => bank_cmd::diff(&config, &library, &v1, &v2),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
